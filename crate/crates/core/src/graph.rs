//! Relative-phase graphs: a parity-augmented union-find and the random edge
//! models used to study its components.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::{Error, Result};

/// One observed relative phase: `parity = s_i ⊕ s_j` for pulses `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PairObservation {
    pub i: usize,
    pub j: usize,
    pub parity: u8,
}

impl PairObservation {
    pub fn new(i: usize, j: usize, parity: u8) -> Result<Self> {
        if i == 0 || i >= j {
            return Err(Error::param("(i, j)", "need 1 <= i < j"));
        }
        if parity > 1 {
            return Err(Error::param("parity", "must be 0 or 1"));
        }
        Ok(PairObservation { i, j, parity })
    }
}

/// Union-find where every node also stores the XOR of edge labels on the
/// way to its parent. Nodes are 0-based here.
#[derive(Debug, Clone)]
pub struct ParityDsu {
    parent: Vec<usize>,
    rank: Vec<u8>,
    parity: Vec<u8>,
    size: Vec<usize>,
}

impl ParityDsu {
    pub fn new(n: usize) -> Self {
        ParityDsu {
            parent: (0..n).collect(),
            rank: vec![0; n],
            parity: vec![0; n],
            size: vec![1; n],
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Root of `x` and the parity of `x` relative to it. Compresses the path.
    pub fn find(&mut self, x: usize) -> (usize, u8) {
        let mut root = x;
        let mut acc = 0u8;
        while self.parent[root] != root {
            acc ^= self.parity[root];
            root = self.parent[root];
        }
        // Second pass: point every node on the path at the root.
        let mut node = x;
        let mut to_root = acc;
        while self.parent[node] != root && node != root {
            let next = self.parent[node];
            let next_parity = to_root ^ self.parity[node];
            self.parent[node] = root;
            self.parity[node] = to_root;
            node = next;
            to_root = next_parity;
        }
        (root, acc)
    }

    /// Read-only variant of [`find`](Self::find).
    pub fn find_immutable(&self, x: usize) -> (usize, u8) {
        let mut root = x;
        let mut acc = 0u8;
        while self.parent[root] != root {
            acc ^= self.parity[root];
            root = self.parent[root];
        }
        (root, acc)
    }

    /// Records `label(a) ⊕ label(b) = parity`. Returns whether two
    /// components were merged; a contradiction with what is already implied
    /// is an error and leaves the structure unchanged.
    pub fn union(&mut self, a: usize, b: usize, parity: u8) -> Result<bool> {
        let (ra, pa) = self.find(a);
        let (rb, pb) = self.find(b);
        if ra == rb {
            let known = pa ^ pb;
            if known != parity {
                return Err(Error::Consistency {
                    i: a.min(b) + 1,
                    j: a.max(b) + 1,
                    known,
                    observed: parity,
                });
            }
            return Ok(false);
        }
        let link = pa ^ pb ^ parity;
        let (child, root) = if self.rank[ra] < self.rank[rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[child] = root;
        self.parity[child] = link;
        self.size[root] += self.size[child];
        if self.rank[ra] == self.rank[rb] {
            self.rank[root] += 1;
        }
        Ok(true)
    }

    /// `label(a) ⊕ label(b)` when both lie in one component.
    pub fn query(&mut self, a: usize, b: usize) -> Option<u8> {
        let (ra, pa) = self.find(a);
        let (rb, pb) = self.find(b);
        (ra == rb).then_some(pa ^ pb)
    }

    pub fn component_size(&mut self, x: usize) -> usize {
        let (r, _) = self.find(x);
        self.size[r]
    }

    pub fn largest_component_size(&self) -> usize {
        (0..self.len())
            .filter(|&x| self.parent[x] == x)
            .map(|x| self.size[x])
            .max()
            .unwrap_or(0)
    }
}

/// Known relative phases among `n` pulses, closed under XOR transitivity.
#[derive(Debug, Clone)]
pub struct PhaseGraph {
    n: usize,
    dsu: ParityDsu,
    edge_log: Vec<PairObservation>,
}

/// A connected component with every member's phase relative to its
/// representative, the smallest member.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComponentInfo {
    pub members: Vec<usize>,
    pub phase_vs_rep: Vec<u8>,
}

impl ComponentInfo {
    pub fn new(members: Vec<usize>, phase_vs_rep: Vec<u8>) -> Result<Self> {
        if members.is_empty() || members.len() != phase_vs_rep.len() {
            return Err(Error::param(
                "members",
                "need one phase per member and at least one member",
            ));
        }
        if members.windows(2).any(|w| w[0] >= w[1]) || members[0] == 0 {
            return Err(Error::param("members", "must be strictly increasing 1-based indices"));
        }
        if phase_vs_rep[0] != 0 || phase_vs_rep.iter().any(|p| *p > 1) {
            return Err(Error::param("phase_vs_rep", "binary, and 0 at the representative"));
        }
        Ok(ComponentInfo { members, phase_vs_rep })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn representative(&self) -> usize {
        self.members[0]
    }

    /// Phase of pulse `k` relative to the representative, if `k` is a member.
    pub fn phase(&self, k: usize) -> Option<u8> {
        self.members.binary_search(&k).ok().map(|idx| self.phase_vs_rep[idx])
    }
}

impl PhaseGraph {
    pub fn new(n: usize) -> Self {
        PhaseGraph {
            n,
            dsu: ParityDsu::new(n),
            edge_log: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_log(&self) -> &[PairObservation] {
        &self.edge_log
    }

    pub fn add(&mut self, obs: PairObservation) -> Result<()> {
        if obs.i == 0 || obs.i >= obs.j || obs.j > self.n {
            return Err(Error::param("observation", "indices must satisfy 1 <= i < j <= n"));
        }
        self.dsu.union(obs.i - 1, obs.j - 1, obs.parity)?;
        self.edge_log.push(obs);
        Ok(())
    }

    /// `s_u ⊕ s_v` when `u` and `v` are connected.
    pub fn query(&mut self, u: usize, v: usize) -> Option<u8> {
        if u == 0 || v == 0 || u > self.n || v > self.n {
            return None;
        }
        self.dsu.query(u - 1, v - 1)
    }

    /// All components, each sorted, ordered by their smallest member.
    pub fn components(&self) -> Vec<ComponentInfo> {
        let mut slot = vec![usize::MAX; self.n];
        let mut comps: Vec<ComponentInfo> = Vec::new();
        for x in 0..self.n {
            let (root, par) = self.dsu.find_immutable(x);
            if slot[root] == usize::MAX {
                slot[root] = comps.len();
                comps.push(ComponentInfo {
                    members: Vec::new(),
                    phase_vs_rep: Vec::new(),
                });
            }
            let c = &mut comps[slot[root]];
            c.members.push(x + 1);
            c.phase_vs_rep.push(par);
        }
        // Nodes were visited in increasing order, so members are sorted and
        // the first member is the smallest; rebase phases on it.
        for c in &mut comps {
            let base = c.phase_vs_rep[0];
            for p in &mut c.phase_vs_rep {
                *p ^= base;
            }
        }
        comps
    }

    /// Largest component; ties go to the one with the smallest representative.
    pub fn largest_component(&self) -> Option<ComponentInfo> {
        let mut best: Option<ComponentInfo> = None;
        for c in self.components() {
            if best.as_ref().is_none_or(|b| c.len() > b.len()) {
                best = Some(c);
            }
        }
        best
    }

    pub fn largest_component_size(&self) -> usize {
        self.dsu.largest_component_size()
    }
}

/// Builds the graph from a batch of observations.
pub fn build_phase_graph(observations: &[PairObservation], n: usize) -> Result<PhaseGraph> {
    let mut g = PhaseGraph::new(n);
    for obs in observations {
        g.add(*obs)?;
    }
    Ok(g)
}

/// Random edge model for unlabeled component studies.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EdgeModel {
    /// G(n, p): each of the C(n,2) pairs independently with probability p.
    Probability(f64),
    /// M pairs drawn independently and uniformly (repeats allowed), as in a
    /// passive-interference harvest of M photons.
    Count(u64),
}

impl EdgeModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EdgeModel::Probability(p) if !(0.0..=1.0).contains(&p) => {
                Err(Error::param("p", "edge probability must lie in [0, 1]"))
            }
            _ => Ok(()),
        }
    }
}

/// Uniform unordered pair `i < j` from `1..=n` (1-based).
pub fn uniform_pair<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (usize, usize) {
    let a = rng.random_range(1..=n);
    let mut b = rng.random_range(1..n);
    if b >= a {
        b += 1;
    }
    (a.min(b), a.max(b))
}

/// Samples a G(n, p) edge list by geometric skipping over the pair
/// sequence `(1,2), (1,3), …, (n-1,n)`; cost is linear in `n` plus edges.
pub fn gnp_edges<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    if n < 2 || p <= 0.0 {
        return edges;
    }
    let log_q = libm::log1p(-p);
    // 0-based row i holds pairs (i, i+1..n-1)
    let mut row = 0usize;
    let mut col_off = 0usize;
    let mut first = true;
    loop {
        let skip = if p >= 1.0 {
            0
        } else {
            let u: f64 = 1.0 - rng.random::<f64>();
            let s = libm::floor(libm::log(u) / log_q);
            if s > 1e15 {
                break;
            }
            s as usize
        };
        let mut step = if first { skip } else { skip + 1 };
        first = false;
        loop {
            let row_len = n - 1 - row;
            if col_off + step < row_len {
                col_off += step;
                break;
            }
            step -= row_len - col_off;
            col_off = 0;
            row += 1;
            if row >= n - 1 {
                return edges;
            }
        }
        edges.push((row + 1, row + 2 + col_off));
    }
    edges
}

/// Largest component size of one random graph on `n` nodes.
pub fn sample_largest_component<R: Rng + ?Sized>(n: usize, model: EdgeModel, rng: &mut R) -> Result<usize> {
    model.validate()?;
    if n == 0 {
        return Err(Error::param("n", "need at least one node"));
    }
    let mut dsu = ParityDsu::new(n);
    match model {
        EdgeModel::Probability(p) => {
            for (i, j) in gnp_edges(n, p, rng) {
                dsu.union(i - 1, j - 1, 0)?;
            }
        }
        EdgeModel::Count(m) => {
            if n < 2 && m > 0 {
                return Err(Error::param("M", "edges need at least two nodes"));
            }
            for _ in 0..m {
                let (i, j) = uniform_pair(n, rng);
                dsu.union(i - 1, j - 1, 0)?;
            }
        }
    }
    Ok(dsu.largest_component_size())
}
