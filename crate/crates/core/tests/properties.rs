use std::collections::VecDeque;

use proptest::prelude::*;
use rrdps_core::analysis::difference_coverage;
use rrdps_core::attack1::difference_table;
use rrdps_core::graph::{ComponentInfo, PairObservation, PhaseGraph};
use rrdps_core::protocol::{encode_state, KeyBits};

/// Parity of every node relative to `start` by breadth-first search over the
/// first consistent labeling, or the first conflicting edge.
fn bfs_parities(n: usize, edges: &[(usize, usize, u8)], start: usize) -> Vec<Option<u8>> {
    let mut adj = vec![Vec::new(); n + 1];
    for &(a, b, p) in edges {
        adj[a].push((b, p));
        adj[b].push((a, p));
    }
    let mut label = vec![None; n + 1];
    label[start] = Some(0u8);
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        let lu = label[u].unwrap();
        for &(v, p) in &adj[u] {
            if label[v].is_none() {
                label[v] = Some(lu ^ p);
                queue.push_back(v);
            }
        }
    }
    label
}

fn has_conflict(n: usize, edges: &[(usize, usize, u8)]) -> bool {
    let mut seen = vec![false; n + 1];
    for s in 1..=n {
        if seen[s] {
            continue;
        }
        let label = bfs_parities(n, edges, s);
        for v in 1..=n {
            seen[v] |= label[v].is_some();
        }
        for &(a, b, p) in edges {
            if let (Some(la), Some(lb)) = (label[a], label[b]) {
                if la ^ lb != p {
                    return true;
                }
            }
        }
    }
    false
}

fn edge_strategy(max_n: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize, u8)>)> {
    (2..=max_n).prop_flat_map(|n| {
        let edge =
            (1..=n, 1..=n, 0u8..2).prop_filter_map("self loop", |(a, b, p)| (a != b).then(|| (a.min(b), a.max(b), p)));
        (Just(n), prop::collection::vec(edge, 0..3 * n))
    })
}

proptest! {
    #[test]
    fn parity_queries_follow_xor_transitivity(
        (n, raw) in edge_strategy(50),
        hidden in prop::collection::vec(0u8..2, 50),
    ) {
        // Labels from a hidden key are always consistent.
        let edges: Vec<_> = raw.iter().map(|&(a, b, _)| (a, b, hidden[a - 1] ^ hidden[b - 1])).collect();
        let mut g = PhaseGraph::new(n);
        for &(a, b, p) in &edges {
            g.add(PairObservation::new(a, b, p).unwrap()).unwrap();
        }
        for u in 1..=n {
            let oracle = bfs_parities(n, &edges, u);
            for (v, expected) in oracle.iter().enumerate().skip(1) {
                prop_assert_eq!(g.query(u, v), *expected);
            }
        }
        for u in 1..=n.min(8) {
            for v in 1..=n.min(8) {
                for w in 1..=n.min(8) {
                    if let (Some(uv), Some(vw)) = (g.query(u, v), g.query(v, w)) {
                        prop_assert_eq!(g.query(u, w), Some(uv ^ vw));
                    }
                }
            }
        }
    }

    #[test]
    fn contradictions_are_detected_exactly((n, edges) in edge_strategy(20)) {
        let mut g = PhaseGraph::new(n);
        let mut accepted = Vec::new();
        let mut failed = false;
        for &(a, b, p) in &edges {
            match g.add(PairObservation::new(a, b, p).unwrap()) {
                Ok(()) => accepted.push((a, b, p)),
                Err(_) => {
                    failed = true;
                    // The rejected edge must close an odd cycle among the accepted ones.
                    let mut with = accepted.clone();
                    with.push((a, b, p));
                    prop_assert!(has_conflict(n, &with));
                    break;
                }
            }
        }
        if !failed {
            prop_assert!(!has_conflict(n, &edges));
        }
    }

    #[test]
    fn coverage_never_drops_when_a_member_joins(
        n in 2usize..200,
        seeds in prop::collection::vec(any::<u32>(), 1..30),
        extra in any::<u32>(),
    ) {
        let mut members: Vec<usize> = seeds.iter().map(|&s| 1 + s as usize % n).collect();
        members.sort_unstable();
        members.dedup();
        let before_points = difference_coverage(&members, n);
        let comp = ComponentInfo::new(members.clone(), vec![0; members.len()]).unwrap();
        let before = difference_table(&comp, n).unwrap().coverage();
        prop_assert!((before - before_points).abs() < 1e-15);

        let newcomer = 1 + extra as usize % n;
        let mut grown = members.clone();
        if !grown.contains(&newcomer) {
            grown.push(newcomer);
            grown.sort_unstable();
        }
        let comp = ComponentInfo::new(grown.clone(), vec![0; grown.len()]).unwrap();
        let after = difference_table(&comp, n).unwrap().coverage();
        prop_assert!(after >= before);
        prop_assert!((0.0..=1.0).contains(&after));
    }

    #[test]
    fn encoded_states_are_normalized(bits in prop::collection::vec(0u8..2, 2..256)) {
        let state = encode_state(&KeyBits::new(bits).unwrap());
        prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
    }
}
