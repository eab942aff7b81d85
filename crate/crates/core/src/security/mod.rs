//! Collective attacks on a three-pulse train with an untrusted measurement
//! device, in the loss-free, error-free regime.
//!
//! An [`AttackModel`] holds Eve's coupling as an isometry `V` from the photon
//! space `span{|1⟩,|2⟩,|3⟩}` into carrier ⊗ ancilla (`d_F · d_E` dimensions,
//! row index `f * d_E + e`), plus Fred's decoding unitaries `U_F^(1)` and
//! `U_F^(2)` on the carrier. The first three carrier basis vectors are the
//! pulse modes Fred hands to Bob.
//!
//! Correct operation requires that each superposition `(|i⟩ ± |j⟩)/√2`
//! leaves carrier and ancilla in a product state and that Fred's unitary for
//! `r = j - i` turns the carrier back into `(|i⟩ ± |j⟩)/√2`. Residuals
//! measure the distance from both conditions; leakage measures how well the
//! ancilla distinguishes the two values of each sifted bit.

pub mod search;

use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Photon dimension; the analysis is for three-pulse trains.
pub const PULSES: usize = 3;
/// Tolerance on the isometry and unitarity invariants.
pub const MODEL_TOLERANCE: f64 = 1e-9;
/// Residual below which a model counts as satisfying all constraints.
pub const FEASIBLE_RESIDUAL: f64 = 1e-6;
/// Leakage allowed for a feasible model.
pub const LEAKAGE_TOLERANCE: f64 = 1e-4;
/// Largest carrier or ancilla dimension accepted.
pub const MAX_DIM: usize = 8;

/// The three announced pairs and the delay that produces each.
pub const PAIRS: [(usize, usize); 3] = [(1, 2), (1, 3), (2, 3)];

pub(crate) fn delay_of(pair: (usize, usize)) -> usize {
    pair.1 - pair.0
}

fn spectator(pair: (usize, usize)) -> usize {
    6 - pair.0 - pair.1
}

/// Constraint label: `eve1`/`fred1` for pair (1,2), `eve2`/`fred2` for
/// (1,3), `eve3`/`fred3` for the delay-1 pair (2,3).
fn constraint_index(pair: (usize, usize)) -> u8 {
    match pair {
        (1, 2) => 1,
        (1, 3) => 2,
        _ => 3,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackModel {
    carrier_dim: usize,
    ancilla_dim: usize,
    isometry: CMatrix,
    fred: [CMatrix; 2],
}

fn is_isometry(m: &CMatrix, tol: f64) -> bool {
    let gram = m.adjoint() * m;
    let id = CMatrix::identity(m.ncols(), m.ncols());
    (gram - id).iter().all(|z| z.norm() <= tol)
}

impl AttackModel {
    pub fn new(carrier_dim: usize, ancilla_dim: usize, isometry: CMatrix, fred: [CMatrix; 2]) -> Result<Self> {
        if !(PULSES..=MAX_DIM).contains(&carrier_dim) {
            return Err(Error::InvalidModel("carrier dimension must lie in 3..=8"));
        }
        if ancilla_dim == 0 || ancilla_dim > MAX_DIM {
            return Err(Error::InvalidModel("ancilla dimension must lie in 1..=8"));
        }
        if isometry.shape() != (carrier_dim * ancilla_dim, PULSES) {
            return Err(Error::InvalidModel("isometry must be (d_F*d_E) x 3"));
        }
        if fred.iter().any(|u| u.shape() != (carrier_dim, carrier_dim)) {
            return Err(Error::InvalidModel("Fred's maps must be d_F x d_F"));
        }
        if !is_isometry(&isometry, MODEL_TOLERANCE) {
            return Err(Error::InvalidModel("isometry columns are not orthonormal"));
        }
        if fred.iter().any(|u| !is_isometry(u, MODEL_TOLERANCE)) {
            return Err(Error::InvalidModel("Fred's maps are not unitary"));
        }
        Ok(AttackModel {
            carrier_dim,
            ancilla_dim,
            isometry,
            fred,
        })
    }

    /// Honest device: the carrier is the photon itself, the ancilla stays in
    /// its fiducial state and Fred does nothing.
    pub fn identity(carrier_dim: usize, ancilla_dim: usize) -> Result<Self> {
        let dims_ok = (PULSES..=MAX_DIM).contains(&carrier_dim) && (1..=MAX_DIM).contains(&ancilla_dim);
        if !dims_ok {
            return Err(Error::InvalidModel("dimensions out of range"));
        }
        let mut v = CMatrix::zeros(carrier_dim * ancilla_dim, PULSES);
        for k in 0..PULSES {
            v[(k * ancilla_dim, k)] = Complex64::new(1.0, 0.0);
        }
        let id = CMatrix::identity(carrier_dim, carrier_dim);
        AttackModel::new(carrier_dim, ancilla_dim, v, [id.clone(), id])
    }

    /// Eve writes the value of `k_1 ⊕ k_2` into a qubit ancilla:
    /// `(|1⟩+|2⟩)/√2 → |1⟩|0⟩`, `(|1⟩-|2⟩)/√2 → |2⟩|1⟩`, `|3⟩ → |3⟩|0⟩`,
    /// with an honest Fred. It leaks pair (1,2) completely and cannot meet
    /// Fred's decoding constraint.
    pub fn pair_copier() -> Self {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let mut v = CMatrix::zeros(6, PULSES);
        // rows: f * 2 + e
        v[(0, 0)] = h; // |1⟩|0⟩
        v[(3, 0)] = h; // |2⟩|1⟩
        v[(0, 1)] = h;
        v[(3, 1)] = -h;
        v[(4, 2)] = Complex64::new(1.0, 0.0); // |3⟩|0⟩
        let id = CMatrix::identity(3, 3);
        AttackModel::new(3, 2, v, [id.clone(), id]).expect("pair copier is a valid model")
    }

    pub fn carrier_dim(&self) -> usize {
        self.carrier_dim
    }

    pub fn ancilla_dim(&self) -> usize {
        self.ancilla_dim
    }

    pub fn isometry(&self) -> &CMatrix {
        &self.isometry
    }

    /// `U_F^(r)` for `r ∈ {1, 2}`.
    pub fn fred_map(&self, delay: usize) -> &CMatrix {
        &self.fred[delay - 1]
    }

    /// `V` applied to a photon input.
    pub fn apply(&self, photon: &CVector) -> CVector {
        &self.isometry * photon
    }

    /// Output reshaped to a `d_F x d_E` matrix `M[f, e]`.
    pub(crate) fn output_matrix(&self, photon: &CVector) -> CMatrix {
        let out = self.apply(photon);
        CMatrix::from_fn(self.carrier_dim, self.ancilla_dim, |f, e| out[f * self.ancilla_dim + e])
    }
}

/// `(|i⟩ + sign |j⟩)/√2` in a `dim`-dimensional space (1-based modes).
pub(crate) fn superposition(dim: usize, i: usize, j: usize, plus: bool) -> CVector {
    let mut v = CVector::zeros(dim);
    v[i - 1] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    v[j - 1] = Complex64::new(if plus { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 }, 0.0);
    v
}

fn basis(dim: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[k - 1] = Complex64::new(1.0, 0.0);
    v
}

fn largest_eigenvalue(h: &CMatrix) -> f64 {
    h.clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Which condition a residual entry measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ConstraintKind {
    /// Carrier and ancilla factorize.
    Eve,
    /// Fred's map recovers the superposition on the carrier.
    Fred,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConstraintEntry {
    pub kind: ConstraintKind,
    pub pair: (usize, usize),
    pub plus: bool,
    pub deviation: f64,
}

impl ConstraintEntry {
    /// Constraint label such as `eve1(+)` or `fred2(-)`.
    pub fn label(&self) -> alloc::string::String {
        let who = match self.kind {
            ConstraintKind::Eve => "eve",
            ConstraintKind::Fred => "fred",
        };
        alloc::format!(
            "{who}{}({})",
            constraint_index(self.pair),
            if self.plus { '+' } else { '-' }
        )
    }
}

/// Deviation norms for every constraint and their maximum.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConstraintResidual {
    pub entries: Vec<ConstraintEntry>,
    pub total: f64,
}

impl ConstraintResidual {
    pub fn satisfied(&self, tol: f64) -> bool {
        self.total <= tol
    }

    /// Entries above `tol`, largest first.
    pub fn violations(&self, tol: f64) -> Vec<&ConstraintEntry> {
        let mut v: Vec<&ConstraintEntry> = self.entries.iter().filter(|e| e.deviation > tol).collect();
        v.sort_by(|a, b| b.deviation.total_cmp(&a.deviation));
        v
    }
}

/// Residuals of all twelve constraints.
///
/// The Eve deviation is `√(1 - σ₁²)`, the distance from the output to its
/// best product approximation (σ₁ the largest Schmidt coefficient). The Fred
/// deviation is `√(1 - ⟨t|ρ_F'|t⟩)`, the norm of the part of Fred's output
/// orthogonal to the target superposition `t`.
pub fn check_constraints(model: &AttackModel) -> ConstraintResidual {
    let mut entries = Vec::with_capacity(12);
    for pair in PAIRS {
        for plus in [true, false] {
            let input = superposition(PULSES, pair.0, pair.1, plus);
            let m = model.output_matrix(&input);
            let rho_f = &m * m.adjoint();
            let eve = libm::sqrt((1.0 - largest_eigenvalue(&rho_f)).max(0.0));
            let decoded = model.fred_map(delay_of(pair)) * &m;
            let target = superposition(model.carrier_dim, pair.0, pair.1, plus);
            let hit = (target.adjoint() * &decoded).norm_squared();
            let fred = libm::sqrt((1.0 - hit).max(0.0));
            entries.push(ConstraintEntry {
                kind: ConstraintKind::Eve,
                pair,
                plus,
                deviation: eve,
            });
            entries.push(ConstraintEntry {
                kind: ConstraintKind::Fred,
                pair,
                plus,
                deviation: fred,
            });
        }
    }
    let total = entries.iter().map(|e| e.deviation).fold(0.0, f64::max);
    ConstraintResidual { entries, total }
}

/// Eve's view of one announced pair.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PairLeakage {
    pub pair: (usize, usize),
    /// `|⟨E_{ij+}|E_{ij-}⟩|` between the ancilla Schmidt vectors.
    pub overlap: f64,
    /// Trace distance between Eve's ancilla states for the two sifted-bit values.
    pub trace_distance: f64,
    /// Probability that Bob's click lands on the announced modes, per bit value.
    pub event_probability: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LeakageReport {
    pub pairs: Vec<PairLeakage>,
    pub max_leakage: f64,
}

/// Unnormalized ancilla state after Fred decodes with `U_F^(r)` and Bob's
/// click lands on modes `i` or `j`, for a given photon input.
fn conditional_ancilla(model: &AttackModel, pair: (usize, usize), photon: &CVector) -> CMatrix {
    let decoded = model.fred_map(delay_of(pair)) * model.output_matrix(photon);
    let de = model.ancilla_dim;
    let mut rho = CMatrix::zeros(de, de);
    for f in [pair.0 - 1, pair.1 - 1] {
        let row = decoded.row(f);
        for a in 0..de {
            for b in 0..de {
                rho[(a, b)] += row[a] * row[b].conj();
            }
        }
    }
    rho
}

fn top_eigenvector(h: &CMatrix) -> CVector {
    let eig = h.clone().symmetric_eigen();
    let (idx, _) =
        eig.eigenvalues.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |best, (k, &v)| if v > best.1 { (k, v) } else { best },
        );
    eig.eigenvectors.column(idx).into_owned()
}

fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let diff = a - b;
    let sum: f64 = diff.symmetric_eigenvalues().iter().map(|v| v.abs()).sum();
    (0.5 * sum).clamp(0.0, 1.0)
}

/// Eve's conditional ancilla states for every announced pair.
///
/// For pair `(i, j)` and bit value `b`, Alice's photon averaged over the
/// spectator bit is `(2/3) P[(|i⟩ + (-1)^b |j⟩)/√2] + (1/3) P[|l⟩]`. The
/// ancilla state is taken after Fred's decoding for `r = j - i`, restricted
/// to Bob's click landing on `i` or `j`, and normalized.
pub fn eve_leakage(model: &AttackModel) -> LeakageReport {
    let mut pairs = Vec::with_capacity(3);
    for pair in PAIRS {
        let spectator_term =
            conditional_ancilla(model, pair, &basis(PULSES, spectator(pair))) / Complex64::new(3.0, 0.0);
        let mut states = [CMatrix::zeros(0, 0), CMatrix::zeros(0, 0)];
        let mut probs = [0.0; 2];
        for (b, plus) in [(0usize, true), (1, false)] {
            let photon = superposition(PULSES, pair.0, pair.1, plus);
            let rho = conditional_ancilla(model, pair, &photon) * Complex64::new(2.0 / 3.0, 0.0) + &spectator_term;
            let tr = rho.trace().re;
            probs[b] = tr;
            states[b] = if tr > 1e-12 { rho / Complex64::new(tr, 0.0) } else { rho };
        }
        let trace_distance = if probs.iter().all(|p| *p > 1e-12) {
            trace_distance(&states[0], &states[1])
        } else {
            0.0
        };
        let schmidt = |plus: bool| {
            let m = model.output_matrix(&superposition(PULSES, pair.0, pair.1, plus));
            // Ancilla reduced state of the pure output: M^T M^*.
            let rho_e = m.transpose() * m.map(|z| z.conj());
            top_eigenvector(&rho_e)
        };
        let (ep, em) = (schmidt(true), schmidt(false));
        let overlap = ep.dotc(&em).norm().clamp(0.0, 1.0);
        pairs.push(PairLeakage {
            pair,
            overlap,
            trace_distance,
            event_probability: probs,
        });
    }
    let max_leakage = pairs.iter().map(|p| p.trace_distance).fold(0.0, f64::max);
    LeakageReport { pairs, max_leakage }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}

/// Matrix with i.i.d. complex Gaussian entries.
pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Orthonormalizes the columns of a full-column-rank matrix (QR, with the
/// phases of R's diagonal folded back so the map is Haar-distributed on
/// Gaussian input).
pub fn orthonormalize(m: CMatrix) -> CMatrix {
    let qr = m.qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..q.ncols() {
        let d = r[(k, k)];
        let n = d.norm();
        if n > 0.0 {
            let phase = d / n;
            for row in 0..q.nrows() {
                q[(row, k)] *= phase;
            }
        }
    }
    q
}

pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    orthonormalize(gaussian_matrix(dim, dim, rng))
}

fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(dim, |_, _| complex_gaussian(rng));
    let n = v.norm();
    v / Complex64::new(n, 0.0)
}

fn random_phase<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(1.0, rng.random_range(0.0..core::f64::consts::TAU))
}

/// Samples a model that meets every constraint exactly.
///
/// Eve's map sends `|k⟩` to `e^{iφ} W†|k⟩ ⊗ |E⟩` for a random unitary `W`
/// and ancilla state `|E⟩`; Fred decodes delay 1 with `W` and delay 2 with
/// `D W`, where `D` multiplies `|1⟩` and `|3⟩` by a common phase and acts as
/// an arbitrary unitary on the remaining carrier modes. Inner products of
/// the three superposition pairs are preserved by construction.
pub fn random_feasible_model<R: Rng + ?Sized>(
    carrier_dim: usize,
    ancilla_dim: usize,
    rng: &mut R,
) -> Result<AttackModel> {
    if !(PULSES..=MAX_DIM).contains(&carrier_dim) || !(1..=MAX_DIM).contains(&ancilla_dim) {
        return Err(Error::InvalidModel("dimensions out of range"));
    }
    let w = random_unitary(carrier_dim, rng);
    let anc = random_unit_vector(ancilla_dim, rng);
    let global = random_phase(rng);
    let w_dag = w.adjoint();
    let mut v = CMatrix::zeros(carrier_dim * ancilla_dim, PULSES);
    for k in 0..PULSES {
        for f in 0..carrier_dim {
            for e in 0..ancilla_dim {
                v[(f * ancilla_dim + e, k)] = global * w_dag[(f, k)] * anc[e];
            }
        }
    }
    // D: common phase on modes 1 and 3, random unitary on the rest.
    let rest: Vec<usize> = (0..carrier_dim).filter(|&f| f != 0 && f != 2).collect();
    let inner = random_unitary(rest.len(), rng);
    let theta = random_phase(rng);
    let mut d = CMatrix::zeros(carrier_dim, carrier_dim);
    d[(0, 0)] = theta;
    d[(2, 2)] = theta;
    for (a, &ra) in rest.iter().enumerate() {
        for (b, &rb) in rest.iter().enumerate() {
            d[(ra, rb)] = inner[(a, b)];
        }
    }
    let u2 = &d * &w;
    AttackModel::new(carrier_dim, ancilla_dim, v, [w, u2])
}

/// Outcome of checking one model against the theorem.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelVerdict {
    pub residual: f64,
    pub max_leakage: f64,
    /// Residual within tolerance.
    pub feasible: bool,
    /// Feasible and leakage within tolerance.
    pub pass: bool,
    /// Labels of violated constraints, largest deviation first.
    pub violated: Vec<alloc::string::String>,
}

pub fn judge(model: &AttackModel) -> ModelVerdict {
    let residual = check_constraints(model);
    let leakage = eve_leakage(model);
    let feasible = residual.satisfied(FEASIBLE_RESIDUAL);
    ModelVerdict {
        residual: residual.total,
        max_leakage: leakage.max_leakage,
        feasible,
        pass: feasible && leakage.max_leakage <= LEAKAGE_TOLERANCE,
        violated: residual
            .violations(FEASIBLE_RESIDUAL)
            .iter()
            .map(|e| e.label())
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TheoremReport {
    pub trials: u64,
    pub passes: u64,
    pub worst_residual: f64,
    pub worst_leakage: f64,
    pub verdicts: Vec<ModelVerdict>,
    pub all_pass: bool,
}

impl TheoremReport {
    pub fn from_verdicts(verdicts: Vec<ModelVerdict>) -> Self {
        let passes = verdicts.iter().filter(|v| v.pass).count() as u64;
        TheoremReport {
            trials: verdicts.len() as u64,
            passes,
            worst_residual: verdicts.iter().map(|v| v.residual).fold(0.0, f64::max),
            worst_leakage: verdicts.iter().map(|v| v.max_leakage).fold(0.0, f64::max),
            all_pass: passes == verdicts.len() as u64,
            verdicts,
        }
    }
}

/// Trial `index` of the theorem check: a random feasible model at the
/// default dimensions `d_F = 3`, `d_E = 2`, drawn from stream `index`.
pub fn theorem_trial(carrier_dim: usize, ancilla_dim: usize, master_seed: u64, index: u64) -> Result<ModelVerdict> {
    let mut rng = crate::seeding::stream_rng(master_seed, index);
    Ok(judge(&random_feasible_model(carrier_dim, ancilla_dim, &mut rng)?))
}

pub fn verify_theorem(carrier_dim: usize, ancilla_dim: usize, trials: u64, master_seed: u64) -> Result<TheoremReport> {
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    let verdicts = (0..trials)
        .map(|k| theorem_trial(carrier_dim, ancilla_dim, master_seed, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(TheoremReport::from_verdicts(verdicts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::stream_rng;

    #[test]
    fn identity_model_is_clean() {
        for (df, de) in [(3, 1), (3, 2), (5, 3)] {
            let m = AttackModel::identity(df, de).unwrap();
            let r = check_constraints(&m);
            assert!(r.total < 1e-15, "{r:?}");
            let l = eve_leakage(&m);
            assert!(l
                .pairs
                .iter()
                .all(|p| (p.overlap - 1.0).abs() < 1e-12 && p.trace_distance < 1e-15));
            assert!(judge(&m).pass);
        }
    }

    #[test]
    fn flipped_fred_fails_its_constraint() {
        let m = AttackModel::identity(3, 2).unwrap();
        // Swap the sign of |2⟩ in U_F^(1): |1⟩ ± |2⟩ becomes |1⟩ ∓ |2⟩.
        let mut u1 = CMatrix::identity(3, 3);
        u1[(1, 1)] = Complex64::new(-1.0, 0.0);
        let flipped = AttackModel::new(3, 2, m.isometry().clone(), [u1, m.fred_map(2).clone()]).unwrap();
        let r = check_constraints(&flipped);
        for e in &r.entries {
            let expect = if e.kind == ConstraintKind::Fred && e.pair != (1, 3) {
                1.0
            } else {
                0.0
            };
            assert!((e.deviation - expect).abs() < 1e-12, "{} = {}", e.label(), e.deviation);
        }
        assert_eq!(r.total, 1.0);
    }

    #[test]
    fn pair_copier_leaks_and_is_caught() {
        let m = AttackModel::pair_copier();
        let l = eve_leakage(&m);
        let p12 = &l.pairs[0];
        assert_eq!(p12.pair, (1, 2));
        assert!((p12.trace_distance - 1.0).abs() < 1e-12);
        assert!(p12.overlap < 1e-12);
        let r = check_constraints(&m);
        let fred1 = r
            .entries
            .iter()
            .find(|e| e.kind == ConstraintKind::Fred && e.pair == (1, 2))
            .unwrap();
        assert!((fred1.deviation - FRAC_1_SQRT_2).abs() < 1e-12);
        let v = judge(&m);
        assert!(!v.pass && !v.feasible);
        assert!(v.violated.iter().any(|s| s.starts_with("fred1")));
    }

    #[test]
    fn one_dimensional_ancilla_never_leaks() {
        let mut rng = stream_rng(3, 0);
        for _ in 0..20 {
            let v = orthonormalize(gaussian_matrix(3, 3, &mut rng));
            let m = AttackModel::new(3, 1, v, [random_unitary(3, &mut rng), random_unitary(3, &mut rng)]).unwrap();
            assert!(eve_leakage(&m).max_leakage < 1e-12);
        }
    }

    #[test]
    fn model_validation() {
        let id = CMatrix::identity(3, 3);
        assert!(AttackModel::new(2, 1, CMatrix::zeros(2, 3), [id.clone(), id.clone()]).is_err());
        assert!(AttackModel::new(3, 1, CMatrix::zeros(3, 3), [id.clone(), id.clone()]).is_err());
        assert!(AttackModel::new(3, 2, CMatrix::zeros(3, 3), [id.clone(), id.clone()]).is_err());
        let mut not_unitary = id.clone();
        not_unitary[(0, 0)] = Complex64::new(2.0, 0.0);
        assert!(AttackModel::new(3, 1, id.clone(), [not_unitary, id.clone()]).is_err());
        assert!(AttackModel::identity(9, 1).is_err());
    }

    #[test]
    fn feasible_models_are_feasible() {
        let report = verify_theorem(3, 2, 30, 17).unwrap();
        assert!(report.all_pass, "{report:?}");
        assert!(report.worst_residual < 1e-7);
        for (df, de) in [(4, 1), (6, 3), (8, 8)] {
            let m = random_feasible_model(df, de, &mut stream_rng(1, df as u64)).unwrap();
            assert!(judge(&m).pass);
        }
    }
}
