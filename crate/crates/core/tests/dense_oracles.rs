//! Dense linear-algebra references for the entangling attack and the
//! collective-attack constraint checks.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rrdps_core::attack2::{ancilla_outcome_probabilities, collapse, entangle};
use rrdps_core::protocol::{encode_state, generate_key_bits, KeyBits, Outcome, Pairing};
use rrdps_core::security::{
    check_constraints, eve_leakage, random_feasible_model, random_unitary, AttackModel, ConstraintKind, PAIRS,
};
use rrdps_core::seeding::stream_rng;

type CMat = DMatrix<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `Σ c_k |k⟩_A |k⟩_E` as an `L²` vector with index `a * L + e`.
fn joint_dense(amps: &[Complex64]) -> CMat {
    let len = amps.len();
    let mut v = CMat::zeros(len * len, 1);
    for (k, a) in amps.iter().enumerate() {
        v[(k * len + k, 0)] = *a;
    }
    v
}

/// Identity on the photon tensored with `|w⟩⟨w|` on the ancilla.
fn ancilla_projector(len: usize, w: &CMat) -> CMat {
    let p = w * w.adjoint();
    CMat::identity(len, len).kronecker(&p)
}

fn ancilla_vector(len: usize, outcome: Outcome) -> CMat {
    let mut w = CMat::zeros(len, 1);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match outcome {
        Outcome::Pair { i, j, plus } => {
            w[(i - 1, 0)] = c(s);
            w[(j - 1, 0)] = c(if plus { s } else { -s });
        }
        Outcome::Unpaired(k) => w[(k - 1, 0)] = c(1.0),
    }
    w
}

#[test]
fn ancilla_measurement_matches_projector_enumeration() {
    let len = 4;
    for mask in 0..16u32 {
        let key = KeyBits::new((0..len).map(|b| ((mask >> b) & 1) as u8).collect()).unwrap();
        let joint = entangle(&encode_state(&key)).unwrap();
        let dense = joint_dense(joint.amplitudes());
        for delay in 1..len {
            for offset in 0..delay {
                let pairing = Pairing::new(len, delay, offset).unwrap();
                for (outcome, p) in ancilla_outcome_probabilities(&joint, &pairing) {
                    let proj = ancilla_projector(len, &ancilla_vector(len, outcome));
                    let after = &proj * &dense;
                    let expected = after.norm_squared();
                    assert!((p - expected).abs() < 1e-12, "key={mask:04b} r={delay} {outcome:?}");
                    // The photon left behind must match the collapsed residual.
                    if let (Some(res), Outcome::Pair { i, j, .. }) = (collapse(&joint, outcome), outcome) {
                        let w = ancilla_vector(len, outcome);
                        let norm = expected.sqrt();
                        for (slot, mode) in [(0, i), (1, j)] {
                            let mut amp = Complex64::new(0.0, 0.0);
                            for e in 0..len {
                                amp += w[(e, 0)].conj() * after[((mode - 1) * len + e, 0)];
                            }
                            assert!((amp / norm - res.amps[slot]).norm() < 1e-12);
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn photon_marginal_is_maximally_mixed() {
    let mut rng = stream_rng(21, 0);
    for len in 2..=8usize {
        for _ in 0..5 {
            let key = generate_key_bits(len, &mut rng).unwrap();
            let joint = entangle(&encode_state(&key)).unwrap();
            assert!((joint.norm_sqr() - 1.0).abs() < 1e-12);
            let psi = joint_dense(joint.amplitudes());
            let rho = &psi * psi.adjoint();
            let mut reduced = CMat::zeros(len, len);
            for a in 0..len {
                for b in 0..len {
                    for e in 0..len {
                        reduced[(a, b)] += rho[(a * len + e, b * len + e)];
                    }
                }
            }
            let target = CMat::identity(len, len) * c(1.0 / len as f64);
            assert!((reduced - target).norm() < 1e-12, "L={len}");
        }
    }
}

fn superposition(dim: usize, i: usize, j: usize, plus: bool) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = CMat::zeros(dim, 1);
    v[(i - 1, 0)] = c(s);
    v[(j - 1, 0)] = c(if plus { s } else { -s });
    v
}

/// Carrier density matrix after tracing out the ancilla, built from the full
/// output projector.
fn carrier_state(out: &CMat, df: usize, de: usize) -> CMat {
    let full = out * out.adjoint();
    CMat::from_fn(df, df, |f, g| (0..de).map(|e| full[(f * de + e, g * de + e)]).sum())
}

fn random_model(seed: u64, df: usize, de: usize) -> AttackModel {
    let mut rng = stream_rng(seed, 0);
    let u = random_unitary(df * de, &mut rng);
    let v = u.columns(0, 3).into_owned();
    AttackModel::new(df, de, v, [random_unitary(df, &mut rng), random_unitary(df, &mut rng)]).unwrap()
}

#[test]
fn constraint_residuals_match_dense_reference() {
    for seed in 0..10 {
        let (df, de) = (3, 2);
        let model = random_model(seed, df, de);
        let residual = check_constraints(&model);
        let mut nonzero = 0;
        for entry in &residual.entries {
            let (i, j) = entry.pair;
            let out = model.isometry() * superposition(3, i, j, entry.plus);
            let rho = carrier_state(&out, df, de);
            let expected = match entry.kind {
                ConstraintKind::Eve => {
                    // Purity-free route: largest singular value of the reshaped output.
                    let m = CMat::from_fn(df, de, |f, e| out[(f * de + e, 0)]);
                    let s = m.singular_values().max();
                    (1.0 - s * s).max(0.0).sqrt()
                }
                ConstraintKind::Fred => {
                    let u = model.fred_map(j - i);
                    let t = superposition(df, i, j, entry.plus);
                    let hit = (t.adjoint() * u * &rho * u.adjoint() * &t)[(0, 0)].re;
                    (1.0 - hit).max(0.0).sqrt()
                }
            };
            assert!((entry.deviation - expected).abs() < 1e-9, "{entry:?} vs {expected}");
            if entry.deviation > 1e-3 {
                nonzero += 1;
            }
        }
        assert!(nonzero >= 6, "generic models violate most constraints");
    }
}

#[test]
fn isometries_preserve_inner_products() {
    let mut rng = stream_rng(33, 0);
    let models: Vec<AttackModel> = (0..10)
        .map(|k| {
            if k % 2 == 0 {
                random_feasible_model(3, 2, &mut rng).unwrap()
            } else {
                random_model(100 + k, 3, 3)
            }
        })
        .collect();
    let random_input = |rng: &mut rand_chacha::ChaCha8Rng| {
        let v = CMat::from_fn(3, 1, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let n = v.norm();
        v / c(n)
    };
    for k in 0..1000 {
        let model = &models[k % models.len()];
        let a = random_input(&mut rng);
        let b = random_input(&mut rng);
        let before = (a.adjoint() * &b)[(0, 0)];
        let va = model.apply(&a.column(0).into_owned());
        let vb = model.apply(&b.column(0).into_owned());
        let after = va.dotc(&vb);
        assert!((before - after).norm() < 1e-9);
    }
}

#[test]
fn leakage_figures_stay_in_range() {
    let mut rng = stream_rng(44, 0);
    for seed in 0..30 {
        let model = if seed % 3 == 0 {
            random_feasible_model(3, 1 + seed as usize % 4, &mut rng).unwrap()
        } else {
            random_model(seed, 3, 1 + seed as usize % 4)
        };
        let report = eve_leakage(&model);
        assert_eq!(report.pairs.len(), PAIRS.len());
        for p in &report.pairs {
            assert!((-1e-12..=1.0 + 1e-12).contains(&p.overlap), "{p:?}");
            assert!((-1e-12..=1.0 + 1e-12).contains(&p.trace_distance), "{p:?}");
        }
    }
}
