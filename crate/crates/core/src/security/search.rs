//! Adversarial search for leaky attack models.
//!
//! Maximizes `max_leakage - w * Σ deviations` over freely parameterized
//! models: Eve's isometry and Fred's unitaries are the orthonormalized
//! columns of unconstrained complex matrices. Each restart runs a (1+1)
//! evolution strategy with the one-fifth success rule from a random start,
//! then projects the result onto the constraint set with a damped
//! Gauss-Newton (Levenberg-Marquardt) iteration. The penalty alone leaves the
//! search stranded a few percent away from feasibility, where leakage is
//! still cheap to buy.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{
    check_constraints, delay_of, eve_leakage, orthonormalize, superposition, AttackModel, CMatrix, ConstraintResidual,
    LeakageReport, FEASIBLE_RESIDUAL, LEAKAGE_TOLERANCE, MAX_DIM, PAIRS, PULSES,
};
use crate::seeding::stream_rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SearchConfig {
    pub carrier_dim: usize,
    pub ancilla_dim: usize,
    pub penalty_weight: f64,
    /// Objective evaluations per restart.
    pub budget: u64,
    pub restarts: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            carrier_dim: 3,
            ancilla_dim: 2,
            penalty_weight: 50.0,
            budget: 40_000,
            restarts: 20,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(PULSES..=MAX_DIM).contains(&self.carrier_dim) {
            return Err(Error::param("d_F", "carrier dimension must lie in 3..=8"));
        }
        if !(1..=MAX_DIM).contains(&self.ancilla_dim) {
            return Err(Error::param("d_E", "ancilla dimension must lie in 1..=8"));
        }
        if !self.penalty_weight.is_finite() || self.penalty_weight < 0.0 {
            return Err(Error::param("penalty_weight", "must be a finite nonnegative number"));
        }
        if self.budget == 0 {
            return Err(Error::param("budget", "must be at least 1"));
        }
        if self.restarts == 0 {
            return Err(Error::param("restarts", "must be at least 1"));
        }
        Ok(())
    }

    fn param_count(&self) -> usize {
        2 * (self.carrier_dim * self.ancilla_dim * PULSES + 2 * self.carrier_dim * self.carrier_dim)
    }
}

fn complex_block(params: &[f64], rows: usize, cols: usize) -> CMatrix {
    DMatrix::from_fn(rows, cols, |r, c| {
        let k = 2 * (r * cols + c);
        Complex64::new(params[k], params[k + 1])
    })
}

/// Maps a raw parameter vector onto a valid model.
pub fn decode(cfg: &SearchConfig, params: &[f64]) -> Result<AttackModel> {
    let (df, de) = (cfg.carrier_dim, cfg.ancilla_dim);
    let v_len = 2 * df * de * PULSES;
    let u_len = 2 * df * df;
    if params.len() != cfg.param_count() {
        return Err(Error::param("params", "length does not match the dimensions"));
    }
    let v = orthonormalize(complex_block(&params[..v_len], df * de, PULSES));
    let u1 = orthonormalize(complex_block(&params[v_len..v_len + u_len], df, df));
    let u2 = orthonormalize(complex_block(&params[v_len + u_len..], df, df));
    AttackModel::new(df, de, v, [u1, u2])
}

struct Scored {
    objective: f64,
    residual: ConstraintResidual,
    leakage: LeakageReport,
}

fn score(cfg: &SearchConfig, params: &[f64]) -> Option<(AttackModel, Scored)> {
    // Rank-deficient draws fail validation; treat them as infeasible.
    let model = decode(cfg, params).ok()?;
    let residual = check_constraints(&model);
    let leakage = eve_leakage(&model);
    let penalty: f64 = residual.entries.iter().map(|e| e.deviation).sum();
    let objective = leakage.max_leakage - cfg.penalty_weight * penalty;
    Some((
        model,
        Scored {
            objective,
            residual,
            leakage,
        },
    ))
}

/// Best point of one restart.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartOutcome {
    pub restart: u64,
    pub model: AttackModel,
    pub objective: f64,
    pub residual: ConstraintResidual,
    pub leakage: LeakageReport,
    pub evaluations: u64,
    pub final_step: f64,
}

impl RestartOutcome {
    pub fn feasible(&self) -> bool {
        self.residual.satisfied(FEASIBLE_RESIDUAL)
    }

    pub fn summary(&self) -> RestartSummary {
        RestartSummary {
            restart: self.restart,
            objective: self.objective,
            residual: self.residual.total,
            max_leakage: self.leakage.max_leakage,
            feasible: self.feasible(),
            evaluations: self.evaluations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RestartSummary {
    pub restart: u64,
    pub objective: f64,
    pub residual: f64,
    pub max_leakage: f64,
    pub feasible: bool,
    pub evaluations: u64,
}

const TARGET_SUCCESS: f64 = 0.2;
const MIN_STEP: f64 = 1e-13;

/// One restart, drawing from stream `restart` of `master_seed`.
pub fn search_restart(cfg: &SearchConfig, master_seed: u64, restart: u64) -> Result<RestartOutcome> {
    cfg.validate()?;
    let mut rng = stream_rng(master_seed, restart);
    let n = cfg.param_count();
    let damping = 1.0 + n as f64 / 2.0;
    let (mut x, (mut model, mut best)) = loop {
        let x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        if let Some(s) = score(cfg, &x) {
            break (x, s);
        }
    };
    let mut step = 0.5;
    let mut evaluations = 1u64;
    let mut candidate = x.clone();
    while evaluations < cfg.budget && step > MIN_STEP {
        for (c, xi) in candidate.iter_mut().zip(&x) {
            let z: f64 = StandardNormal.sample(&mut rng);
            *c = xi + step * z;
        }
        evaluations += 1;
        let improved = match score(cfg, &candidate) {
            Some((m, s)) if s.objective >= best.objective => {
                model = m;
                best = s;
                core::mem::swap(&mut x, &mut candidate);
                true
            }
            _ => false,
        };
        let success = if improved { 1.0 } else { 0.0 };
        step *= libm::exp((success - TARGET_SUCCESS) / ((1.0 - TARGET_SUCCESS) * damping));
    }
    let (x, restore_evals) = restore_feasibility(cfg, x);
    evaluations += restore_evals;
    if let Some((m, s)) = score(cfg, &x) {
        model = m;
        best = s;
    }
    Ok(RestartOutcome {
        restart,
        model,
        objective: best.objective,
        residual: best.residual,
        leakage: best.leakage,
        evaluations,
        final_step: step,
    })
}

/// Real residual vector whose zero set is the feasible set.
///
/// Eve's condition is that each output matrix has rank one, i.e. all of its
/// 2x2 minors vanish. Fred's condition is that the decoded carrier has no
/// component orthogonal to the target superposition.
fn constraint_vector(cfg: &SearchConfig, params: &[f64]) -> Option<Vec<f64>> {
    let model = decode(cfg, params).ok()?;
    let (df, de) = (cfg.carrier_dim, cfg.ancilla_dim);
    let mut out = Vec::new();
    for pair in PAIRS {
        for plus in [true, false] {
            let input = superposition(PULSES, pair.0, pair.1, plus);
            let m = model.output_matrix(&input);
            for f in 0..df {
                for g in f + 1..df {
                    for e in 0..de {
                        for h in e + 1..de {
                            let minor = m[(f, e)] * m[(g, h)] - m[(f, h)] * m[(g, e)];
                            out.push(minor.re);
                            out.push(minor.im);
                        }
                    }
                }
            }
            let decoded = model.fred_map(delay_of(pair)) * &m;
            let target = superposition(df, pair.0, pair.1, plus);
            let along = &target * (target.adjoint() * &decoded);
            for z in (decoded - along).iter() {
                out.push(z.re);
                out.push(z.im);
            }
        }
    }
    Some(out)
}

fn sum_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

const RESTORE_ITERATIONS: usize = 200;
const RESTORE_TARGET: f64 = FEASIBLE_RESIDUAL * 1e-2;
const FD_STEP: f64 = 1e-7;

/// Levenberg-Marquardt descent on `constraint_vector` with a forward
/// difference Jacobian. Returns the final point and the number of model
/// evaluations spent.
fn restore_feasibility(cfg: &SearchConfig, mut x: Vec<f64>) -> (Vec<f64>, u64) {
    let n = x.len();
    let mut evals = 0u64;
    let Some(mut r) = constraint_vector(cfg, &x) else {
        return (x, 1);
    };
    evals += 1;
    let mut cost = sum_sq(&r);
    let mut lambda = 1e-3;
    for _ in 0..RESTORE_ITERATIONS {
        let done = decode(cfg, &x)
            .map(|m| check_constraints(&m).total <= RESTORE_TARGET)
            .unwrap_or(false);
        if done {
            break;
        }
        let m = r.len();
        let mut jac = DMatrix::<f64>::zeros(m, n);
        let mut probe = x.clone();
        for k in 0..n {
            let h = FD_STEP * (1.0 + x[k].abs());
            probe[k] = x[k] + h;
            evals += 1;
            if let Some(rk) = constraint_vector(cfg, &probe) {
                for (row, (a, b)) in rk.iter().zip(&r).enumerate() {
                    jac[(row, k)] = (a - b) / h;
                }
            }
            probe[k] = x[k];
        }
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let grad = &jt * nalgebra::DVector::from_column_slice(&r);
        let mut accepted = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += lambda * (1.0 + jtj[(k, k)]);
            }
            let Some(delta) = a.cholesky().map(|c| c.solve(&grad)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = x.iter().zip(delta.iter()).map(|(xi, d)| xi - d).collect();
            evals += 1;
            match constraint_vector(cfg, &trial) {
                Some(rt) if sum_sq(&rt) < cost => {
                    cost = sum_sq(&rt);
                    x = trial;
                    r = rt;
                    lambda = (lambda * 0.3).max(1e-12);
                    accepted = true;
                    break;
                }
                _ => lambda *= 10.0,
            }
        }
        if !accepted {
            break;
        }
    }
    (x, evals)
}

/// Outcome of a multi-start search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchReport {
    pub config: SearchConfig,
    /// The most leaky feasible restart, or the best objective if none is
    /// feasible.
    pub best: RestartOutcome,
    pub restarts: Vec<RestartSummary>,
    /// At least one restart reached the feasibility tolerance.
    pub converged: bool,
    /// Every feasible restart leaks at most the tolerance.
    pub theorem_holds: bool,
}

impl SearchReport {
    pub fn from_restarts(config: SearchConfig, outcomes: Vec<RestartOutcome>) -> Result<Self> {
        let restarts: Vec<RestartSummary> = outcomes.iter().map(RestartOutcome::summary).collect();
        let converged = restarts.iter().any(|r| r.feasible);
        let theorem_holds = restarts
            .iter()
            .filter(|r| r.feasible)
            .all(|r| r.max_leakage <= LEAKAGE_TOLERANCE);
        let best = outcomes
            .into_iter()
            .max_by(|a, b| {
                (a.feasible(), a.leakage.max_leakage, a.objective)
                    .partial_cmp(&(b.feasible(), b.leakage.max_leakage, b.objective))
                    .unwrap_or(core::cmp::Ordering::Equal)
            })
            .ok_or(Error::param("restarts", "must be at least 1"))?;
        Ok(SearchReport {
            config,
            best,
            restarts,
            converged,
            theorem_holds,
        })
    }
}

/// Sequential multi-start search.
pub fn optimize_leakage(cfg: &SearchConfig, master_seed: u64) -> Result<SearchReport> {
    cfg.validate()?;
    let outcomes = (0..cfg.restarts)
        .map(|k| search_restart(cfg, master_seed, k))
        .collect::<Result<Vec<_>>>()?;
    SearchReport::from_restarts(*cfg, outcomes)
}

/// Random parameter vector, for tests and diagnostics.
pub fn random_params<R: Rng + ?Sized>(cfg: &SearchConfig, rng: &mut R) -> Vec<f64> {
    (0..cfg.param_count()).map(|_| StandardNormal.sample(rng)).collect()
}
