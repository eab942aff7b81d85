//! Phase-error formulas and the Monte Carlo scans behind the random-graph
//! and difference-coverage claims.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::graph::{sample_largest_component, EdgeModel};
use crate::seeding::stream_rng;
use crate::stats::{clopper_pearson_lower, mean, median, power_law_fit};
use crate::{Error, Result};

/// Confidence level for every claim check.
pub const CLAIM_CONFIDENCE: f64 = 0.99;

/// `(1 - 1/e)/2`, the large-train limit of the improved formula at
/// `n_ph = (L-1)/2`.
pub const IMPROVED_ASYMPTOTE: f64 = 0.316_060_279_414_278_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhaseErrorParams {
    pub pulses: usize,
    pub photons: u64,
}

impl PhaseErrorParams {
    pub fn new(pulses: usize, photons: u64) -> Result<Self> {
        if pulses < 2 {
            return Err(Error::param("L", "a pulse train needs at least 2 pulses"));
        }
        Ok(PhaseErrorParams { pulses, photons })
    }
}

/// `n_ph / (L - 1)`, defined for `n_ph <= L - 1`.
pub fn phase_error_original(p: PhaseErrorParams) -> Result<f64> {
    if p.pulses < 2 {
        return Err(Error::param("L", "a pulse train needs at least 2 pulses"));
    }
    if p.photons > (p.pulses - 1) as u64 {
        return Err(Error::OutOfDomain("n_ph must not exceed L - 1"));
    }
    Ok(p.photons as f64 / (p.pulses - 1) as f64)
}

/// `[1 - (1 - 2/L)^{n_ph}] / 2`.
pub fn phase_error_improved(p: PhaseErrorParams) -> Result<f64> {
    if p.pulses < 2 {
        return Err(Error::param("L", "a pulse train needs at least 2 pulses"));
    }
    if p.photons == 0 {
        return Ok(0.0);
    }
    if p.pulses == 2 {
        return Ok(0.5);
    }
    let survive = libm::exp(p.photons as f64 * libm::log1p(-2.0 / p.pulses as f64));
    Ok((1.0 - survive) / 2.0)
}

/// Both formulas evaluated at the passive-interference attack's operating
/// point `L = n`, `n_ph = (n-1)/2`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ContradictionReport {
    pub n: usize,
    pub photons: u64,
    pub original: f64,
    pub improved: f64,
    pub improved_asymptote: f64,
    /// The improved formula certifies a positive key rate (e_ph < 1/2) at a
    /// point where the attack leaves Eve with every sifted bit.
    pub contradiction: bool,
}

pub fn contradiction_report(n: usize) -> Result<ContradictionReport> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(Error::param("n", "must be odd and at least 3"));
    }
    let params = PhaseErrorParams::new(n, ((n - 1) / 2) as u64)?;
    let original = phase_error_original(params)?;
    let improved = phase_error_improved(params)?;
    Ok(ContradictionReport {
        n,
        photons: params.photons,
        original,
        improved,
        improved_asymptote: IMPROVED_ASYMPTOTE,
        contradiction: improved < 0.5,
    })
}

/// Upper bound `1 - 1/c³ + 1/c⁴` on the expected difference coverage when
/// only `m = c√n` points are drawn.
pub fn remark_upper_bound(c: f64) -> Result<f64> {
    if !c.is_finite() || c <= 1.0 {
        return Err(Error::OutOfDomain("c must be a finite real greater than 1"));
    }
    let c3 = c * c * c;
    Ok(1.0 - 1.0 / c3 + 1.0 / (c3 * c))
}

/// How the coverage scan draws its `m` points from `{1, …, n}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Sampling {
    /// Independent uniform draws, duplicates collapsed.
    #[default]
    WithReplacement,
    /// `m` distinct points.
    Distinct,
}

/// Fraction of `{1, …, n-1}` realized as `|a - b|` over distinct points.
pub fn difference_coverage(points: &[usize], n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let mut present = vec![false; n + 1];
    let mut sorted: Vec<usize> = Vec::new();
    for &p in points {
        if !present[p] {
            present[p] = true;
            sorted.push(p);
        }
    }
    sorted.sort_unstable();
    let mut seen = vec![false; n];
    let mut count = 0usize;
    for a in 0..sorted.len() {
        for b in (a + 1)..sorted.len() {
            let d = sorted[b] - sorted[a];
            if !seen[d] {
                seen[d] = true;
                count += 1;
            }
        }
    }
    count as f64 / (n - 1) as f64
}

pub fn draw_points<R: Rng + ?Sized>(m: usize, n: usize, sampling: Sampling, rng: &mut R) -> Result<Vec<usize>> {
    check_coverage_params(m, n, sampling)?;
    Ok(match sampling {
        Sampling::WithReplacement => (0..m).map(|_| rng.random_range(1..=n)).collect(),
        Sampling::Distinct => rand::seq::index::sample(rng, n, m).into_iter().map(|i| i + 1).collect(),
    })
}

fn check_coverage_params(m: usize, n: usize, sampling: Sampling) -> Result<()> {
    if n < 2 {
        return Err(Error::param("n", "need at least 2 positions"));
    }
    if m == 0 {
        return Err(Error::param("m", "must be at least 1"));
    }
    if sampling == Sampling::Distinct && m > n {
        return Err(Error::param("m", "distinct sampling needs m <= n"));
    }
    Ok(())
}

/// Largest-component size of trial `index`.
pub fn component_trial(n: usize, model: EdgeModel, master_seed: u64, index: u64) -> Result<usize> {
    sample_largest_component(n, model, &mut stream_rng(master_seed, index))
}

/// Difference coverage of trial `index`.
pub fn coverage_trial(m: usize, n: usize, sampling: Sampling, master_seed: u64, index: u64) -> Result<f64> {
    let points = draw_points(m, n, sampling, &mut stream_rng(master_seed, index))?;
    Ok(difference_coverage(&points, n))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum ScanParams {
    Component {
        n: usize,
        edge_model: EdgeModel,
        threshold: Option<f64>,
        trials: u64,
        seed: u64,
    },
    Coverage {
        m: usize,
        n: usize,
        sampling: Sampling,
        threshold: Option<f64>,
        trials: u64,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScanSummary {
    pub median: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub threshold: Option<f64>,
    /// Trials whose statistic reached the threshold.
    pub successes: Option<u64>,
    /// Exact one-sided 99% lower confidence bound on the success probability.
    pub success_lower_bound: Option<f64>,
}

impl ScanSummary {
    pub fn from_samples(samples: &[f64], threshold: Option<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::param("trials", "must be at least 1"));
        }
        let successes = threshold.map(|t| samples.iter().filter(|&&s| s >= t).count() as u64);
        let success_lower_bound = successes
            .map(|k| clopper_pearson_lower(k, samples.len() as u64, CLAIM_CONFIDENCE))
            .transpose()?;
        Ok(ScanSummary {
            median: median(samples),
            mean: mean(samples),
            min: samples.iter().copied().fold(f64::INFINITY, f64::min),
            max: samples.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            threshold,
            successes,
            success_lower_bound,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScanReport {
    pub params: ScanParams,
    pub samples: Vec<f64>,
    pub summary: ScanSummary,
}

impl ScanReport {
    pub fn new(params: ScanParams, samples: Vec<f64>) -> Result<Self> {
        let threshold = match &params {
            ScanParams::Component { threshold, .. } | ScanParams::Coverage { threshold, .. } => *threshold,
        };
        let summary = ScanSummary::from_samples(&samples, threshold)?;
        Ok(ScanReport {
            params,
            samples,
            summary,
        })
    }
}

pub fn validate_component_scan(n: usize, model: EdgeModel, trials: u64) -> Result<()> {
    model.validate()?;
    if n == 0 {
        return Err(Error::param("n", "need at least one node"));
    }
    if let EdgeModel::Count(m) = model {
        if n < 2 && m > 0 {
            return Err(Error::param("M", "edges need at least two nodes"));
        }
    }
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    Ok(())
}

pub fn validate_coverage_scan(m: usize, n: usize, sampling: Sampling, trials: u64) -> Result<()> {
    check_coverage_params(m, n, sampling)?;
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    Ok(())
}

/// Sequential component scan; trial `k` draws from stream `k`.
pub fn component_scan(
    n: usize,
    model: EdgeModel,
    threshold: Option<f64>,
    trials: u64,
    seed: u64,
) -> Result<ScanReport> {
    validate_component_scan(n, model, trials)?;
    let samples = (0..trials)
        .map(|k| component_trial(n, model, seed, k).map(|s| s as f64))
        .collect::<Result<Vec<_>>>()?;
    ScanReport::new(
        ScanParams::Component {
            n,
            edge_model: model,
            threshold,
            trials,
            seed,
        },
        samples,
    )
}

/// Sequential coverage scan; trial `k` draws from stream `k`.
pub fn coverage_scan(
    m: usize,
    n: usize,
    sampling: Sampling,
    threshold: Option<f64>,
    trials: u64,
    seed: u64,
) -> Result<ScanReport> {
    validate_coverage_scan(m, n, sampling, trials)?;
    let samples = (0..trials)
        .map(|k| coverage_trial(m, n, sampling, seed, k))
        .collect::<Result<Vec<_>>>()?;
    ScanReport::new(
        ScanParams::Coverage {
            m,
            n,
            sampling,
            threshold,
            trials,
            seed,
        },
        samples,
    )
}

/// Largest-component scaling at the critical harvest `M = (n-1)/2`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScalingReport {
    pub ns: Vec<usize>,
    pub medians: Vec<f64>,
    pub exponent: f64,
    pub prefactor: f64,
    pub scans: Vec<ScanReport>,
}

impl ScalingReport {
    pub fn from_scans(scans: Vec<ScanReport>) -> Result<Self> {
        let ns: Vec<usize> = scans
            .iter()
            .map(|s| match s.params {
                ScanParams::Component { n, .. } | ScanParams::Coverage { n, .. } => n,
            })
            .collect();
        let medians: Vec<f64> = scans.iter().map(|s| s.summary.median).collect();
        let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
        let (exponent, prefactor) = power_law_fit(&xs, &medians)?;
        Ok(ScalingReport {
            ns,
            medians,
            exponent,
            prefactor,
            scans,
        })
    }
}

/// Seed for the scan at position `index` of a multi-`n` study.
pub fn scaling_seed(master_seed: u64, index: u64) -> u64 {
    crate::seeding::child_seed(master_seed, index)
}

pub fn critical_edge_count(n: usize) -> u64 {
    (n.saturating_sub(1) / 2) as u64
}

pub fn critical_scaling(ns: &[usize], trials: u64, seed: u64) -> Result<ScalingReport> {
    let scans = ns
        .iter()
        .enumerate()
        .map(|(idx, &n)| {
            component_scan(
                n,
                EdgeModel::Count(critical_edge_count(n)),
                None,
                trials,
                scaling_seed(seed, idx as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    ScalingReport::from_scans(scans)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pe(l: usize, k: u64) -> PhaseErrorParams {
        PhaseErrorParams::new(l, k).unwrap()
    }

    #[test]
    fn original_formula_examples() {
        assert_eq!(phase_error_original(pe(100, 0)).unwrap(), 0.0);
        assert_eq!(phase_error_original(pe(3, 1)).unwrap(), 0.5);
        for n in (3..2001).step_by(2) {
            assert_eq!(phase_error_original(pe(n, ((n - 1) / 2) as u64)).unwrap(), 0.5);
        }
        assert_eq!(
            phase_error_original(pe(5, 5)).unwrap_err(),
            Error::OutOfDomain("n_ph must not exceed L - 1")
        );
        assert!(PhaseErrorParams::new(1, 0).is_err());
    }

    #[test]
    fn improved_formula_examples() {
        assert_eq!(phase_error_improved(pe(7, 0)).unwrap(), 0.0);
        assert_eq!(phase_error_improved(pe(2, 1)).unwrap(), 0.5);
        assert_eq!(phase_error_improved(pe(2, 0)).unwrap(), 0.0);
        let v = phase_error_improved(pe(1_000_000, 499_999)).unwrap();
        assert!((v - IMPROVED_ASYMPTOTE).abs() < 1e-3);
        // Direct product for small inputs.
        let direct = (1.0 - libm::pow(1.0 - 2.0 / 9.0, 4.0)) / 2.0;
        assert!((phase_error_improved(pe(9, 4)).unwrap() - direct).abs() < 1e-15);
        assert!((IMPROVED_ASYMPTOTE - (1.0 - libm::exp(-1.0)) / 2.0).abs() < 1e-16);
    }

    #[test]
    fn formula_sweep_properties() {
        for l in 2..=100usize {
            let mut prev_o = -1.0;
            let mut prev_i = -1.0;
            for k in 0..(l as u64) {
                let o = phase_error_original(pe(l, k)).unwrap();
                let i = phase_error_improved(pe(l, k)).unwrap();
                assert!(o >= prev_o && i >= prev_i);
                assert!(i <= o + 1e-15, "L={l} k={k}");
                assert!((0.0..=0.5).contains(&i));
                if i == 0.5 {
                    assert!(l == 2 && k >= 1);
                }
                prev_o = o;
                prev_i = i;
            }
        }
    }

    #[test]
    fn contradiction_examples() {
        let r = contradiction_report(3).unwrap();
        assert_eq!(r.original, 0.5);
        assert!((r.improved - 1.0 / 3.0).abs() < 1e-15);
        assert!(r.contradiction);
        // Frozen from a direct evaluation of [1 - (1 - 2/1001)^500] / 2.
        let r = contradiction_report(1001).unwrap();
        assert_eq!(r.original, 0.5);
        assert!((r.improved - 0.316_060_340_727_545_6).abs() < 1e-12);
        assert!(r.contradiction);
        let r = contradiction_report(10_000_001).unwrap();
        assert!((r.improved - IMPROVED_ASYMPTOTE).abs() < 1e-6);
        assert!(contradiction_report(1000).is_err());
        assert!(contradiction_report(1).is_err());
    }

    #[test]
    fn remark_bound_examples() {
        assert_eq!(remark_upper_bound(2.0).unwrap(), 0.9375);
        assert!((remark_upper_bound(10.0).unwrap() - 0.9991).abs() < 1e-15);
        assert!(remark_upper_bound(1.0).is_err());
        assert!(remark_upper_bound(0.5).is_err());
        assert!(remark_upper_bound(f64::NAN).is_err());
    }

    #[test]
    fn coverage_edge_cases() {
        assert_eq!(difference_coverage(&[4], 10), 0.0);
        assert_eq!(difference_coverage(&[1, 2, 4], 10), 3.0 / 9.0);
        assert_eq!(difference_coverage(&[2, 2, 2], 10), 0.0);
        for n in [2usize, 3, 17, 1000] {
            let r = coverage_scan(n, n, Sampling::Distinct, Some(1.0), 3, 5).unwrap();
            assert!(r.samples.iter().all(|&c| c == 1.0));
        }
        let r = coverage_scan(1, 50, Sampling::WithReplacement, None, 10, 5).unwrap();
        assert!(r.samples.iter().all(|&c| c == 0.0));
        assert!(coverage_scan(11, 10, Sampling::Distinct, None, 1, 0).is_err());
        assert!(coverage_scan(5, 10, Sampling::Distinct, None, 0, 0).is_err());
    }

    #[test]
    fn component_scan_edge_cases() {
        let r = component_scan(10, EdgeModel::Count(0), Some(1.0), 20, 0).unwrap();
        assert!(r.samples.iter().all(|&s| s == 1.0));
        assert_eq!(r.summary.successes, Some(20));
        let r = component_scan(40, EdgeModel::Probability(1.0), None, 5, 0).unwrap();
        assert!(r.samples.iter().all(|&s| s == 40.0));
        assert!(component_scan(10, EdgeModel::Probability(-0.1), None, 5, 0).is_err());
        assert!(component_scan(10, EdgeModel::Probability(0.1), None, 0, 0).is_err());
    }
}
