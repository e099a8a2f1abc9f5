//! Empirical ROC curves from Monte Carlo energy samples.
//!
//! A ROC point at threshold `g` is the pair of exceedance fractions
//! `(pf0, pd0) = (#{H0 samples >= g}/n0, #{H1 samples >= g}/n1)` — the
//! decision boundary is inclusive, matching the energy test. Each point
//! carries its binomial standard error `sqrt(p (1-p) / n)`.
//!
//! Curves from different sources (Monte Carlo at various `K`, closed-form
//! large-system limits) live on different threshold scales, so comparisons
//! match operating points by false-alarm rate with linear interpolation
//! rather than by threshold.

use rayon::prelude::*;

use crate::channel::{batch_energies, ChannelConfig, EnergySample, PowerMode};
use crate::error::{Error, Result};
use crate::fusion::FusionModel;
use crate::pmf::{pmf, PmfEngine};
use crate::sensor::{Hypothesis, SensorEnsemble};

/// Number of quantile levels in the default threshold policy.
pub const DEFAULT_QUANTILE_LEVELS: usize = 512;

/// How ROC thresholds are chosen from the observed samples.
#[derive(Debug, Clone, PartialEq)]
pub enum ThresholdPolicy {
    /// Empirical quantiles of the pooled sample at `levels` evenly spaced
    /// probability levels — resolves the whole curve without wasting
    /// thresholds in empty regions.
    PooledQuantiles { levels: usize },
    /// Fixed thresholds on the statistic's own scale.
    Explicit(Vec<f64>),
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        ThresholdPolicy::PooledQuantiles {
            levels: DEFAULT_QUANTILE_LEVELS,
        }
    }
}

impl ThresholdPolicy {
    /// Materialize ascending thresholds for the given score samples.
    fn thresholds(&self, h0_scores: &[f64], h1_scores: &[f64]) -> Vec<f64> {
        match self {
            ThresholdPolicy::PooledQuantiles { levels } => {
                let mut pooled: Vec<f64> = h0_scores.iter().chain(h1_scores).copied().collect();
                pooled.sort_by(|a, b| a.total_cmp(b));
                quantile_grid(&pooled, *levels)
            }
            ThresholdPolicy::Explicit(ts) => {
                let mut ts = ts.clone();
                ts.sort_by(|a, b| a.total_cmp(b));
                ts
            }
        }
    }
}

/// Order statistics of `sorted` at `levels` evenly spaced probability
/// levels `(i + 1/2) / levels`.
fn quantile_grid(sorted: &[f64], levels: usize) -> Vec<f64> {
    let n = sorted.len();
    (0..levels)
        .map(|i| {
            let q = (i as f64 + 0.5) / levels as f64;
            sorted[((q * (n - 1) as f64).floor() as usize).min(n - 1)]
        })
        .collect()
}

/// Monte Carlo driver settings: trial count, master seed, threshold grid
/// policy, and the worker-count hint (0 = default rayon pool).
#[derive(Debug, Clone)]
pub struct McConfig {
    pub trials: usize,
    pub master_seed: u64,
    pub threshold_policy: ThresholdPolicy,
    pub workers: usize,
}

impl McConfig {
    pub fn new(trials: usize, master_seed: u64) -> Self {
        Self {
            trials,
            master_seed,
            threshold_policy: ThresholdPolicy::default(),
            workers: 0,
        }
    }
}

/// Where a ROC curve came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Provenance {
    MonteCarlo { trials: usize, seed: u64 },
    ClosedForm { mode: PowerMode },
}

/// One operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub pf0: f64,
    pub pd0: f64,
    pub pf0_stderr: f64,
    pub pd0_stderr: f64,
}

/// Ordered operating points (ascending threshold, so `pf0` and `pd0` are
/// nonincreasing) plus provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub provenance: Provenance,
}

impl RocCurve {
    /// `(pf0, pd0)` pairs sorted by ascending `pf0`, keeping the best `pd0`
    /// among ties — the curve as a function of false-alarm rate.
    fn envelope(&self) -> Vec<(f64, f64)> {
        let mut pairs: Vec<(f64, f64)> = self.points.iter().map(|p| (p.pf0, p.pd0)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
        for (x, y) in pairs {
            match out.last_mut() {
                Some(last) if last.0 == x => last.1 = last.1.max(y),
                _ => out.push((x, y)),
            }
        }
        out
    }
}

fn binomial_stderr(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Fraction of `sorted` at or above `t` (inclusive boundary).
fn exceedance(sorted: &[f64], t: f64) -> f64 {
    let below = sorted.partition_point(|&x| x < t);
    (sorted.len() - below) as f64 / sorted.len() as f64
}

fn empirical_from_scores(
    h0_scores: &[f64],
    h1_scores: &[f64],
    thresholds: &[f64],
    provenance: Provenance,
) -> Result<RocCurve> {
    if h0_scores.is_empty() {
        return Err(Error::EmptySamples { hypothesis: "H0" });
    }
    if h1_scores.is_empty() {
        return Err(Error::EmptySamples { hypothesis: "H1" });
    }
    let mut h0 = h0_scores.to_vec();
    let mut h1 = h1_scores.to_vec();
    h0.sort_by(|a, b| a.total_cmp(b));
    h1.sort_by(|a, b| a.total_cmp(b));
    let points = thresholds
        .iter()
        .map(|&t| {
            let pf0 = exceedance(&h0, t);
            let pd0 = exceedance(&h1, t);
            RocPoint {
                threshold: t,
                pf0,
                pd0,
                pf0_stderr: binomial_stderr(pf0, h0.len()),
                pd0_stderr: binomial_stderr(pd0, h1.len()),
            }
        })
        .collect();
    Ok(RocCurve { points, provenance })
}

/// Empirical ROC of the energy test over an explicit threshold grid.
pub fn empirical_roc(
    h0_samples: &[EnergySample],
    h1_samples: &[EnergySample],
    thresholds: &[f64],
) -> Result<RocCurve> {
    let h0: Vec<f64> = h0_samples.iter().map(|s| s.psi).collect();
    let h1: Vec<f64> = h1_samples.iter().map(|s| s.psi).collect();
    let mut ts = thresholds.to_vec();
    ts.sort_by(|a, b| a.total_cmp(b));
    empirical_from_scores(
        &h0,
        &h1,
        &ts,
        Provenance::MonteCarlo {
            trials: h0_samples.len(),
            seed: 0,
        },
    )
}

/// Largest gap in detection probability between two curves at matched
/// false-alarm rates.
///
/// Both curves are read as piecewise-linear functions `pd0(pf0)`; the sup is
/// taken over the union of their knots within the overlap of their `pf0`
/// ranges. Errors when the ranges do not overlap.
pub fn roc_deviation(a: &RocCurve, b: &RocCurve) -> Result<f64> {
    let ea = a.envelope();
    let eb = b.envelope();
    let lo = ea[0].0.max(eb[0].0);
    let hi = ea.last().unwrap().0.min(eb.last().unwrap().0);
    if lo > hi {
        return Err(Error::NonOverlappingCurves);
    }
    let mut sup: f64 = 0.0;
    for knot in ea.iter().chain(&eb).map(|&(x, _)| x) {
        if knot < lo || knot > hi {
            continue;
        }
        let gap = (interp(&ea, knot) - interp(&eb, knot)).abs();
        sup = sup.max(gap);
    }
    Ok(sup)
}

/// Linear interpolation through `(x, y)` knots sorted by ascending unique `x`.
fn interp(knots: &[(f64, f64)], x: f64) -> f64 {
    match knots.binary_search_by(|k| k.0.total_cmp(&x)) {
        Ok(i) => knots[i].1,
        Err(i) => {
            // Callers keep x within range, so 0 < i < len.
            let (x0, y0) = knots[i - 1];
            let (x1, y1) = knots[i];
            y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        }
    }
}

/// Build the energy-test ROC and the LLR-test ROC from the same samples.
///
/// Both statistics are computed per draw; each curve gets thresholds from
/// the policy applied to its own pooled scores (an explicit grid is taken
/// on the energy scale and mapped through the LLR). When the model's LLR is
/// strictly increasing the two curves are identical pointwise — the tests
/// induce the same decision sets.
pub fn llr_vs_energy_roc(
    ensemble: &SensorEnsemble,
    config: &ChannelConfig,
    mc: &McConfig,
) -> Result<(RocCurve, RocCurve)> {
    let h0 = batch_energies(ensemble, config, Hypothesis::H0, mc.trials, mc)?;
    let h1 = batch_energies(ensemble, config, Hypothesis::H1, mc.trials, mc)?;

    let d1 = pmf(ensemble, Hypothesis::H1, PmfEngine::default())?;
    let d0 = pmf(ensemble, Hypothesis::H0, PmfEngine::default())?;
    let model = FusionModel::for_channel(d1, d0, config, ensemble)?;

    let energies = |samples: &[EnergySample]| -> Vec<f64> {
        samples.iter().map(|s| s.psi).collect()
    };
    let llrs = |psis: &[f64]| -> Result<Vec<f64>> {
        psis.par_iter()
            .map(|&psi| model.llr_of_energy(psi))
            .collect()
    };
    let h0_psi = energies(&h0);
    let h1_psi = energies(&h1);
    let h0_llr = llrs(&h0_psi)?;
    let h1_llr = llrs(&h1_psi)?;

    let energy_thresholds = mc.threshold_policy.thresholds(&h0_psi, &h1_psi);
    let llr_thresholds = match &mc.threshold_policy {
        ThresholdPolicy::Explicit(_) => energy_thresholds
            .iter()
            .map(|&t| model.llr_of_energy(t))
            .collect::<Result<Vec<f64>>>()?,
        ThresholdPolicy::PooledQuantiles { .. } => {
            mc.threshold_policy.thresholds(&h0_llr, &h1_llr)
        }
    };

    let provenance = Provenance::MonteCarlo {
        trials: mc.trials,
        seed: mc.master_seed,
    };
    let energy_curve = empirical_from_scores(&h0_psi, &h1_psi, &energy_thresholds, provenance)?;
    let llr_curve = empirical_from_scores(&h0_llr, &h1_llr, &llr_thresholds, provenance)?;
    Ok((energy_curve, llr_curve))
}

/// Empirical energy-test ROC driven end to end by an [`McConfig`].
pub fn mc_roc(
    ensemble: &SensorEnsemble,
    config: &ChannelConfig,
    mc: &McConfig,
) -> Result<RocCurve> {
    let h0 = batch_energies(ensemble, config, Hypothesis::H0, mc.trials, mc)?;
    let h1 = batch_energies(ensemble, config, Hypothesis::H1, mc.trials, mc)?;
    let h0_psi: Vec<f64> = h0.iter().map(|s| s.psi).collect();
    let h1_psi: Vec<f64> = h1.iter().map(|s| s.psi).collect();
    let thresholds = mc.threshold_policy.thresholds(&h0_psi, &h1_psi);
    empirical_from_scores(
        &h0_psi,
        &h1_psi,
        &thresholds,
        Provenance::MonteCarlo {
            trials: mc.trials,
            seed: mc.master_seed,
        },
    )
}
