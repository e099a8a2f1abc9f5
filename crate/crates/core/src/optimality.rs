//! Count-domain LLR and certification of energy-test optimality.
//!
//! Thresholding the received energy is the optimal fusion rule whenever the
//! energy-domain LLR is strictly increasing. A sufficient condition for that
//! — independent of the diversity order — is strict monotonicity of the
//! count-domain LLR `lambda(l) = ln P(l|H1) - ln P(l|H0)`. The checks here
//! operate on arbitrary count pmf pairs: nothing assumes the counts came
//! from independent sensor decisions, so correlated decision models can be
//! certified by supplying their pmfs directly.
//!
//! Two sufficient paths are exposed:
//!
//! - [`check_prop1`] tests `lambda(l) > lambda(l-1)` for every `l >= 1`;
//! - [`check_theorem2`] tests the per-sensor condition `P_D,k > P_F,k`,
//!   which implies the former for conditionally independent sensors but can
//!   be false while the former still holds (a few faulty sensors do not
//!   necessarily break energy-test optimality).

use crate::error::{Error, Result};
use crate::pmf::{self, CountDistribution, PmfEngine};
use crate::sensor::SensorEnsemble;

/// Default absolute strictness tolerance on LLR margins.
///
/// Margins within the tolerance cannot certify the strict inequality and are
/// reported as failures, annotated as numerically flat.
pub const DEFAULT_MARGIN_EPS: f64 = 1e-12;

/// The count-domain LLR and its consecutive margins.
#[derive(Debug, Clone)]
pub struct EllLlr {
    lambda: Vec<f64>,
    margins: Vec<f64>,
}

impl EllLlr {
    /// `lambda(l)` for `l = 0..=K`; `-inf` where `P(l|H1) = 0`.
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// `lambda(l) - lambda(l-1)` for `l = 1..=K`.
    pub fn margins(&self) -> &[f64] {
        &self.margins
    }
}

/// Verdict of the sufficient-condition checks.
#[derive(Debug, Clone)]
pub struct OptimalityReport {
    /// Every margin exceeded the strictness tolerance.
    pub increasing: bool,
    /// Smallest margin encountered (NaN if any margin was indeterminate).
    pub min_margin: f64,
    /// Counts `l` whose margin failed the strict inequality.
    pub failing_indices: Vec<usize>,
    /// Failing counts whose margin was within the tolerance of zero —
    /// numerically flat rather than clearly decreasing.
    pub flat_indices: Vec<usize>,
    /// Whether the per-sensor sufficient condition also holds. Only
    /// meaningful when the report was produced from an ensemble; checks on
    /// raw pmf pairs leave it `false`.
    pub theorem2_applicable: bool,
}

/// Count-domain LLR of two pmfs over the same support.
///
/// Computed as a difference of logs so that accuracy survives when both
/// entries are tiny. Errors if any `P(l|H0)` is exactly zero, naming the
/// offending count.
pub fn ell_llr(d1: &CountDistribution, d0: &CountDistribution) -> Result<EllLlr> {
    if d1.len() != d0.len() {
        return Err(Error::SupportMismatch {
            left: d1.len(),
            right: d0.len(),
        });
    }
    let lambda: Vec<f64> = d1
        .probs()
        .iter()
        .zip(d0.probs())
        .enumerate()
        .map(|(ell, (&p1, &p0))| {
            if p0 == 0.0 {
                Err(Error::SingularDistribution { ell })
            } else {
                Ok(p1.ln() - p0.ln())
            }
        })
        .collect::<Result<_>>()?;
    let margins = lambda.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(EllLlr { lambda, margins })
}

/// Test strict monotonicity of the count-domain LLR with tolerance `eps`.
///
/// Works for arbitrary count pmfs, including ones arising from correlated
/// sensor decisions. `theorem2_applicable` is left `false`; use
/// [`certify_ensemble`] when the per-sensor condition is also of interest.
pub fn check_prop1(
    d1: &CountDistribution,
    d0: &CountDistribution,
    eps: f64,
) -> Result<OptimalityReport> {
    let llr = ell_llr(d1, d0)?;
    Ok(report_from_margins(llr.margins(), eps, false))
}

/// Per-sensor sufficient condition: `P_D,k > P_F,k` for every sensor.
pub fn check_theorem2(ensemble: &SensorEnsemble) -> bool {
    ensemble
        .pd()
        .iter()
        .zip(ensemble.pf())
        .all(|(&pd, &pf)| pd > pf)
}

/// Pairwise cross-product condition:
/// `P(l1|H1) P(l2|H0) - P(l2|H1) P(l1|H0) > 0` for all `l1 > l2`.
///
/// Equivalent to the consecutive-margin condition of [`check_prop1`]; both
/// verdicts must agree on any valid input.
pub fn check_pairwise_sign(d1: &CountDistribution, d0: &CountDistribution) -> Result<bool> {
    if d1.len() != d0.len() {
        return Err(Error::SupportMismatch {
            left: d1.len(),
            right: d0.len(),
        });
    }
    if let Some(ell) = d0.probs().iter().position(|&p| p == 0.0) {
        return Err(Error::SingularDistribution { ell });
    }
    for l1 in 1..d1.len() {
        for l2 in 0..l1 {
            let k = d1.prob(l1) * d0.prob(l2) - d1.prob(l2) * d0.prob(l1);
            if !(k > 0.0) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Run both sufficient conditions on an ensemble's count pmfs.
pub fn certify_ensemble(
    ensemble: &SensorEnsemble,
    engine: PmfEngine,
    eps: f64,
) -> Result<OptimalityReport> {
    let d1 = pmf::pmf(ensemble, crate::sensor::Hypothesis::H1, engine)?;
    let d0 = pmf::pmf(ensemble, crate::sensor::Hypothesis::H0, engine)?;
    let llr = ell_llr(&d1, &d0)?;
    Ok(report_from_margins(
        llr.margins(),
        eps,
        check_theorem2(ensemble),
    ))
}

fn report_from_margins(margins: &[f64], eps: f64, theorem2: bool) -> OptimalityReport {
    let mut failing_indices = Vec::new();
    let mut flat_indices = Vec::new();
    let mut min_margin = f64::INFINITY;
    let mut any_nan = false;
    for (i, &m) in margins.iter().enumerate() {
        let ell = i + 1;
        if !(m > eps) {
            failing_indices.push(ell);
            if m.abs() <= eps {
                flat_indices.push(ell);
            }
        }
        if m.is_nan() {
            any_nan = true;
        } else if m < min_margin {
            min_margin = m;
        }
    }
    if any_nan {
        min_margin = f64::NAN;
    }
    OptimalityReport {
        increasing: failing_indices.is_empty(),
        min_margin,
        failing_indices,
        flat_indices,
        theorem2_applicable: theorem2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensor::Hypothesis;
    use proptest::prelude::*;

    fn footnote_ensemble() -> SensorEnsemble {
        SensorEnsemble::new(vec![0.5, 0.4, 0.3], vec![0.05, 0.1, 0.4]).unwrap()
    }

    fn pmf_pair(e: &SensorEnsemble) -> (CountDistribution, CountDistribution) {
        (
            pmf::pmf(e, Hypothesis::H1, PmfEngine::default()).unwrap(),
            pmf::pmf(e, Hypothesis::H0, PmfEngine::default()).unwrap(),
        )
    }

    #[test]
    fn identical_distributions_give_zero_llr() {
        let d = CountDistribution::from_probs(vec![0.25, 0.5, 0.25]).unwrap();
        let llr = ell_llr(&d, &d).unwrap();
        assert!(llr.lambda().iter().all(|&l| l == 0.0));
        assert!(llr.margins().iter().all(|&m| m == 0.0));

        let report = check_prop1(&d, &d, DEFAULT_MARGIN_EPS).unwrap();
        assert!(!report.increasing);
        assert_eq!(report.failing_indices, vec![1, 2]);
        assert_eq!(report.flat_indices, vec![1, 2]);
        assert_eq!(report.min_margin, 0.0);
    }

    #[test]
    fn footnote_llr_is_strictly_increasing() {
        // lambda frozen from the enumerated pmfs: ln of entrywise ratios of
        // [0.21, 0.44, 0.29, 0.06] over [0.513, 0.426, 0.059, 0.002].
        let (d1, d0) = pmf_pair(&footnote_ensemble());
        let llr = ell_llr(&d1, &d0).unwrap();
        let expected: Vec<f64> = [
            (0.21f64, 0.513f64),
            (0.44, 0.426),
            (0.29, 0.059),
            (0.06, 0.002),
        ]
        .iter()
        .map(|(a, b)| (a / b).ln())
        .collect();
        for (got, want) in llr.lambda().iter().zip(&expected) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        // Rounded values: (-0.893, 0.032, 1.592, 3.401).
        let rounded = [-0.893, 0.032, 1.592, 3.401];
        for (got, want) in llr.lambda().iter().zip(&rounded) {
            assert!((got - want).abs() < 5e-4, "{got} vs {want}");
        }
        assert!(llr.margins().iter().all(|&m| m > 0.0));
    }

    #[test]
    fn footnote_passes_prop1_but_not_theorem2() {
        let e = footnote_ensemble();
        let (d1, d0) = pmf_pair(&e);
        assert!(check_prop1(&d1, &d0, DEFAULT_MARGIN_EPS).unwrap().increasing);
        // Sensor 3 has pd = 0.3 <= pf = 0.4.
        assert!(!check_theorem2(&e));

        let report = certify_ensemble(&e, PmfEngine::default(), DEFAULT_MARGIN_EPS).unwrap();
        assert!(report.increasing);
        assert!(!report.theorem2_applicable);
    }

    #[test]
    fn single_sensor_with_pd_below_pf_fails_everywhere() {
        let e = SensorEnsemble::iid(1, 0.3, 0.4).unwrap();
        let (d1, d0) = pmf_pair(&e);
        let llr = ell_llr(&d1, &d0).unwrap();
        assert!((llr.lambda()[0] - (0.7f64 / 0.6).ln()).abs() < 1e-15);
        assert!((llr.lambda()[1] - (0.3f64 / 0.4).ln()).abs() < 1e-15);
        assert!(llr.lambda()[0] > llr.lambda()[1]);

        let report = check_prop1(&d1, &d0, DEFAULT_MARGIN_EPS).unwrap();
        assert!(!report.increasing);
        assert_eq!(report.failing_indices, vec![1]);
        assert!(report.flat_indices.is_empty());
        assert!(!check_pairwise_sign(&d1, &d0).unwrap());
    }

    #[test]
    fn iid_above_diagonal_passes_both_checks() {
        let e = SensorEnsemble::iid(10, 0.5, 0.05).unwrap();
        assert!(check_theorem2(&e));
        let (d1, d0) = pmf_pair(&e);
        assert!(check_prop1(&d1, &d0, DEFAULT_MARGIN_EPS).unwrap().increasing);
        assert!(check_pairwise_sign(&d1, &d0).unwrap());
    }

    #[test]
    fn theorem2_requires_strict_inequality() {
        let e = SensorEnsemble::new(vec![0.5, 0.3], vec![0.05, 0.3]).unwrap();
        assert!(!check_theorem2(&e));
    }

    #[test]
    fn pairwise_sign_on_footnote_and_degenerate_pairs() {
        let (d1, d0) = pmf_pair(&footnote_ensemble());
        assert!(check_pairwise_sign(&d1, &d0).unwrap());
        // Identical pmfs: every cross product is exactly zero.
        assert!(!check_pairwise_sign(&d0, &d0).unwrap());
    }

    #[test]
    fn zero_null_probability_is_singular() {
        let d1 = CountDistribution::from_probs(vec![0.5, 0.25, 0.25]).unwrap();
        let d0 = CountDistribution::from_probs(vec![0.5, 0.0, 0.5]).unwrap();
        assert!(matches!(
            ell_llr(&d1, &d0),
            Err(Error::SingularDistribution { ell: 1 })
        ));
        assert!(matches!(
            check_pairwise_sign(&d1, &d0),
            Err(Error::SingularDistribution { ell: 1 })
        ));
    }

    #[test]
    fn mismatched_supports_are_rejected() {
        let d1 = CountDistribution::from_probs(vec![0.5, 0.5]).unwrap();
        let d0 = CountDistribution::from_probs(vec![0.2, 0.4, 0.4]).unwrap();
        assert!(matches!(
            ell_llr(&d1, &d0),
            Err(Error::SupportMismatch { .. })
        ));
    }

    fn ensemble_above_diagonal(k: usize, seed: u64) -> SensorEnsemble {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut pd = Vec::with_capacity(k);
        let mut pf = Vec::with_capacity(k);
        for _ in 0..k {
            let f: f64 = rng.random::<f64>() * 0.98 + 0.005;
            let d = f + rng.random::<f64>() * (0.999 - f - 1e-4) + 1e-4;
            pf.push(f);
            pd.push(d.min(0.9995));
        }
        SensorEnsemble::new(pd, pf).unwrap()
    }

    proptest! {
        /// The two sufficient-condition formulations agree on random
        /// heterogeneous ensembles (with and without faulty sensors).
        #[test]
        fn prop1_and_pairwise_sign_agree(seed in 0u64..400, k in 1usize..12, faulty in proptest::bool::ANY) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut pd = Vec::new();
            let mut pf = Vec::new();
            for _ in 0..k {
                pd.push(rng.random::<f64>() * 0.99 + 0.005);
                pf.push(rng.random::<f64>() * 0.99 + 0.005);
                if !faulty {
                    // force pd > pf by swapping
                    let (lo, hi) = (pd.last().unwrap().min(*pf.last().unwrap()),
                                    pd.last().unwrap().max(*pf.last().unwrap()));
                    *pd.last_mut().unwrap() = hi + 1e-6;
                    *pf.last_mut().unwrap() = lo;
                }
            }
            let e = SensorEnsemble::new(pd, pf).unwrap();
            let (d1, d0) = pmf_pair(&e);
            let prop1 = check_prop1(&d1, &d0, DEFAULT_MARGIN_EPS).unwrap().increasing;
            let pairwise = check_pairwise_sign(&d1, &d0).unwrap();
            prop_assert_eq!(prop1, pairwise);
        }

        /// Whenever every sensor is above the diagonal the count LLR is
        /// strictly increasing.
        #[test]
        fn above_diagonal_implies_increasing(seed in 0u64..400, k in 1usize..20) {
            let e = ensemble_above_diagonal(k, seed);
            prop_assert!(check_theorem2(&e));
            let (d1, d0) = pmf_pair(&e);
            prop_assert!(check_prop1(&d1, &d0, DEFAULT_MARGIN_EPS).unwrap().increasing);
        }

        /// Appending an above-diagonal sensor preserves monotonicity — the
        /// induction step of the composition law, exercised through
        /// convolution.
        #[test]
        fn appending_good_sensor_preserves_monotonicity(seed in 0u64..200, k in 1usize..12) {
            use rand::{Rng, SeedableRng};
            let e = ensemble_above_diagonal(k, seed);
            let (d1, d0) = pmf_pair(&e);
            prop_assert!(check_prop1(&d1, &d0, DEFAULT_MARGIN_EPS).unwrap().increasing);

            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
            let pf_new: f64 = rng.random::<f64>() * 0.5 + 0.01;
            let pd_new = pf_new + rng.random::<f64>() * (0.99 - pf_new - 1e-4) + 1e-4;

            let d1_ext = pmf::convolve_counts(
                &d1,
                &CountDistribution::from_probs(vec![1.0 - pd_new, pd_new]).unwrap(),
            );
            let d0_ext = pmf::convolve_counts(
                &d0,
                &CountDistribution::from_probs(vec![1.0 - pf_new, pf_new]).unwrap(),
            );
            prop_assert!(check_prop1(&d1_ext, &d0_ext, DEFAULT_MARGIN_EPS).unwrap().increasing);
        }
    }
}
