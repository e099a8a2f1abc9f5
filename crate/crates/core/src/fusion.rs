//! Energy-domain LLR evaluation and the energy test.
//!
//! Given the count pmfs under both hypotheses, the optimal fusion statistic
//! is the log-ratio of two scaled-chi-square mixtures and depends on the
//! received vector only through its energy `psi = ||y||^2` — enforced here
//! structurally, since [`FusionModel::llr_of_energy`] takes `psi` rather
//! than `y`. Each mixture is evaluated as a max-shifted log-sum over the
//! count, so the statistic stays finite for energies far beyond where the
//! raw exponentials would underflow.

use num_complex::Complex64;

use crate::channel::ChannelConfig;
use crate::error::{Error, Result};
use crate::pmf::CountDistribution;
use crate::sensor::{Hypothesis, SensorEnsemble};

/// Minimum number of grid points accepted by [`FusionModel::scan_monotonicity`].
pub const MIN_SCAN_POINTS: usize = 100;

/// Absolute tolerance in `psi` for [`FusionModel::invert_llr`].
pub const INVERT_PSI_TOL: f64 = 1e-10;

/// Count pmfs plus channel parameters, fixing the mixture LLR.
#[derive(Debug, Clone)]
pub struct FusionModel {
    d1: CountDistribution,
    d0: CountDistribution,
    n_div: usize,
    sigma_h2: f64,
    sigma_w2: f64,
}

/// Decision produced by a threshold test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    pub decision: Hypothesis,
    pub statistic: f64,
    pub threshold: f64,
}

/// Energy of a complex received vector, `sum_n |y_n|^2`.
pub fn energy(y: &[Complex64]) -> f64 {
    debug_assert!(!y.is_empty());
    y.iter().map(|c| c.norm_sqr()).sum()
}

/// Threshold the received energy: decide `H1` iff `psi >= gamma_e`.
pub fn energy_test(psi: f64, gamma_e: f64) -> TestOutcome {
    TestOutcome {
        decision: if psi >= gamma_e {
            Hypothesis::H1
        } else {
            Hypothesis::H0
        },
        statistic: psi,
        threshold: gamma_e,
    }
}

/// Result of a finite-difference monotonicity scan.
#[derive(Debug, Clone, Copy)]
pub struct MonotonicityScan {
    /// The LLR strictly increased across every consecutive grid pair.
    pub increasing: bool,
    /// Smallest finite-difference slope observed.
    pub min_slope: f64,
}

impl FusionModel {
    pub fn new(
        d1: CountDistribution,
        d0: CountDistribution,
        n_div: usize,
        sigma_h2: f64,
        sigma_w2: f64,
    ) -> Result<Self> {
        if d1.len() != d0.len() {
            return Err(Error::SupportMismatch {
                left: d1.len(),
                right: d0.len(),
            });
        }
        if n_div == 0 {
            return Err(Error::DiversityOutOfRange {
                n: n_div,
                max: usize::MAX,
            });
        }
        if !(sigma_h2 > 0.0) || !(sigma_w2 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "variances must be positive: sigma_h2 = {sigma_h2}, sigma_w2 = {sigma_w2}"
            )));
        }
        Ok(Self {
            d1,
            d0,
            n_div,
            sigma_h2,
            sigma_w2,
        })
    }

    /// Model for the observable a [`ChannelConfig`] actually produces.
    ///
    /// Under IPC/TPC power scaling the observed energy is an affinely scaled
    /// mixture; this maps the raw channel variances to the effective ones so
    /// the LLR matches the scaled samples.
    pub fn for_channel(
        d1: CountDistribution,
        d0: CountDistribution,
        config: &ChannelConfig,
        ensemble: &SensorEnsemble,
    ) -> Result<Self> {
        let (sigma_h2, sigma_w2) = config.scaled_variances(ensemble)?;
        Self::new(d1, d0, config.n_div, sigma_h2, sigma_w2)
    }

    pub fn diversity(&self) -> usize {
        self.n_div
    }

    /// Conditional energy variance parameter `sigma_w^2 + l sigma_h^2`.
    fn component_variance(&self, ell: usize) -> f64 {
        self.sigma_w2 + ell as f64 * self.sigma_h2
    }

    /// Mean energy of the all-active component, `N (sigma_w^2 + K sigma_h^2)`.
    pub fn energy_scale(&self) -> f64 {
        self.n_div as f64 * self.component_variance(self.d1.max_count())
    }

    /// The exact LLR as a function of received energy, in the log domain.
    pub fn llr_of_energy(&self, psi: f64) -> Result<f64> {
        if psi.is_nan() {
            return Err(Error::NonFinite("psi"));
        }
        if psi < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "energy must be nonnegative, got {psi}"
            )));
        }
        let mut lse1 = RunningLse::new();
        let mut lse0 = RunningLse::new();
        for ell in 0..self.d1.len() {
            let v = self.component_variance(ell);
            let log_c = -(self.n_div as f64) * v.ln() - psi / v;
            let p1 = self.d1.prob(ell);
            let p0 = self.d0.prob(ell);
            // Zero-probability components contribute -inf and are skipped.
            if p1 > 0.0 {
                lse1.add(log_c + p1.ln());
            }
            if p0 > 0.0 {
                lse0.add(log_c + p0.ln());
            }
        }
        Ok(lse1.value() - lse0.value())
    }

    /// Finite-difference scan of the LLR across `grid`.
    ///
    /// The grid must be strictly increasing with at least
    /// [`MIN_SCAN_POINTS`] points, starting at zero and spanning at least
    /// `10 N (sigma_w^2 + K sigma_h^2)`.
    pub fn scan_monotonicity(&self, grid: &[f64]) -> Result<MonotonicityScan> {
        let span = 10.0 * self.energy_scale();
        let valid = grid.len() >= MIN_SCAN_POINTS
            && grid[0] == 0.0
            && *grid.last().unwrap() >= span
            && grid.windows(2).all(|w| w[1] > w[0]);
        if !valid {
            return Err(Error::InvalidScanGrid {
                min_points: MIN_SCAN_POINTS,
                span,
            });
        }
        let mut increasing = true;
        let mut min_slope = f64::INFINITY;
        let mut prev = self.llr_of_energy(grid[0])?;
        for w in grid.windows(2) {
            let next = self.llr_of_energy(w[1])?;
            let slope = (next - prev) / (w[1] - w[0]);
            if !(next > prev) {
                increasing = false;
            }
            if slope < min_slope {
                min_slope = slope;
            }
            prev = next;
        }
        Ok(MonotonicityScan {
            increasing,
            min_slope,
        })
    }

    /// Evenly spaced grid satisfying the [`Self::scan_monotonicity`] contract.
    pub fn default_scan_grid(&self, points: usize) -> Vec<f64> {
        let points = points.max(MIN_SCAN_POINTS);
        let hi = 10.0 * self.energy_scale();
        (0..points)
            .map(|i| hi * i as f64 / (points - 1) as f64)
            .collect()
    }

    /// Least upper bound of the LLR over all energies: the largest
    /// count-LLR among components present in the mixtures (infinite when
    /// some count has `P(l|H1) > 0` but `P(l|H0) = 0`).
    fn llr_supremum(&self) -> f64 {
        let mut sup = f64::NEG_INFINITY;
        for (p1, p0) in self.d1.probs().iter().zip(self.d0.probs()) {
            if *p1 > 0.0 {
                if *p0 == 0.0 {
                    return f64::INFINITY;
                }
                sup = sup.max(p1.ln() - p0.ln());
            }
        }
        sup
    }

    /// Energy threshold equivalent to LLR threshold `gamma`, by monotone
    /// bisection; meaningful when the LLR is increasing.
    ///
    /// Returns `0` when every energy already exceeds the LLR threshold, and
    /// an error when the LLR never reaches it — the LLR is bounded by the
    /// extreme count-LLR values, so targets at or above that bound are
    /// unattainable at any finite energy.
    pub fn invert_llr(&self, gamma: f64) -> Result<f64> {
        if !gamma.is_finite() {
            return Err(Error::NonFinite("gamma"));
        }
        if self.llr_of_energy(0.0)? >= gamma {
            return Ok(0.0);
        }
        if gamma >= self.llr_supremum() {
            return Err(Error::InvalidParameter(format!(
                "LLR never reaches threshold {gamma}"
            )));
        }
        let mut lo = 0.0;
        let mut hi = self.energy_scale();
        while self.llr_of_energy(hi)? < gamma {
            hi *= 2.0;
            if hi > 1e15 * self.energy_scale() {
                return Err(Error::InvalidParameter(format!(
                    "LLR does not reach threshold {gamma} at any resolvable energy"
                )));
            }
        }
        // Stop at the absolute tolerance or at float resolution, whichever
        // is coarser at the bracket's scale.
        while hi - lo > INVERT_PSI_TOL && hi - lo > 4.0 * f64::EPSILON * hi {
            let mid = 0.5 * (lo + hi);
            if self.llr_of_energy(mid)? >= gamma {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

/// Streaming max-shifted log-sum-exp accumulator.
struct RunningLse {
    max: f64,
    sum: f64,
}

impl RunningLse {
    fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }

    fn add(&mut self, term: f64) {
        if term <= self.max {
            self.sum += (term - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - term).exp() + 1.0;
            self.max = term;
        }
    }

    fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pmf::{pmf, PmfEngine};
    use num::rational::BigRational;
    use num::{BigInt, ToPrimitive};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn footnote_model(n_div: usize) -> FusionModel {
        let e = SensorEnsemble::new(vec![0.5, 0.4, 0.3], vec![0.05, 0.1, 0.4]).unwrap();
        let d1 = pmf(&e, Hypothesis::H1, PmfEngine::default()).unwrap();
        let d0 = pmf(&e, Hypothesis::H0, PmfEngine::default()).unwrap();
        FusionModel::new(d1, d0, n_div, 1.0, 1.0).unwrap()
    }

    #[test]
    fn energy_of_zero_vector_is_zero() {
        let y = vec![Complex64::new(0.0, 0.0); 4];
        assert_eq!(energy(&y), 0.0);
    }

    #[test]
    fn energy_of_unit_components() {
        let y = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)];
        assert_eq!(energy(&y), 2.0);
    }

    #[test]
    fn energy_matches_componentwise_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y: Vec<Complex64> = (0..16)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let expected: f64 = y.iter().map(|c| c.re * c.re + c.im * c.im).sum();
        assert!((energy(&y) - expected).abs() < 1e-15);
    }

    #[test]
    fn identical_mixtures_give_zero_llr() {
        let d = CountDistribution::from_probs(vec![0.25, 0.5, 0.25]).unwrap();
        let m = FusionModel::new(d.clone(), d, 2, 1.0, 1.0).unwrap();
        for psi in [0.0, 0.5, 3.0, 100.0] {
            assert_eq!(m.llr_of_energy(psi).unwrap(), 0.0);
        }
    }

    /// At `psi = 0` the LLR reduces to the weighted-coefficient ratio
    /// `ln[sum_l c_l P(l|H1) / sum_l c_l P(l|H0)]` with
    /// `c_l = (sigma_w^2 + l sigma_h^2)^{-N}`. With unit variances the whole
    /// ratio is rational, so exact arithmetic provides the oracle.
    #[test]
    fn llr_at_zero_matches_exact_arithmetic() {
        let ratio = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
        let pd = [ratio(1, 2), ratio(2, 5), ratio(3, 10)];
        let pf = [ratio(1, 20), ratio(1, 10), ratio(2, 5)];
        let exact_pmf = |probs: &[BigRational]| -> Vec<BigRational> {
            let mut out = vec![ratio(0, 1); 4];
            for mask in 0u32..8 {
                let mut w = ratio(1, 1);
                for (bit, p) in probs.iter().enumerate() {
                    w *= if mask >> bit & 1 == 1 {
                        p.clone()
                    } else {
                        ratio(1, 1) - p.clone()
                    };
                }
                out[mask.count_ones() as usize] += w;
            }
            out
        };
        let n_div = 2u32;
        let mix = |pmf: &[BigRational]| -> BigRational {
            pmf.iter()
                .enumerate()
                .map(|(ell, p)| {
                    // c_l = 1 / (1 + l)^N with unit variances
                    let denom = BigInt::from((1 + ell as i64).pow(n_div));
                    p * BigRational::new(BigInt::from(1), denom)
                })
                .sum()
        };
        let s1 = mix(&exact_pmf(&pd));
        let s0 = mix(&exact_pmf(&pf));
        let expected = (s1 / s0).to_f64().unwrap().ln();

        let m = footnote_model(n_div as usize);
        let got = m.llr_of_energy(0.0).unwrap();
        assert!((got - expected).abs() < 1e-14, "{got} vs {expected}");
    }

    #[test]
    fn footnote_model_scan_is_strictly_increasing() {
        let m = footnote_model(2);
        // Span requirement: 10 * 2 * (1 + 3) = 80 <= 100.
        let grid: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.1).collect();
        let scan = m.scan_monotonicity(&grid).unwrap();
        assert!(scan.increasing);
        assert!(scan.min_slope > 0.0);
    }

    #[test]
    fn energy_test_boundary_is_inclusive() {
        assert_eq!(energy_test(3.0, 3.0).decision, Hypothesis::H1);
        assert_eq!(energy_test(2.9, 3.0).decision, Hypothesis::H0);
    }

    #[test]
    fn energy_test_equals_llr_test_through_inverse_threshold() {
        let m = footnote_model(2);
        let gamma = 0.8;
        let gamma_e = m.invert_llr(gamma).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..2000 {
            let psi = rng.random::<f64>() * 60.0;
            let by_energy = energy_test(psi, gamma_e).decision;
            let by_llr = if m.llr_of_energy(psi).unwrap() >= gamma {
                Hypothesis::H1
            } else {
                Hypothesis::H0
            };
            assert_eq!(by_energy, by_llr, "psi = {psi}");
        }
    }

    #[test]
    fn invert_llr_saturates_at_zero_for_low_targets() {
        let m = footnote_model(1);
        let at_zero = m.llr_of_energy(0.0).unwrap();
        assert_eq!(m.invert_llr(at_zero - 1.0).unwrap(), 0.0);
    }

    #[test]
    fn invert_llr_rejects_unreachable_targets() {
        let m = footnote_model(1);
        // Supremum of the LLR is lambda(K) = ln(0.06 / 0.002) = ln 30.
        assert!(m.invert_llr(30f64.ln() + 0.1).is_err());
        assert!(m.invert_llr(30f64.ln()).is_err());
    }

    #[test]
    fn invert_llr_converges_near_the_supremum() {
        let m = footnote_model(1);
        let gamma = 30f64.ln() - 1e-6;
        let psi = m.invert_llr(gamma).unwrap();
        let back = m.llr_of_energy(psi).unwrap();
        assert!((back - gamma).abs() < 1e-9, "round trip {back} vs {gamma}");
    }

    #[test]
    fn degenerate_model_scan_is_flat() {
        let d = CountDistribution::from_probs(vec![0.25, 0.5, 0.25]).unwrap();
        let m = FusionModel::new(d.clone(), d, 1, 1.0, 1.0).unwrap();
        let grid = m.default_scan_grid(200);
        let scan = m.scan_monotonicity(&grid).unwrap();
        assert!(!scan.increasing);
        assert_eq!(scan.min_slope, 0.0);
    }

    #[test]
    fn reversed_single_sensor_scan_fails() {
        let e = SensorEnsemble::iid(1, 0.3, 0.4).unwrap();
        let d1 = pmf(&e, Hypothesis::H1, PmfEngine::default()).unwrap();
        let d0 = pmf(&e, Hypothesis::H0, PmfEngine::default()).unwrap();
        let m = FusionModel::new(d1, d0, 1, 1.0, 1.0).unwrap();
        let scan = m.scan_monotonicity(&m.default_scan_grid(1000)).unwrap();
        assert!(!scan.increasing);
        assert!(scan.min_slope < 0.0);
    }

    #[test]
    fn log_domain_evaluation_survives_huge_energies() {
        let e = SensorEnsemble::iid(1000, 0.5, 0.05).unwrap();
        let d1 = pmf(&e, Hypothesis::H1, PmfEngine::default()).unwrap();
        let d0 = pmf(&e, Hypothesis::H0, PmfEngine::default()).unwrap();
        let m = FusionModel::new(d1, d0, 4, 2.0, 1.0).unwrap();
        for psi in [0.0, 1.0, 1e3, 1e6] {
            let llr = m.llr_of_energy(psi).unwrap();
            assert!(llr.is_finite(), "psi = {psi} gave {llr}");
        }
    }

    #[test]
    fn nan_energy_is_rejected() {
        let m = footnote_model(1);
        assert!(matches!(
            m.llr_of_energy(f64::NAN),
            Err(Error::NonFinite("psi"))
        ));
        assert!(m.llr_of_energy(-1.0).is_err());
    }

    #[test]
    fn scan_grid_contract_is_enforced() {
        let m = footnote_model(1);
        // Too few points.
        assert!(m.scan_monotonicity(&[0.0, 50.0]).is_err());
        // Does not span 10 * N * (sigma_w^2 + K sigma_h^2) = 40.
        let short: Vec<f64> = (0..200).map(|i| i as f64 * 0.1).collect();
        assert!(m.scan_monotonicity(&short).is_err());
    }
}
