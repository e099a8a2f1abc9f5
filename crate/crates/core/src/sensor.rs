//! Sensor ensembles and local decision sampling.
//!
//! Each of the `K` sensors takes a binary local decision and signals it with
//! on-off keying. Sensor quality is fully captured by the pair
//! `(P_D, P_F)` — the probabilities of transmitting a 1 under the target
//! hypothesis and under the null. Probabilities are restricted to the open
//! interval `(0, 1)`: a degenerate sensor would produce infinite
//! log-likelihood ratios downstream, so it is rejected at construction.

use rand::Rng;

use crate::error::{Error, Result};

/// The binary hypothesis being tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    H0,
    H1,
}

impl Hypothesis {
    /// Short label used in CSV output.
    pub fn label(self) -> &'static str {
        match self {
            Hypothesis::H0 => "H0",
            Hypothesis::H1 => "H1",
        }
    }
}

impl std::fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Per-sensor detection and false-alarm probabilities for a WSN of size `K`.
///
/// Immutable after construction; cheap to clone and safe to share across
/// worker threads.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorEnsemble {
    pd: Vec<f64>,
    pf: Vec<f64>,
}

fn check_open_unit(name: &'static str, probs: &[f64]) -> Result<()> {
    for (index, &value) in probs.iter().enumerate() {
        if !(value > 0.0 && value < 1.0) {
            return Err(Error::ProbabilityOutOfRange { name, index, value });
        }
    }
    Ok(())
}

impl SensorEnsemble {
    /// Build a heterogeneous ensemble from per-sensor probability lists.
    pub fn new(pd: Vec<f64>, pf: Vec<f64>) -> Result<Self> {
        if pd.len() != pf.len() {
            return Err(Error::LengthMismatch {
                pd_len: pd.len(),
                pf_len: pf.len(),
            });
        }
        if pd.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        check_open_unit("pd", &pd)?;
        check_open_unit("pf", &pf)?;
        Ok(Self { pd, pf })
    }

    /// Build an ensemble of `k` identical sensors.
    pub fn iid(k: usize, pd: f64, pf: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::EmptyEnsemble);
        }
        Self::new(vec![pd; k], vec![pf; k])
    }

    /// A copy of this ensemble with one more sensor appended.
    pub fn appended(&self, pd: f64, pf: f64) -> Result<Self> {
        let mut new_pd = self.pd.clone();
        let mut new_pf = self.pf.clone();
        new_pd.push(pd);
        new_pf.push(pf);
        Self::new(new_pd, new_pf)
    }

    /// Number of sensors `K`.
    pub fn len(&self) -> usize {
        self.pd.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees K >= 1
    }

    pub fn pd(&self) -> &[f64] {
        &self.pd
    }

    pub fn pf(&self) -> &[f64] {
        &self.pf
    }

    /// Per-sensor activation probabilities under `h`.
    pub fn activation_probs(&self, h: Hypothesis) -> &[f64] {
        match h {
            Hypothesis::H1 => &self.pd,
            Hypothesis::H0 => &self.pf,
        }
    }

    /// True when every sensor has the same `(pd, pf)` pair.
    pub fn is_iid(&self) -> bool {
        self.pd.iter().all(|&p| p == self.pd[0]) && self.pf.iter().all(|&p| p == self.pf[0])
    }
}

/// One realization of the `K` local decisions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionVector {
    bits: Vec<bool>,
}

impl DecisionVector {
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Number of active (transmitting) sensors.
    pub fn active_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Draw one decision vector under hypothesis `h`.
///
/// Consumes exactly one uniform draw per sensor, in sensor index order, so a
/// seeded stream replays bit-identically.
pub fn sample_decisions<R: Rng + ?Sized>(
    ensemble: &SensorEnsemble,
    h: Hypothesis,
    rng: &mut R,
) -> DecisionVector {
    let probs = ensemble.activation_probs(h);
    let bits = probs.iter().map(|&p| rng.random::<f64>() < p).collect();
    DecisionVector { bits }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn iid_constructs_identical_sensors() {
        let e = SensorEnsemble::iid(3, 0.5, 0.05).unwrap();
        assert_eq!(e.len(), 3);
        assert!(e.pd().iter().all(|&p| p == 0.5));
        assert!(e.pf().iter().all(|&p| p == 0.05));
        assert!(e.is_iid());
    }

    #[test]
    fn single_sensor_with_pd_equal_pf_is_valid() {
        // Optimality checks will fail later, but construction only range-checks.
        let e = SensorEnsemble::iid(1, 0.7, 0.7).unwrap();
        assert_eq!(e.len(), 1);
    }

    #[test]
    fn boundary_probabilities_are_rejected() {
        assert!(matches!(
            SensorEnsemble::iid(2, 1.0, 0.1),
            Err(Error::ProbabilityOutOfRange { name: "pd", .. })
        ));
        assert!(matches!(
            SensorEnsemble::iid(2, 0.5, 0.0),
            Err(Error::ProbabilityOutOfRange { name: "pf", .. })
        ));
        assert!(matches!(
            SensorEnsemble::new(vec![0.5], vec![]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            SensorEnsemble::new(vec![], vec![]),
            Err(Error::EmptyEnsemble)
        ));
    }

    #[test]
    fn heterogeneous_ensemble_is_not_iid() {
        let e = SensorEnsemble::new(vec![0.5, 0.4], vec![0.05, 0.1]).unwrap();
        assert!(!e.is_iid());
    }

    #[test]
    fn appended_extends_ensemble() {
        let e = SensorEnsemble::iid(2, 0.5, 0.05).unwrap();
        let bigger = e.appended(0.4, 0.1).unwrap();
        assert_eq!(bigger.len(), 3);
        assert_eq!(bigger.pd(), &[0.5, 0.5, 0.4]);
        assert_eq!(e.len(), 2);
    }

    /// Empirical mean of the active count must match the Bernoulli-sum mean
    /// `sum_k p_k` within three standard errors.
    fn assert_mean_matches(e: &SensorEnsemble, h: Hypothesis, draws: usize, seed: u64) {
        let probs = e.activation_probs(h);
        let mean: f64 = probs.iter().sum();
        let var: f64 = probs.iter().map(|p| p * (1.0 - p)).sum();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let total: usize = (0..draws)
            .map(|_| sample_decisions(e, h, &mut rng).active_count())
            .sum();
        let emp = total as f64 / draws as f64;
        let se = (var / draws as f64).sqrt();
        assert!(
            (emp - mean).abs() < 3.0 * se,
            "empirical mean {emp} vs {mean} (se {se})"
        );
    }

    #[test]
    fn active_count_mean_matches_bernoulli_sum_under_h1() {
        let e = SensorEnsemble::new(vec![0.001, 0.3, 0.9, 0.02], vec![0.05; 4]).unwrap();
        assert_mean_matches(&e, Hypothesis::H1, 200_000, 11);
    }

    #[test]
    fn active_count_mean_matches_bernoulli_sum_under_h0() {
        let e = SensorEnsemble::iid(100, 0.5, 0.05).unwrap();
        // mean under H0 is K * pf = 5
        assert_mean_matches(&e, Hypothesis::H0, 100_000, 12);
    }

    #[test]
    fn fixed_seed_replays_identical_decisions() {
        let e = SensorEnsemble::new(vec![0.5, 0.4, 0.3], vec![0.05, 0.1, 0.4]).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(99);
        let mut b = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100 {
            assert_eq!(
                sample_decisions(&e, Hypothesis::H1, &mut a),
                sample_decisions(&e, Hypothesis::H1, &mut b)
            );
        }
    }
}
