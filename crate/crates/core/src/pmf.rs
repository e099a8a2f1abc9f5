//! Exact Poisson-Binomial distributions of the active-sensor count.
//!
//! Under either hypothesis the number of transmitting sensors
//! `l = sum_k x_k` is a sum of independent, generally non-identical
//! Bernoulli variables. Its pmf over `{0..K}` is required exactly — the
//! count-domain LLR needs accurate tails — so every engine here is exact up
//! to floating-point rounding; no Poisson or Gaussian approximation is
//! offered.
//!
//! Four interchangeable engines are provided:
//!
//! - [`PmfEngine::Enumerate`] — brute force over all `2^K` decision vectors,
//!   only permitted for `K <= 20`;
//! - [`PmfEngine::Convolve`] — sequential convolution of the per-sensor
//!   Bernoulli pmfs with compensated (error-free-transformation) summation;
//!   the default;
//! - [`PmfEngine::Recursive`] — the standard one-pass update
//!   `P_t(l) = p_t P_{t-1}(l-1) + (1 - p_t) P_{t-1}(l)` in plain arithmetic;
//! - [`PmfEngine::Dft`] — characteristic-function evaluation on the
//!   `(K+1)`-point frequency grid followed by an FFT.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::sensor::{Hypothesis, SensorEnsemble};

/// Largest `K` accepted by the enumeration engine.
pub const MAX_ENUMERATE_SENSORS: usize = 20;

/// Absolute tolerance on the normalization of a pmf.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Round-off clamp threshold for the DFT engine.
const DFT_CLAMP: f64 = 1e-12;

/// A pmf over the active-sensor count `l in {0..K}`.
///
/// Entries are nonnegative and sum to one within [`NORMALIZATION_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct CountDistribution {
    p: Vec<f64>,
}

impl CountDistribution {
    /// Validate and wrap a raw probability vector (index = count `l`).
    ///
    /// This is also the entry point for externally supplied count models,
    /// e.g. pmfs arising from correlated sensor decisions.
    pub fn from_probs(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidParameter(
                "count distribution needs at least one entry".into(),
            ));
        }
        for (index, &value) in p.iter().enumerate() {
            if !(value >= 0.0) {
                return Err(Error::NegativeProbability { index, value });
            }
        }
        let sum = neumaier_sum(&p);
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized {
                sum,
                tol: NORMALIZATION_TOL,
            });
        }
        Ok(Self { p })
    }

    /// Support size `K + 1`.
    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees at least one entry
    }

    /// Largest representable count `K`.
    pub fn max_count(&self) -> usize {
        self.p.len() - 1
    }

    /// Probability of exactly `ell` active sensors.
    pub fn prob(&self, ell: usize) -> f64 {
        self.p[ell]
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }
}

/// Selects how the Poisson-Binomial pmf is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PmfEngine {
    Enumerate,
    #[default]
    Convolve,
    Recursive,
    Dft,
}

/// Exact pmf of the active-sensor count under hypothesis `h`.
///
/// For an i.i.d. ensemble the result equals the Binomial pmf `B(K, p)`.
pub fn pmf(ensemble: &SensorEnsemble, h: Hypothesis, engine: PmfEngine) -> Result<CountDistribution> {
    let probs = ensemble.activation_probs(h);
    let raw = match engine {
        PmfEngine::Enumerate => enumerate_pmf(probs)?,
        PmfEngine::Convolve => convolve_pmf(probs),
        PmfEngine::Recursive => recursive_pmf(probs),
        PmfEngine::Dft => dft_pmf(probs)?,
    };
    CountDistribution::from_probs(raw)
}

/// pmf of the sum of two independent counts.
///
/// The support of the result spans `{0 .. K_a + K_b}`; appending one sensor
/// to an ensemble convolves its pmf with the single-sensor Bernoulli pmf.
pub fn convolve_counts(a: &CountDistribution, b: &CountDistribution) -> CountDistribution {
    let out_len = a.len() + b.len() - 1;
    let mut out = vec![0.0; out_len];
    for (n, slot) in out.iter_mut().enumerate() {
        // Compensated inner product over the anti-diagonal.
        let mut sum = 0.0;
        let mut comp = 0.0;
        let j_lo = n.saturating_sub(b.len() - 1);
        let j_hi = n.min(a.len() - 1);
        for j in j_lo..=j_hi {
            let (prod, perr) = two_prod(a.p[j], b.p[n - j]);
            let (s, serr) = two_sum(sum, prod);
            sum = s;
            comp += serr + perr;
        }
        *slot = sum + comp;
    }
    CountDistribution::from_probs(out).expect("convolution of valid pmfs stays normalized")
}

fn enumerate_pmf(probs: &[f64]) -> Result<Vec<f64>> {
    let k = probs.len();
    if k > MAX_ENUMERATE_SENSORS {
        return Err(Error::EnumerateTooLarge {
            k,
            max: MAX_ENUMERATE_SENSORS,
        });
    }
    let mut out = vec![0.0; k + 1];
    let mut comp = vec![0.0; k + 1];
    for mask in 0u64..(1u64 << k) {
        let mut weight = 1.0;
        for (bit, &p) in probs.iter().enumerate() {
            weight *= if mask >> bit & 1 == 1 { p } else { 1.0 - p };
        }
        let ell = mask.count_ones() as usize;
        let (s, e) = two_sum(out[ell], weight);
        out[ell] = s;
        comp[ell] += e;
    }
    for (slot, c) in out.iter_mut().zip(&comp) {
        *slot += c;
    }
    Ok(out)
}

fn convolve_pmf(probs: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(probs.len() + 1);
    out.push(1.0);
    for &p in probs {
        let q = 1.0 - p;
        out.push(p * out[out.len() - 1]);
        for ell in (1..out.len() - 1).rev() {
            out[ell] = dot2(p, out[ell - 1], q, out[ell]);
        }
        out[0] = q * out[0];
    }
    out
}

fn recursive_pmf(probs: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(probs.len() + 1);
    out.push(1.0);
    for &p in probs {
        let q = 1.0 - p;
        out.push(p * out[out.len() - 1]);
        for ell in (1..out.len() - 1).rev() {
            out[ell] = p * out[ell - 1] + q * out[ell];
        }
        out[0] = q * out[0];
    }
    out
}

fn dft_pmf(probs: &[f64]) -> Result<Vec<f64>> {
    let m = probs.len() + 1;
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    // Characteristic function on the (K+1)-point grid; the upper half is the
    // conjugate mirror of the lower half.
    for j in 0..=m / 2 {
        let theta = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
        let root = Complex64::new(theta.cos(), theta.sin());
        let mut cf = Complex64::new(1.0, 0.0);
        for &p in probs {
            cf *= Complex64::new(1.0 - p, 0.0) + root * p;
        }
        buf[j] = cf;
        if j != 0 && j != m - j {
            buf[m - j] = cf.conj();
        }
    }
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let mut out: Vec<f64> = buf.iter().map(|c| c.re / m as f64).collect();
    // FFT round-off can leave sub-epsilon negatives in the far tail.
    let mut clamped = false;
    for (index, value) in out.iter_mut().enumerate() {
        if *value < 0.0 {
            if *value < -DFT_CLAMP {
                return Err(Error::NegativeProbability {
                    index,
                    value: *value,
                });
            }
            *value = 0.0;
            clamped = true;
        }
    }
    if clamped {
        let sum = neumaier_sum(&out);
        for value in out.iter_mut() {
            *value /= sum;
        }
    }
    Ok(out)
}

/// Compensated (Neumaier) sum.
fn neumaier_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &v in values {
        let (s, e) = two_sum(sum, v);
        sum = s;
        comp += e;
    }
    sum + comp
}

/// Error-free transformation of `a + b`.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

/// Error-free transformation of `a * b` via fused multiply-add.
#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

/// `a*b + c*d` with compensated accumulation.
#[inline]
fn dot2(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let (p1, e1) = two_prod(a, b);
    let (p2, e2) = two_prod(c, d);
    let (s, e3) = two_sum(p1, p2);
    s + (e1 + e2 + e3)
}
