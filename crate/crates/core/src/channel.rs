//! Monte Carlo simulation of the Rayleigh diversity MAC.
//!
//! The received vector is `y = H x + w` with i.i.d. circular complex
//! Gaussian fading `h_{n,k} ~ CN(0, sigma_h^2)` and noise
//! `w ~ CN(0, sigma_w^2 I_N)`. A draw from `CN(0, s)` has independent real
//! and imaginary parts of variance `s / 2` each — the one convention
//! everything downstream depends on, fixed here in [`complex_normal`].
//!
//! Besides the raw observable `||y||^2`, two power-constrained scalings of
//! the same vector are supported for large-system studies:
//!
//! - IPC: `||(H x / sqrt(N) + w)||^2 / (P_F K sigma_h^2)` — per-sensor
//!   power held fixed, signal energy split across diversity branches;
//! - TPC: `||(H x / sqrt(K N) + w)||^2 / (P_F sigma_h^2)` — total WSN power
//!   held fixed as `K` grows.
//!
//! Both scalings are defined for conditionally i.i.d. sensors only and use
//! the ensemble's common false-alarm rate.
//!
//! Trial batches partition into fixed-size blocks, each owning a
//! counter-derived random substream, so batch output is invariant to the
//! number of worker threads.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::roc::McConfig;
use crate::sensor::{sample_decisions, Hypothesis, SensorEnsemble};

/// Trials per substream block; fixed so results never depend on the worker
/// count.
pub const TRIALS_PER_BLOCK: usize = 1024;

/// How transmit power scales with the network size and diversity order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerMode {
    /// The unscaled observable `||H x + w||^2`.
    Raw,
    /// Individual power constraint.
    Ipc,
    /// Total power constraint.
    Tpc,
}

impl PowerMode {
    pub fn label(self) -> &'static str {
        match self {
            PowerMode::Raw => "raw",
            PowerMode::Ipc => "ipc",
            PowerMode::Tpc => "tpc",
        }
    }
}

/// Channel and receiver parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub n_div: usize,
    pub sigma_h2: f64,
    pub sigma_w2: f64,
    pub power_mode: PowerMode,
}

impl ChannelConfig {
    pub fn new(n_div: usize, sigma_h2: f64, sigma_w2: f64, power_mode: PowerMode) -> Result<Self> {
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
            n_div,
            sigma_h2,
            sigma_w2,
            power_mode,
        })
    }

    /// Unit noise power with `sigma_h^2 / sigma_w^2 = 10^(snr_db / 10)`.
    pub fn from_snr_db(n_div: usize, snr_db: f64, power_mode: PowerMode) -> Result<Self> {
        Self::new(n_div, 10f64.powf(snr_db / 10.0), 1.0, power_mode)
    }

    pub fn snr(&self) -> f64 {
        self.sigma_h2 / self.sigma_w2
    }

    /// Effective `(sigma_h^2, sigma_w^2)` of the observable this
    /// configuration emits, folding in the power-mode scaling.
    ///
    /// Conditioned on `l` active sensors the observed energy is
    /// `(v / 2) chi^2_{2N}` with `v = eff_w2 + l * eff_h2`.
    pub fn scaled_variances(&self, ensemble: &SensorEnsemble) -> Result<(f64, f64)> {
        let (amp2, denom2) = self.scaling(ensemble)?;
        Ok((self.sigma_h2 * amp2 / denom2, self.sigma_w2 / denom2))
    }

    /// `(signal amplitude^2, normalization^2)` for the current mode.
    fn scaling(&self, ensemble: &SensorEnsemble) -> Result<(f64, f64)> {
        let n = self.n_div as f64;
        let k = ensemble.len() as f64;
        match self.power_mode {
            PowerMode::Raw => Ok((1.0, 1.0)),
            PowerMode::Ipc => {
                let pf = self.common_pf(ensemble, "IPC")?;
                Ok((1.0 / n, pf * k * self.sigma_h2))
            }
            PowerMode::Tpc => {
                let pf = self.common_pf(ensemble, "TPC")?;
                Ok((1.0 / (k * n), pf * self.sigma_h2))
            }
        }
    }

    fn common_pf(&self, ensemble: &SensorEnsemble, mode: &'static str) -> Result<f64> {
        if !ensemble.is_iid() {
            return Err(Error::NonIidEnsemble { mode });
        }
        Ok(ensemble.pf()[0])
    }
}

/// One Monte Carlo draw of the (possibly scaled) received energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySample {
    pub psi: f64,
    pub ell: usize,
    pub hypothesis: Hypothesis,
}

/// Draw from `CN(0, variance)`: independent real and imaginary parts of
/// variance `variance / 2` each.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}

/// Simulate one received-energy sample under hypothesis `h`.
///
/// Draw order is fixed — decision uniforms in sensor order, then `N` fading
/// coefficients per active sensor in sensor order, then the noise vector —
/// so a seeded stream replays bit-identically.
pub fn simulate_received<R: Rng + ?Sized>(
    ensemble: &SensorEnsemble,
    config: &ChannelConfig,
    h: Hypothesis,
    rng: &mut R,
) -> Result<EnergySample> {
    let (amp2, denom2) = config.scaling(ensemble)?;
    Ok(draw_sample(ensemble, config, h, amp2, denom2, rng))
}

fn draw_sample<R: Rng + ?Sized>(
    ensemble: &SensorEnsemble,
    config: &ChannelConfig,
    h: Hypothesis,
    amp2: f64,
    denom2: f64,
    rng: &mut R,
) -> EnergySample {
    let n = config.n_div;
    let decisions = sample_decisions(ensemble, h, rng);
    let mut signal = vec![Complex64::new(0.0, 0.0); n];
    let mut ell = 0;
    for &active in decisions.bits() {
        if active {
            ell += 1;
            for branch in signal.iter_mut() {
                *branch += complex_normal(rng, config.sigma_h2);
            }
        }
    }
    let amp = amp2.sqrt();
    let mut psi = 0.0;
    for branch in &signal {
        let received = branch * amp + complex_normal(rng, config.sigma_w2);
        psi += received.norm_sqr();
    }
    EnergySample {
        psi: psi / denom2,
        ell,
        hypothesis: h,
    }
}

/// Energy sample conditioned on exactly `ell` active sensors.
///
/// The sum of `ell` independent fading columns is `CN(0, ell sigma_h^2 I)`,
/// drawn here directly. `k_total` and `pf` feed the IPC/TPC scalings;
/// `hypothesis` is recorded verbatim in the sample.
pub fn simulate_given_ell<R: Rng + ?Sized>(
    ell: usize,
    config: &ChannelConfig,
    k_total: usize,
    pf: f64,
    hypothesis: Hypothesis,
    rng: &mut R,
) -> Result<EnergySample> {
    if ell > k_total {
        return Err(Error::InvalidParameter(format!(
            "conditioned count {ell} exceeds ensemble size {k_total}"
        )));
    }
    let n = config.n_div as f64;
    let k = k_total as f64;
    let (amp2, denom2) = match config.power_mode {
        PowerMode::Raw => (1.0, 1.0),
        PowerMode::Ipc => {
            check_prob(pf)?;
            (1.0 / n, pf * k * config.sigma_h2)
        }
        PowerMode::Tpc => {
            check_prob(pf)?;
            (1.0 / (k * n), pf * config.sigma_h2)
        }
    };
    let amp = amp2.sqrt();
    let signal_var = ell as f64 * config.sigma_h2;
    let mut psi = 0.0;
    for _ in 0..config.n_div {
        let branch = complex_normal(rng, signal_var) * amp + complex_normal(rng, config.sigma_w2);
        psi += branch.norm_sqr();
    }
    Ok(EnergySample {
        psi: psi / denom2,
        ell,
        hypothesis,
    })
}

fn check_prob(pf: f64) -> Result<()> {
    if !(pf > 0.0 && pf < 1.0) {
        return Err(Error::ProbabilityOutOfRange {
            name: "pf",
            index: 0,
            value: pf,
        });
    }
    Ok(())
}

/// The random stream owned by block `block` of a batch under `h`.
///
/// Streams are derived from the master seed by counter: stream index
/// `2 * block + 1{h = H1}`. Block 0 is "the first substream" of a batch.
pub fn substream(master_seed: u64, h: Hypothesis, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(2 * block + (h == Hypothesis::H1) as u64);
    rng
}

/// Draw `trials` independent energy samples in parallel.
///
/// Trials split into [`TRIALS_PER_BLOCK`]-sized blocks, each sampled
/// sequentially from its own substream, so the result is identical for any
/// worker count. `mc.workers` caps the rayon pool; zero uses the default.
pub fn batch_energies(
    ensemble: &SensorEnsemble,
    config: &ChannelConfig,
    h: Hypothesis,
    trials: usize,
    mc: &McConfig,
) -> Result<Vec<EnergySample>> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let (amp2, denom2) = config.scaling(ensemble)?;
    let n_blocks = trials.div_ceil(TRIALS_PER_BLOCK);
    let run = || {
        (0..n_blocks)
            .into_par_iter()
            .map(|block| {
                let mut rng = substream(mc.master_seed, h, block as u64);
                let len = TRIALS_PER_BLOCK.min(trials - block * TRIALS_PER_BLOCK);
                (0..len)
                    .map(|_| draw_sample(ensemble, config, h, amp2, denom2, &mut rng))
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
    };
    let nested = if mc.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(mc.workers)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?
            .install(run)
    } else {
        run()
    };
    Ok(nested.into_iter().flatten().collect())
}
