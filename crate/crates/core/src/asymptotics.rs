//! Closed-form large-system (`K -> inf`) performance.
//!
//! As the network grows, the scaled observables converge in distribution to
//! complex Gaussians, so the system-level false-alarm and detection
//! probabilities become upper tails of chi-square laws with `2N` degrees of
//! freedom:
//!
//! ```text
//! IPC:  pf0(g) = Q_N(g N)            pd0(g) = Q_N(g N / (pd/pf))
//! TPC:  pf0(g) = Q_N(g N alpha_f)    pd0(g) = Q_N(g N alpha_d / (pd/pf))
//! ```
//!
//! where `Q_N(a) = exp(-a) sum_{j<N} a^j / j!` and the TPC attenuation
//! factors are `alpha_f = pf snr / (pf snr + N)`, `alpha_d` analogously with
//! `pd`. Their ratio `alpha_f / alpha_d < 1` (for `pd > pf`) is the TPC
//! performance reduction relative to IPC.

use crate::channel::PowerMode;
use crate::error::{Error, Result};
use crate::roc::{Provenance, RocCurve, RocPoint};

/// Largest diversity order accepted by the tail evaluations.
pub const MAX_DIVERSITY: usize = 64;

/// Bisection tolerance (in probability) for threshold inversion.
pub const INVERT_PF0_TOL: f64 = 1e-12;

/// Parameters of the large-system regime: common per-sensor operating point,
/// diversity order, and received SNR `sigma_h^2 / sigma_w^2` (the SNR only
/// enters under a total power constraint).
///
/// `pd > pf` is not enforced — a below-diagonal operating point is valid
/// input and simply yields a ROC below the diagonal; see
/// [`LargeSystemParams::above_diagonal`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LargeSystemParams {
    pub pd: f64,
    pub pf: f64,
    pub n_div: usize,
    pub snr: f64,
}

impl LargeSystemParams {
    pub fn new(pd: f64, pf: f64, n_div: usize, snr: f64) -> Result<Self> {
        for (name, value) in [("pd", pd), ("pf", pf)] {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::ProbabilityOutOfRange {
                    name,
                    index: 0,
                    value,
                });
            }
        }
        if n_div == 0 || n_div > MAX_DIVERSITY {
            return Err(Error::DiversityOutOfRange {
                n: n_div,
                max: MAX_DIVERSITY,
            });
        }
        if !(snr > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "snr must be positive, got {snr}"
            )));
        }
        Ok(Self { pd, pf, n_div, snr })
    }

    /// Whether the ROC lies above the diagonal (`pd > pf`).
    pub fn above_diagonal(&self) -> bool {
        self.pd > self.pf
    }
}

/// Poisson-style tail `exp(-a) sum_{j<n} a^j / j!`, by term recurrence.
/// Clamped at one: the sum is a truncation of `exp(a)`, so the product can
/// only exceed one through rounding.
fn poisson_tail(a: f64, n: usize) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..n {
        term *= a / j as f64;
        sum += term;
    }
    ((-a).exp() * sum).min(1.0)
}

/// Upper tail `P(chi^2_dof >= x)` for even `dof = 2N`, `N <= 64`.
///
/// Evaluated as the exact finite sum `exp(-x/2) sum_{j<N} (x/2)^j / j!`
/// with an incremental term recurrence; no factorials are formed.
pub fn chi2_upper_tail(x: f64, dof: usize) -> Result<f64> {
    if dof == 0 || dof % 2 != 0 || dof / 2 > MAX_DIVERSITY {
        return Err(Error::InvalidParameter(format!(
            "dof must be even with dof/2 in 1..={MAX_DIVERSITY}, got {dof}"
        )));
    }
    if !(x >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "chi-square argument must be nonnegative, got {x}"
        )));
    }
    Ok(poisson_tail(x / 2.0, dof / 2))
}

fn check_gamma_n(gamma: f64, n: usize) -> Result<()> {
    if !(gamma >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold must be nonnegative, got {gamma}"
        )));
    }
    if n == 0 || n > MAX_DIVERSITY {
        return Err(Error::DiversityOutOfRange {
            n,
            max: MAX_DIVERSITY,
        });
    }
    Ok(())
}

/// Large-system IPC false-alarm probability at threshold `gamma`.
pub fn pf0_ipc(gamma: f64, n: usize) -> Result<f64> {
    check_gamma_n(gamma, n)?;
    Ok(poisson_tail(gamma * n as f64, n))
}

/// Large-system IPC detection probability: the false-alarm form with the
/// argument shrunk by `pd / pf`. The ratio is formed first so `pd = pf`
/// gives exactly the false-alarm curve.
pub fn pd0_ipc(gamma: f64, n: usize, pd: f64, pf: f64) -> Result<f64> {
    check_gamma_n(gamma, n)?;
    Ok(poisson_tail(gamma * n as f64 * (pf / pd), n))
}

/// TPC attenuation factor `pf snr / (pf snr + N)` for the null hypothesis.
pub fn alpha_f(pf: f64, snr: f64, n: usize) -> f64 {
    pf * snr / (pf * snr + n as f64)
}

/// TPC attenuation factor with the detection probability in place of `pf`.
pub fn alpha_d(pd: f64, snr: f64, n: usize) -> f64 {
    pd * snr / (pd * snr + n as f64)
}

/// Large-system TPC false-alarm probability.
pub fn pf0_tpc(gamma: f64, n: usize, pf: f64, snr: f64) -> Result<f64> {
    check_gamma_n(gamma, n)?;
    Ok(poisson_tail(gamma * n as f64 * alpha_f(pf, snr, n), n))
}

/// Large-system TPC detection probability.
pub fn pd0_tpc(gamma: f64, n: usize, pd: f64, pf: f64, snr: f64) -> Result<f64> {
    check_gamma_n(gamma, n)?;
    Ok(poisson_tail(
        gamma * n as f64 * alpha_d(pd, snr, n) * (pf / pd),
        n,
    ))
}

fn point(p: &LargeSystemParams, mode: PowerMode, gamma: f64) -> Result<(f64, f64)> {
    match mode {
        PowerMode::Ipc => Ok((
            pf0_ipc(gamma, p.n_div)?,
            pd0_ipc(gamma, p.n_div, p.pd, p.pf)?,
        )),
        PowerMode::Tpc => Ok((
            pf0_tpc(gamma, p.n_div, p.pf, p.snr)?,
            pd0_tpc(gamma, p.n_div, p.pd, p.pf, p.snr)?,
        )),
        PowerMode::Raw => Err(Error::InvalidParameter(
            "closed forms exist for IPC and TPC scaling only".into(),
        )),
    }
}

/// Closed-form ROC over an increasing, nonnegative threshold grid.
pub fn roc_closed_form(
    params: &LargeSystemParams,
    mode: PowerMode,
    gammas: &[f64],
) -> Result<RocCurve> {
    if gammas.is_empty() || gammas[0] < 0.0 || gammas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "threshold grid must be nonnegative and strictly increasing".into(),
        ));
    }
    let points = gammas
        .iter()
        .map(|&g| {
            let (pf0, pd0) = point(params, mode, g)?;
            Ok(RocPoint {
                threshold: g,
                pf0,
                pd0,
                pf0_stderr: 0.0,
                pd0_stderr: 0.0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RocCurve {
        points,
        provenance: Provenance::ClosedForm { mode },
    })
}

/// Large-system J-divergence between the two observables.
///
/// `N [(r + 1/r) - 2]` with `r = pd/pf` under IPC and
/// `r = pd alpha_f / (pf alpha_d)` under TPC; a lower bound on achievable
/// error probability, zero exactly on the diagonal.
pub fn j_divergence(params: &LargeSystemParams, mode: PowerMode) -> Result<f64> {
    let ratio = match mode {
        PowerMode::Ipc => params.pd / params.pf,
        PowerMode::Tpc => {
            params.pd * alpha_f(params.pf, params.snr, params.n_div)
                / (params.pf * alpha_d(params.pd, params.snr, params.n_div))
        }
        PowerMode::Raw => {
            return Err(Error::InvalidParameter(
                "J-divergence closed forms exist for IPC and TPC scaling only".into(),
            ))
        }
    };
    Ok(params.n_div as f64 * (ratio + 1.0 / ratio - 2.0))
}

/// Threshold `gamma` with `pf0(gamma) = target`, by monotone bisection to
/// [`INVERT_PF0_TOL`] in probability.
pub fn invert_pf0(params: &LargeSystemParams, mode: PowerMode, target: f64) -> Result<f64> {
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "target false-alarm rate must be in (0, 1], got {target}"
        )));
    }
    let pf0 = |g: f64| point(params, mode, g).map(|(pf0, _)| pf0);
    let mut lo = 0.0;
    let mut hi = 1.0;
    while pf0(hi)? > target {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "failed to bracket pf0 = {target}"
            )));
        }
    }
    // pf0 is continuous and strictly decreasing in gamma.
    while pf0(lo)? - pf0(hi)? > INVERT_PF0_TOL {
        let mid = 0.5 * (lo + hi);
        if pf0(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Detection probability at a fixed operating false-alarm rate.
pub fn pd0_at_pf0(params: &LargeSystemParams, mode: PowerMode, target_pf0: f64) -> Result<f64> {
    let gamma = invert_pf0(params, mode, target_pf0)?;
    point(params, mode, gamma).map(|(_, pd0)| pd0)
}

/// Search the integer diversity grid `1..=n_max` for the TPC-optimal order
/// at a fixed operating false-alarm rate.
///
/// Unlike IPC — where more diversity always helps — the TPC detection
/// probability rises and then falls with `N`; returns the argmax and the
/// whole profile.
pub fn optimal_tpc_diversity(
    pd: f64,
    pf: f64,
    snr: f64,
    target_pf0: f64,
    n_max: usize,
) -> Result<(usize, Vec<f64>)> {
    if n_max == 0 || n_max > MAX_DIVERSITY {
        return Err(Error::DiversityOutOfRange {
            n: n_max,
            max: MAX_DIVERSITY,
        });
    }
    let mut profile = Vec::with_capacity(n_max);
    let mut best = (1usize, f64::NEG_INFINITY);
    for n in 1..=n_max {
        let params = LargeSystemParams::new(pd, pf, n, snr)?;
        let pd0 = pd0_at_pf0(&params, PowerMode::Tpc, target_pf0)?;
        if pd0 > best.1 {
            best = (n, pd0);
        }
        profile.push(pd0);
    }
    Ok((best.0, profile))
}
