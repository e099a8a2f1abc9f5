//! Decision fusion over a Rayleigh fading diversity multiple-access channel.
//!
//! A wireless sensor network takes binary local decisions and signals them
//! with on-off keying over a shared flat-fading channel; a fusion center with
//! `N` diversity branches observes the superposition and must decide which
//! hypothesis produced the decisions. This crate provides the building blocks
//! for simulating and analyzing that system:
//!
//! - [`sensor`] — heterogeneous sensor ensembles and local decision sampling;
//! - [`pmf`] — exact Poisson-Binomial distributions of the active-sensor
//!   count, with interchangeable computation engines;
//! - [`optimality`] — the count-domain log-likelihood ratio and sufficient
//!   conditions certifying that thresholding received energy is the optimal
//!   fusion rule;
//! - [`fusion`] — the exact energy-domain LLR, the energy test, and numeric
//!   monotonicity scans;
//! - [`channel`] — Monte Carlo simulation of the fading MAC under raw,
//!   individual-power-constraint (IPC) and total-power-constraint (TPC)
//!   scalings, with worker-count-invariant substreams;
//! - [`asymptotics`] — closed-form large-system (`K -> inf`) ROC curves,
//!   attenuation factors and J-divergences;
//! - [`roc`] — empirical ROC estimation and curve comparison.

pub mod asymptotics;
pub mod channel;
pub mod error;
pub mod fusion;
pub mod optimality;
pub mod pmf;
pub mod roc;
pub mod sensor;

pub use crate::asymptotics::LargeSystemParams;
pub use crate::channel::{ChannelConfig, EnergySample, PowerMode};
pub use crate::error::{Error, Result};
pub use crate::fusion::{FusionModel, TestOutcome};
pub use crate::optimality::{EllLlr, OptimalityReport};
pub use crate::pmf::{CountDistribution, PmfEngine};
pub use crate::roc::{McConfig, Provenance, RocCurve, RocPoint, ThresholdPolicy};
pub use crate::sensor::{DecisionVector, Hypothesis, SensorEnsemble};
