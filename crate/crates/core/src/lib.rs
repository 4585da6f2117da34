//! Simulation and estimation toolkit for direct multi-step prediction with
//! subset autoregressions when the driving errors are conditionally
//! heteroscedastic.
//!
//! The crate covers the whole pipeline:
//!
//! * [`innovations`], [`volatility`], [`linear_process`] and [`dgp`] simulate
//!   `x_t = Σ α_i ε_{t-i}` with `ε_t = σ_t z_t` (GARCH family or stochastic
//!   volatility);
//! * [`autocov_probe`] builds sample autocovariance matrices and probes the
//!   negative moments of their smallest eigenvalue;
//! * [`predictor`] fits direct `h`-step least-squares subset-AR predictors;
//! * [`population`] estimates the moment matrices behind the second-order
//!   mean squared prediction error and its decomposition;
//! * [`selection`] implements MRIC, AIC and BIC and the population oracle sets;
//! * [`experiments`] runs reproducible, replication-parallel Monte Carlo studies.

// `!(x > 0.0)` is used on purpose so NaN parameters are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autocov_probe;
pub mod dgp;
pub mod error;
pub mod experiments;
pub mod innovations;
pub mod linalg;
pub mod linear_process;
mod poly;
pub mod population;
pub mod predictor;
pub mod rng;
pub mod selection;
pub mod stats;
pub mod volatility;

pub use dgp::{Dgp, Realization};
pub use error::{Error, Result};
pub use innovations::InnovationDist;
pub use linear_process::LinearFilter;
pub use predictor::{FitResult, SubsetSpec};
pub use rng::{RngStream, Seed};
pub use volatility::VolatilityModel;
