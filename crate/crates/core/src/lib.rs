//! Dual-model Bayesian inference for chaotic attractors.
//!
//! * [`dynamics`]: Lorenz and Rössler vector fields with a fixed-step RK4 integrator.
//! * [`sectioning`]: Poincaré sections and Mahalanobis discrepancies (model A).
//! * [`recurrence`]: correlation integrals, Fibonacci-window burst profiles,
//!   summary vectors and the weighted L1 distance (model B).
//! * [`inference`]: truncated Student-t priors, adaptive random-walk
//!   Metropolis-Hastings and ABC-MCMC with a Laplace kernel.
//! * [`baselines`]: fixed-window rolling volatility and standardized-return alerts.

// `!(x > 0.0)` is used on purpose: unlike `x <= 0.0` it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod dynamics;
mod error;
pub mod inference;
pub mod recurrence;
pub mod sectioning;
pub(crate) mod stats;

pub use error::{Error, Result};

/// Format a float with 17 significant digits, as used by every CSV writer in the crate.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}
