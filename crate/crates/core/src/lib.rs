//! Bayesian learning of Mamdani fuzzy inference systems.
//!
//! The membership-function half-widths (and optionally the noise scale and
//! per-rule inclusion flags) of a fuzzy rule base are treated as unknown
//! parameters and sampled from their posterior with a Metropolis-within-Gibbs
//! sampler. The crate also ships the convergence diagnostics, Bayesian GLM
//! baselines, seeded synthetic data generators and posterior-predictive tools
//! used to evaluate such fits.

pub mod datagen;
pub mod diagnostics;
pub mod error;
pub mod fuzzy;
pub mod models;
pub mod presets;
pub mod probability;
pub mod sampler;

pub use error::{Error, Result};
