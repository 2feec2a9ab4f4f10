//! Estimate how a fixed prediction model performs on an external population
//! that is known only through summary statistics.
//!
//! The internal sample is reweighted so that its weighted moments reproduce
//! the external ones while staying as close as possible (in KL divergence) to
//! uniform weights. Model performance on the reweighted sample then serves as
//! the external estimate.
//!
//! Modules:
//! - [`data`]: samples, moment transforms and external targets
//! - [`balancer`]: weight solvers, feasibility diagnostics, worst-case bound
//! - [`metrics`]: weighted AUC / log-loss / Brier and bootstrap intervals
//! - [`simulator`]: structural-equation data generator
//! - [`glm`]: elastic-net logistic regression
//! - [`experiment`]: the synthetic study harness

pub mod balancer;
pub mod data;
mod error;
pub mod experiment;
pub mod glm;
pub mod matrix;
pub mod metrics;
pub mod par;
pub mod rng;
pub mod simulator;

pub use error::{Error, Result};
pub use matrix::Matrix;
