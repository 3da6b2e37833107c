//! Support recovery in the multi-task Normal means model.
//!
//! The crate provides the closed-form Lasso, group Lasso (ℓ₁/ℓ₂ and ℓ₁/ℓ∞)
//! and union support estimators, their analytic penalty calibration, the
//! minimax lower bound on the signal level, and a seeded Monte-Carlo harness
//! that measures exact-recovery probability across a grid of signal levels.

pub mod calibration;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod io;
pub mod model;
pub mod oracles;
pub mod plot;
pub mod special;
pub mod theory;

pub use error::{CalibrationError, ConfigError, Error, Result};
pub use estimators::{MeanEstimate, Procedure};
pub use model::{Instance, ProblemConfig, SupportSet};
