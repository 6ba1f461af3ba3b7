//! Simulation-based bias correction.
//!
//! The just-identified indirect inference estimator (JIE) solves
//! `π̂_obs = (1/H) Σ_h π̂(θ, n, ω_{h+jH})` for `θ`, where `π̂` is any cheap,
//! possibly biased auxiliary estimator. It is computed by the iterative
//! bootstrap (IB) in [`ibcore`]. [`estimators`] provides the auxiliary
//! estimators, [`models`] the data generators, [`inference`] the plug-in
//! covariance and Monte-Carlo summaries, and [`harness`] the study runner.

// `!(x > 0.0)` is used on purpose so NaN fails the check too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod csvfmt;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod ibcore;
pub mod inference;
pub mod linalg;
pub mod models;
pub mod seedstream;

pub use error::{Error, Result};
pub use estimators::{estimator_by_name, AuxiliaryEstimator, Fit, FitOptions, FitStatus};
pub use ibcore::{pi_bar, solve_jie, IBConfig, IBResult, ParameterVector, SyntheticBiasModel};
pub use models::{Dataset, Design, Simulator};
pub use seedstream::SeedId;
