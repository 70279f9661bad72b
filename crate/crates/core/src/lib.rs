//! Smoothing iterative consensus-based optimization for nonsmooth,
//! nonconvex problems.
//!
//! A population of particles is pulled toward a Gibbs-weighted consensus
//! point of a smoothed objective while a shared Gaussian perturbation keeps
//! exploring. The smoothing parameter decreases along a schedule so that the
//! particles settle on a minimizer of the original function.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod nn;
pub mod search_box;
pub mod smoothing;
pub mod solver;
pub mod testbed;

pub use error::{Error, Result};
pub use search_box::SearchBox;
pub use smoothing::{MuSchedule, SmoothedObjective, SmoothingParams};
pub use solver::{run, RunReport, SicboConfig, StopRule};
