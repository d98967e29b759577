//! Gaussian Bayesian networks with exogenous variables.
//!
//! Three score metrics are implemented on top of one conjugate
//! Normal–Inverse-Gamma model: BGe (no exogenous correction), the Bayesian
//! metric (Gaussian prior `b_i ~ N(0, ψ_i V)` on the exogenous effects) and
//! the residual metric (effects projected out, REML style). The crate also
//! computes the posteriors of the regression parameters under the two
//! exogenous-aware approaches, the closed-form Kullback–Leibler divergence
//! between them, and simulation studies built on those divergences.

pub mod cli;
pub mod divergence;
pub mod error;
pub mod io;
pub mod model;
pub mod numerics;
pub mod posterior;
pub mod scores;
pub mod search;
pub mod seeds;
pub mod simgen;
pub mod study;

pub use error::{DatasetIssue, Error, Result};
