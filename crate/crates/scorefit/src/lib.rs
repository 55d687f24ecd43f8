//! Recover true quality scores, subject biases and subject inconsistencies
//! from raw subjective opinion scores.
//!
//! Raw scores from a subjective test are noisy: every subject carries a
//! systematic offset (bias) and a noise level of their own (inconsistency),
//! and some subjects vote close to randomly. This crate models each opinion
//! score as
//!
//! ```text
//! u[i][j][r] = psi[j] + delta[i] + upsilon[i] * x,   x ~ N(0, 1)
//! ```
//!
//! and solves for all parameters jointly by maximum likelihood, either with
//! a damped Newton-Raphson iteration ([`solver::solve_nr`]) or with the
//! faster alternating projection ([`solver::solve_ap`]), whose quality
//! estimate is a bias-subtracted, consistency-weighted mean opinion score.
//! Erratic subjects end up with a large inconsistency and are down-weighted
//! smoothly instead of being discarded.
//!
//! Also included, for comparison and for pipelines that require them:
//!
//! - the plain per-stimulus MOS with its maximum-likelihood reading
//!   ([`solver::solve_mos`]);
//! - hard subject rejection with the standard two-threshold rule and the
//!   bias-removal preprocessing step ([`legacy`]);
//! - three confidence-interval constructions, chi-square quantiles, NBIC
//!   model comparison and PLCC/SROCC agreement statistics
//!   ([`diagnostics`]);
//! - a fully seeded simulation harness for synthetic panels, vote
//!   corruption, robustness curves and interval-coverage studies
//!   ([`synthetic`]);
//! - CSV/JSON dataset ingestion and lossless report serialization
//!   ([`dataset`], [`report`]), plus a small CLI ([`cli`]).
//!
//! The `examples/` directory walks through every major capability; start
//! with `fit_methods`.
//!
//! ```
//! use scorefit::solver::{solve_ap, SolverConfig};
//! use scorefit::tensor::ScoreTensor;
//!
//! let votes = ScoreTensor::from_complete(&[
//!     vec![4.0, 2.0, 3.0],
//!     vec![5.0, 3.0, 4.0],
//!     vec![4.5, 2.5, 3.5],
//! ])?;
//! let fit = solve_ap(&votes, &SolverConfig::ap())?;
//! assert_eq!(fit.psi().len(), 3);
//! # Ok::<(), scorefit::error::Error>(())
//! ```

pub mod cli;
pub mod dataset;
pub mod diagnostics;
pub mod error;
pub mod legacy;
pub mod model;
pub mod report;
pub mod rng;
pub mod solver;
pub mod synthetic;
pub mod tensor;

pub use error::{Error, Result};
pub use model::{ModelParams, MosParams};
pub use solver::{FitReport, Method, SolverConfig};
pub use tensor::{ScoreTensor, ScoreTensorBuilder};
