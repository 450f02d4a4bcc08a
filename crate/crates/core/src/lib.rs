//! Two-state multinomial hidden Markov models close to the i.i.d. boundary.
//!
//! The crate is organised bottom-up:
//!
//! - [`params`]: native `(p, q, f0, f1)` and reparametrized `(phi, psi)`
//!   coordinates, constraint boxes, label-switch canonicalization and sampling.
//! - [`triple_law`]: the law of three consecutive observations, the moment
//!   vector `m(phi)` with its inverse, and the `rho` pseudo-distance.
//! - [`simulator`]: exact path sampling and the empirical triple law.
//! - [`filter_kl`]: prediction filters, exact log-likelihoods and Monte-Carlo
//!   Kullback-Leibler estimates.
//! - [`estimator`]: minimum-distance fitting of `(phi, psi)` from a triple law.
//! - [`experiments`]: rate sweeps, two-point lower-bound pairs and
//!   likelihood-ratio threshold probes.
//!
//! Observation symbols are `0..K` in memory. Files written by the CLI use
//! `1..=K`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod estimator;
pub mod experiments;
pub mod filter_kl;
pub mod params;
pub mod seed;
pub mod simulator;
pub mod triple_law;

pub use error::{Error, Result};
pub use params::{ConstraintBox, PhiPsiParams, ThetaParams};
pub use triple_law::{MomentVector, TripleLaw};
