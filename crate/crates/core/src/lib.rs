//! Edge-exchangeable Bayesian nonparametric block models for directed multigraphs.
//!
//! The crate covers three generative models (the finite sparse block model, the
//! diagonal mixture of Dirichlet network distributions, and its nondiagonal
//! extension), collapsed Gibbs inference over the franchise seating state, and
//! a held-out link-prediction harness.
//!
//! Module map:
//!
//! * [`netcore`]: edge lists, multigraphs, degree statistics, train/test splits.
//! * [`crp`]: restaurant primitives, categorical and Dirichlet sampling, the RNG.
//! * [`genmodel`]: forward samplers and the synthetic benchmark presets.
//! * [`gibbs`]: seating state, collapsed Gibbs moves, checkpoints and traces.
//! * [`evalkit`]: edge scoring, negatives, AUC metrics, recovery and summaries.

pub mod crp;
pub mod error;
pub mod evalkit;
pub mod genmodel;
pub mod gibbs;
pub mod netcore;

pub use crate::error::{Error, Result};
