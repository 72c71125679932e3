//! Bayesian knockoff filter.
//!
//! Implements knockoff-based variable selection where the knockoff copy is
//! treated as missing data and integrated out by Gibbs sampling. The pieces:
//!
//! - [`knockoff`]: second-order Gaussian knockoff model, its conditional law,
//!   and the exchangeability diagnostic.
//! - [`gibbs`]: data-augmentation samplers for Gaussian-linear and probit
//!   responses, under flat or spike-and-slab priors.
//! - [`selection`]: flip-sign feature statistics, posterior null-probability
//!   bounds, and greedy selection controlling Bayesian FDR.
//! - [`experiments`]: synthetic designs, replication harness, and scoring.
//!
//! Supporting layers: [`linalg`] (symmetric matrices, strict Cholesky),
//! [`dist`] (MVN, truncated-normal, inverse-gamma draws), [`rng`]
//! (reproducible counter-based streams), [`dataset`] (CSV-backed data).

pub mod dataset;
pub mod dist;
pub mod error;
pub mod experiments;
pub mod gibbs;
pub mod knockoff;
pub mod linalg;
pub mod rng;
pub mod selection;

pub use error::{Error, Result};
pub use linalg::{cholesky, regularize_to_pd, CholeskyFactor, SymmetricMatrix};
pub use rng::{derive_seed, RngStream};
