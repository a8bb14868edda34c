//! Synthetic conditional-means priors for Bayesian logistic regression.
//!
//! Expert beliefs about response probabilities at chosen covariate values
//! ([`prior::BcjPrior`]) are turned into pseudo-binomial rows, stacked with
//! the observed data ([`model::augment`]), and the posterior is sampled by an
//! exact Pólya-Gamma Gibbs sampler ([`gibbs::run_chain`]).
//!
//! Replicated simulations run in parallel on rayon when the `parallel`
//! feature is enabled (the default); see [`exec::Execution`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod gibbs;
pub mod linalg;
pub mod model;
pub mod polya_gamma;
pub mod prior;
pub mod ridge;
pub mod rng;
pub mod scenarios;

pub use error::{Error, Result};
pub use exec::Execution;
pub use gibbs::{run_chain, ChainConfig, PosteriorDraws};
pub use model::{augment, AugmentedDataset, Dataset};
pub use prior::{BcjPrior, DesignPoint, SyntheticObservation};
