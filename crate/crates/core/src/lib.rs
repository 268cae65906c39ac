//! Bayesian inference for rank data with categorical covariates.
//!
//! Each category `j` has a central ranking `π_j`; observed rankings are
//! `σ ∘ π_j` with the perturbation `σ` drawn from a distribution `θ` over the
//! symmetric group. The crate provides the model, Gibbs (data augmentation) and
//! sandwich samplers, Rao-Blackwellised estimators, Monte Carlo EM for the
//! Dirichlet precision, exact small-instance oracles and convergence
//! diagnostics.

pub mod diagnostics;
pub mod em;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod permutation;
pub mod quadrature;
pub mod rng;
pub mod samplers;
pub mod special;

pub use error::{Error, PermError, Result};
pub use model::{CentralRanks, HyperParams, PriorPi, RankCounts, RankModel, ThetaVector};
pub use permutation::{GroupTables, PermIndex, Permutation};
