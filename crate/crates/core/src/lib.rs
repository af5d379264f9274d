//! Stochastic generators with two output symbols: Markov models, hidden Markov
//! models and hidden quantum Markov models with a single memory qubit.
//!
//! The crate computes stationary states and word probabilities analytically,
//! estimates the same probabilities from simulated trajectories, and sweeps
//! random ensembles of machines to compare the correlations each class can
//! produce.

// `!(x <= tol)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod models;
pub mod sampler;
pub mod stationary;
pub mod trajectory;
pub mod wordprob;

pub use error::{Error, Result};
pub use models::{
    DensityMatrix, HiddenMarkovModel, HqmmModel, Machine, MarkovModel, ProbVector, PureState, RestrictedParams, Symbol,
    Word,
};
pub use stationary::{FixedPointReport, SolverSettings, StationaryState};
pub use trajectory::RngSeed;
