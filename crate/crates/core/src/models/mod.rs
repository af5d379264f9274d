//! Machine classes: Markov models, hidden Markov models and one-qubit hidden
//! quantum Markov models, all with output alphabet `{A, B}`.
//!
//! States are column vectors acted on from the left. Classical state `i`
//! (0-based) and qubit basis vector `|i>` are indexed from zero.

mod classical;
mod machine;
mod quantum;
mod symbol;

pub use classical::{HiddenMarkovModel, MarkovModel, ProbVector, TransitionMatrix};
pub use machine::Machine;
pub(crate) use quantum::hermitize;
pub use quantum::{
    completeness_deviation, decay_realization, emission_operator, no_emission_operator, restricted_kraus, rotation_a,
    rotation_b, DensityMatrix, HqmmModel, Op2, PureState, RestrictedParams,
};
pub use symbol::{Symbol, Word};

/// Tolerance for user-supplied matrices (may be rounded decimals from a file).
pub const USER_TOL: f64 = 1e-10;
/// Tolerance for internally constructed matrices and states.
pub const INTERNAL_TOL: f64 = 1e-12;
