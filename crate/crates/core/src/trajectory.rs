//! Monte Carlo trajectories and sliding-window frequency estimates.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{HiddenMarkovModel, HqmmModel, Machine, ProbVector, PureState, Symbol, Word};

/// Generator used for every random stream in the crate.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.9): seed_from_u64(master_seed), set_stream(stream_index)";

/// Identifies one independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl RngSeed {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        RngSeed {
            master_seed,
            stream_index,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MachineState {
    Classical(ProbVector),
    Quantum(PureState),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub symbols: Word,
    pub final_state: MachineState,
    pub steps: usize,
}

impl TrajectoryRecord {
    /// The emitted symbols as a string of `A`/`B` characters.
    pub fn to_text(&self) -> String {
        self.symbols.to_string()
    }
}

/// One emission of a classical machine from belief state `state`.
///
/// Draws `m` with probability `eta T_m p` and returns the posterior
/// `T_m p / Pr(m)`.
pub fn step_classical<R: Rng + ?Sized>(
    hmm: &HiddenMarkovModel,
    state: &ProbVector,
    rng: &mut R,
) -> Result<(Symbol, ProbVector)> {
    let next_a = hmm.t_a() * state.as_vector();
    let next_b = hmm.t_b() * state.as_vector();
    let (pa, pb) = (next_a.sum(), next_b.sum());
    let total = pa + pb;
    if !(total > 0.0) {
        return Err(Error::Contract("both emission branches have zero probability".into()));
    }
    let u: f64 = rng.random::<f64>() * total;
    let (sym, v): (Symbol, DVector<f64>) = if u < pa {
        (Symbol::A, next_a)
    } else {
        (Symbol::B, next_b)
    };
    Ok((sym, ProbVector::from_unnormalized(v)))
}

/// One generalized measurement on a pure state.
///
/// Draws `m` with probability `||K_m psi||^2` and returns `K_m psi / ||K_m psi||`.
pub fn step_quantum<R: Rng + ?Sized>(hqmm: &HqmmModel, state: &PureState, rng: &mut R) -> Result<(Symbol, PureState)> {
    let psi = state.amplitudes();
    let next_a = hqmm.k_a() * psi;
    let next_b = hqmm.k_b() * psi;
    let (pa, pb) = (next_a.norm_squared(), next_b.norm_squared());
    let total = pa + pb;
    if !(total > 0.0) {
        return Err(Error::Contract("both Kraus branches annihilate the state".into()));
    }
    let u: f64 = rng.random::<f64>() * total;
    let (sym, v) = if u < pa {
        (Symbol::A, next_a)
    } else {
        (Symbol::B, next_b)
    };
    let post = PureState::normalize(v).expect("chosen branch has positive weight");
    Ok((sym, post))
}

/// Branch probabilities `(Pr(A), Pr(B))` for a pure state.
pub fn quantum_branch_probs(hqmm: &HqmmModel, state: &PureState) -> (f64, f64) {
    let psi = state.amplitudes();
    ((hqmm.k_a() * psi).norm_squared(), (hqmm.k_b() * psi).norm_squared())
}

/// Runs `burn_in` unrecorded steps then records `n_steps` symbols.
///
/// Classical machines start from the uniform belief vector, quantum machines
/// from `|0>`. The result depends only on the arguments.
pub fn simulate(machine: &Machine, n_steps: usize, burn_in: usize, seed: RngSeed) -> Result<TrajectoryRecord> {
    if n_steps == 0 {
        return Err(Error::Contract("n_steps must be at least 1".into()));
    }
    let mut rng = seed.rng();
    let mut symbols = Vec::with_capacity(n_steps);
    let final_state = if let Some(hmm) = machine.classical() {
        let mut state = ProbVector::uniform(hmm.n_states());
        for k in 0..burn_in + n_steps {
            let (s, next) = step_classical(&hmm, &state, &mut rng)?;
            if k >= burn_in {
                symbols.push(s);
            }
            state = next;
        }
        MachineState::Classical(state)
    } else {
        let hqmm = machine.quantum().expect("machine is classical or quantum");
        let mut state = PureState::basis(0);
        for k in 0..burn_in + n_steps {
            let (s, next) = step_quantum(&hqmm, &state, &mut rng)?;
            if k >= burn_in {
                symbols.push(s);
            }
            state = next;
        }
        MachineState::Quantum(state)
    };
    Ok(TrajectoryRecord {
        symbols: Word::new(symbols)?,
        final_state,
        steps: n_steps,
    })
}

/// Frequency of a word over all overlapping windows of a trajectory.
///
/// `stderr` is the binomial `sqrt(p (1 - p) / windows)`; it ignores the
/// correlation between overlapping windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalEstimate {
    pub estimate: f64,
    pub count: u64,
    pub windows: u64,
    pub stderr: f64,
}

impl EmpiricalEstimate {
    pub fn from_counts(count: u64, windows: u64) -> Self {
        let estimate = count as f64 / windows as f64;
        EmpiricalEstimate {
            estimate,
            count,
            windows,
            stderr: (estimate * (1.0 - estimate) / windows as f64).sqrt(),
        }
    }

    /// `|estimate - expected|` in units of `stderr`. Infinite when the two
    /// differ but `stderr` is zero.
    pub fn z_score(&self, expected: f64) -> f64 {
        let d = (self.estimate - expected).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.stderr
        }
    }
}

pub fn empirical_word_prob(record: &TrajectoryRecord, word: &Word) -> Result<EmpiricalEstimate> {
    count_windows(record.symbols.symbols(), word)
}

pub(crate) fn count_windows(symbols: &[Symbol], word: &Word) -> Result<EmpiricalEstimate> {
    let pattern = word.symbols();
    if symbols.len() < pattern.len() {
        return Err(Error::Contract(format!(
            "trajectory of {} steps is shorter than word {word}",
            symbols.len()
        )));
    }
    let count = symbols.windows(pattern.len()).filter(|w| *w == pattern).count() as u64;
    let windows = (symbols.len() - pattern.len() + 1) as u64;
    Ok(EmpiricalEstimate::from_counts(count, windows))
}
