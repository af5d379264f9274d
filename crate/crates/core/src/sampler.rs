//! Random machine ensembles.
//!
//! * Markov models: `p`, `q` independent uniform on `(0, 1)`.
//! * Hidden Markov models: each column of `T` from the flat Dirichlet
//!   distribution (normalized unit exponentials); each entry `t` split as
//!   `T_A = u t`, `T_B = t - u t` with `u` uniform on `(0, 1)`, independently.
//! * Restricted HQMMs: `a` uniform on `(0, 1)`, `phi` and `theta` uniform on
//!   `(0, 2 pi)`.
//!
//! Exact endpoint draws are rejected and redrawn. Machine `i` of an ensemble
//! uses stream `i` of the ensemble's master seed.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{HiddenMarkovModel, HqmmModel, Machine, MarkovModel, RestrictedParams, INTERNAL_TOL};
use crate::trajectory::RngSeed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MachineClass {
    Mm,
    Hmm,
    HqmmRestricted,
}

impl MachineClass {
    pub fn distribution(self) -> &'static str {
        match self {
            MachineClass::Mm => "p, q ~ U(0,1) independent",
            MachineClass::Hmm => {
                "columns of T ~ Dirichlet(1,...,1); T_A = u*T, T_B = T - T_A with u ~ U(0,1) per entry"
            }
            MachineClass::HqmmRestricted => "a ~ U(0,1); phi, theta ~ U(0,2pi) independent",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub machine_class: MachineClass,
    /// Hidden state count; HMM ensembles only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_states: Option<usize>,
    pub n_machines: usize,
    pub master_seed: u64,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_machines == 0 {
            return Err(Error::Config("n_machines must be at least 1".into()));
        }
        match (self.machine_class, self.n_states) {
            (MachineClass::Hmm, Some(n)) if n >= 2 => Ok(()),
            (MachineClass::Hmm, _) => Err(Error::Config("hmm ensembles need n_states >= 2".into())),
            (_, Some(_)) => Err(Error::Config("n_states applies only to hmm ensembles".into())),
            _ => Ok(()),
        }
    }

    pub fn seed(&self, index: usize) -> RngSeed {
        RngSeed::new(self.master_seed, index as u64)
    }

    /// Machine `index` of this ensemble.
    pub fn sample(&self, index: usize) -> Result<Machine> {
        let seed = self.seed(index);
        Ok(match self.machine_class {
            MachineClass::Mm => Machine::Mm(sample_mm(seed)),
            MachineClass::Hmm => {
                let n = self
                    .n_states
                    .ok_or_else(|| Error::Config("hmm ensembles need n_states".into()))?;
                Machine::Hmm(sample_hmm(n, seed)?)
            }
            MachineClass::HqmmRestricted => Machine::RestrictedHqmm(sample_restricted_params(seed)),
        })
    }

    /// Class tag shared by every machine in the ensemble.
    pub fn class_tag(&self) -> String {
        match self.machine_class {
            MachineClass::Mm => "mm".into(),
            MachineClass::Hmm => format!("hmm_n{}", self.n_states.unwrap_or(0)),
            MachineClass::HqmmRestricted => "hqmm_restricted".into(),
        }
    }
}

/// Uniform on the open interval `(0, hi)`.
fn open_uniform<R: Rng + ?Sized>(rng: &mut R, hi: f64) -> f64 {
    loop {
        let x = rng.random::<f64>() * hi;
        if x > 0.0 && x < hi {
            return x;
        }
    }
}

pub fn sample_mm_with<R: Rng + ?Sized>(rng: &mut R) -> MarkovModel {
    let p = open_uniform(rng, 1.0);
    let q = open_uniform(rng, 1.0);
    MarkovModel::new(p, q).expect("open-interval draws")
}

pub fn sample_mm(seed: RngSeed) -> MarkovModel {
    sample_mm_with(&mut seed.rng())
}

pub fn sample_hmm_with<R: Rng + ?Sized>(n_states: usize, rng: &mut R) -> Result<HiddenMarkovModel> {
    if n_states < 2 {
        return Err(Error::Domain {
            name: "n_states",
            value: n_states as f64,
            range: "[2, inf)",
        });
    }
    let mut t = DMatrix::<f64>::zeros(n_states, n_states);
    for mut col in t.column_iter_mut() {
        for v in col.iter_mut() {
            *v = Exp1.sample(rng);
        }
        let s = col.sum();
        col /= s;
    }
    let mut t_a = DMatrix::zeros(n_states, n_states);
    let mut t_b = DMatrix::zeros(n_states, n_states);
    for c in 0..n_states {
        for r in 0..n_states {
            let u = open_uniform(rng, 1.0);
            let a = u * t[(r, c)];
            t_a[(r, c)] = a;
            t_b[(r, c)] = t[(r, c)] - a;
        }
    }
    HiddenMarkovModel::with_tolerance(t_a, t_b, INTERNAL_TOL)
}

pub fn sample_hmm(n_states: usize, seed: RngSeed) -> Result<HiddenMarkovModel> {
    sample_hmm_with(n_states, &mut seed.rng())
}

pub fn sample_restricted_params_with<R: Rng + ?Sized>(rng: &mut R) -> RestrictedParams {
    let a = open_uniform(rng, 1.0);
    let phi = open_uniform(rng, TAU);
    let theta = open_uniform(rng, TAU);
    RestrictedParams::new(a, phi, theta).expect("open-interval draws")
}

pub fn sample_restricted_params(seed: RngSeed) -> RestrictedParams {
    sample_restricted_params_with(&mut seed.rng())
}

pub fn sample_restricted_hqmm(seed: RngSeed) -> HqmmModel {
    HqmmModel::restricted(&sample_restricted_params(seed))
}
