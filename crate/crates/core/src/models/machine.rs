//! Tagged union over the three machine classes and its JSON form.
//!
//! ```json
//! {"type": "mm", "p": 0.5, "q": 0.5}
//! {"type": "hmm", "t_a": [[0.5, 0.5], [0, 0]], "t_b": [[0, 0], [0.5, 0.5]]}
//! {"type": "hqmm_restricted", "a": 0.5, "phi": 1.0, "theta": 2.0}
//! {"type": "hqmm", "k_a": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]], "k_b": [[[0, 0], [0, 0]], [[0, 0], [0, 0]]]}
//! ```
//!
//! Matrices are row-major nested arrays; complex entries are `[re, im]`.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{HiddenMarkovModel, HqmmModel, MarkovModel, Op2, RestrictedParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Machine {
    Mm(MarkovModel),
    Hmm(HiddenMarkovModel),
    RestrictedHqmm(RestrictedParams),
    Hqmm(HqmmModel),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum MachineDoc {
    Mm {
        p: f64,
        q: f64,
    },
    Hmm {
        t_a: Vec<Vec<f64>>,
        t_b: Vec<Vec<f64>>,
    },
    HqmmRestricted {
        a: f64,
        phi: f64,
        theta: f64,
    },
    Hqmm {
        k_a: [[[f64; 2]; 2]; 2],
        k_b: [[[f64; 2]; 2]; 2],
    },
}

fn rows_to_matrix(name: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Shape(format!("{name} must be a square row-major array")));
    }
    Ok(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn pairs_to_op(p: &[[[f64; 2]; 2]; 2]) -> Op2 {
    Op2::from_fn(|r, c| Complex64::new(p[r][c][0], p[r][c][1]))
}

fn op_to_pairs(m: &Op2) -> [[[f64; 2]; 2]; 2] {
    let e = |r: usize, c: usize| [m[(r, c)].re, m[(r, c)].im];
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

impl Machine {
    /// Parses and validates a machine document. JSON syntax problems come back
    /// as [`Error::Json`]; everything else is a validation error.
    pub fn from_json(s: &str) -> Result<Machine> {
        let doc: MachineDoc = serde_json::from_str(s)?;
        Machine::from_doc(doc)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Machine> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Machine::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("machine documents always serialize")
    }

    fn from_doc(doc: MachineDoc) -> Result<Machine> {
        Ok(match doc {
            MachineDoc::Mm { p, q } => Machine::Mm(MarkovModel::new(p, q)?),
            MachineDoc::Hmm { t_a, t_b } => Machine::Hmm(HiddenMarkovModel::new(
                rows_to_matrix("t_a", &t_a)?,
                rows_to_matrix("t_b", &t_b)?,
            )?),
            MachineDoc::HqmmRestricted { a, phi, theta } => {
                Machine::RestrictedHqmm(RestrictedParams::new(a, phi, theta)?)
            }
            MachineDoc::Hqmm { k_a, k_b } => Machine::Hqmm(HqmmModel::new(pairs_to_op(&k_a), pairs_to_op(&k_b))?),
        })
    }

    fn to_doc(&self) -> MachineDoc {
        match self {
            Machine::Mm(mm) => MachineDoc::Mm { p: mm.p(), q: mm.q() },
            Machine::Hmm(h) => MachineDoc::Hmm {
                t_a: matrix_to_rows(h.t_a()),
                t_b: matrix_to_rows(h.t_b()),
            },
            Machine::RestrictedHqmm(r) => MachineDoc::HqmmRestricted {
                a: r.a,
                phi: r.phi,
                theta: r.theta,
            },
            Machine::Hqmm(q) => MachineDoc::Hqmm {
                k_a: op_to_pairs(q.k_a()),
                k_b: op_to_pairs(q.k_b()),
            },
        }
    }

    /// `mm`, `hmm_n<N>`, `hqmm_restricted` or `hqmm`.
    pub fn class_tag(&self) -> String {
        match self {
            Machine::Mm(_) => "mm".into(),
            Machine::Hmm(h) => format!("hmm_n{}", h.n_states()),
            Machine::RestrictedHqmm(_) => "hqmm_restricted".into(),
            Machine::Hqmm(_) => "hqmm".into(),
        }
    }

    /// Flattened parameters, in the order given by [`Machine::parameter_names`].
    ///
    /// * `mm`: `p, q`
    /// * `hmm`: `T_A` row-major, then `T_B` row-major
    /// * `hqmm_restricted`: `a, phi, theta`
    /// * `hqmm`: `K_A` then `K_B`, row-major, each entry as `re, im`
    pub fn parameters(&self) -> Vec<f64> {
        match self {
            Machine::Mm(mm) => vec![mm.p(), mm.q()],
            Machine::Hmm(h) => {
                let mut v = Vec::with_capacity(2 * h.n_states() * h.n_states());
                for m in [h.t_a(), h.t_b()] {
                    v.extend(m.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()));
                }
                v
            }
            Machine::RestrictedHqmm(r) => vec![r.a, r.phi, r.theta],
            Machine::Hqmm(q) => [q.k_a(), q.k_b()]
                .into_iter()
                .flat_map(|k| (0..2).flat_map(move |r| (0..2).flat_map(move |c| [k[(r, c)].re, k[(r, c)].im])))
                .collect(),
        }
    }

    pub fn parameter_names(&self) -> Vec<String> {
        match self {
            Machine::Mm(_) => vec!["p".into(), "q".into()],
            Machine::Hmm(h) => {
                let n = h.n_states();
                ["ta", "tb"]
                    .iter()
                    .flat_map(|m| (0..n).flat_map(move |r| (0..n).map(move |c| format!("{m}_{r}_{c}"))))
                    .collect()
            }
            Machine::RestrictedHqmm(_) => vec!["a".into(), "phi".into(), "theta".into()],
            Machine::Hqmm(_) => ["ka", "kb"]
                .iter()
                .flat_map(|k| {
                    (0..2).flat_map(move |r| {
                        (0..2).flat_map(move |c| [format!("{k}_{r}_{c}_re"), format!("{k}_{r}_{c}_im")])
                    })
                })
                .collect(),
        }
    }

    /// Kraus pair for the quantum classes.
    pub fn quantum(&self) -> Option<HqmmModel> {
        match self {
            Machine::RestrictedHqmm(r) => Some(HqmmModel::restricted(r)),
            Machine::Hqmm(q) => Some(q.clone()),
            _ => None,
        }
    }

    /// HMM form for the classical classes (Markov models via their embedding).
    pub fn classical(&self) -> Option<HiddenMarkovModel> {
        match self {
            Machine::Mm(mm) => Some(mm.to_hmm()),
            Machine::Hmm(h) => Some(h.clone()),
            _ => None,
        }
    }
}
