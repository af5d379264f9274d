//! Stationary word probabilities.
//!
//! For a classical machine `P(i_1 ... i_m) = eta T_{i_m} ... T_{i_1} p_ss`
//! with `eta` the all-ones row vector. For a quantum machine the sub-transition
//! matrices become Kraus sandwiches `X -> K X K^dag` and `eta` becomes the trace.
//!
//! Gap probabilities use `g` = number of ignored symbols between the leading
//! and trailing `A`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{HiddenMarkovModel, HqmmModel, Machine, MarkovModel, Op2, ProbVector, Symbol, Word};
use crate::stationary::StationaryState;

/// Pattern `A`, then `g` unconstrained symbols, then `A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapSpec {
    pub g: usize,
}

impl GapSpec {
    pub fn new(g: usize) -> Self {
        GapSpec { g }
    }
}

const SLACK: f64 = 1e-12;

fn checked(value: f64) -> Result<f64> {
    if (-SLACK..=1.0 + SLACK).contains(&value) {
        Ok(value.clamp(0.0, 1.0))
    } else {
        Err(Error::Consistency { value })
    }
}

fn check_dim(hmm: &HiddenMarkovModel, p: &ProbVector) -> Result<()> {
    if hmm.n_states() != p.len() {
        return Err(Error::Contract(format!(
            "stationary vector has {} entries but the machine has {} states",
            p.len(),
            hmm.n_states()
        )));
    }
    Ok(())
}

fn propagate(hmm: &HiddenMarkovModel, mut x: DVector<f64>, symbols: impl IntoIterator<Item = Symbol>) -> DVector<f64> {
    for s in symbols {
        x = hmm.sub_matrix(s) * x;
    }
    x
}

pub fn hmm_word_prob(hmm: &HiddenMarkovModel, p_ss: &ProbVector, word: &Word) -> Result<f64> {
    check_dim(hmm, p_ss)?;
    checked(propagate(hmm, p_ss.as_vector().clone(), word.iter()).sum())
}

/// `eta T_A T_B^g T_A p_ss`, the probability of `A B^g A`.
pub fn hmm_block_prob(hmm: &HiddenMarkovModel, p_ss: &ProbVector, g: usize) -> Result<f64> {
    hmm_word_prob(hmm, p_ss, &Word::block(g))
}

/// `eta T_A T^g T_A p_ss` with `T = T_A + T_B`.
pub fn hmm_gap_prob(hmm: &HiddenMarkovModel, p_ss: &ProbVector, gap: GapSpec) -> Result<f64> {
    check_dim(hmm, p_ss)?;
    let mut x = hmm.t_a() * p_ss.as_vector();
    for _ in 0..gap.g {
        x = hmm.total() * x;
    }
    checked((hmm.t_a() * x).sum())
}

/// Closed form for `A B^m A` from a Markov model's stationary state:
/// `(1-p)(1-q)^2 / (2-p-q) * q^(m-1)`, defined for `m >= 1`.
pub fn mm_block_prob_closed(mm: &MarkovModel, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::Contract("block formula needs m >= 1".into()));
    }
    let (p, q) = (mm.p(), mm.q());
    let exp = i32::try_from(m - 1).map_err(|_| Error::Contract(format!("m = {m} too large")))?;
    checked((1.0 - p) * (1.0 - q) * (1.0 - q) / (2.0 - p - q) * q.powi(exp))
}

/// Gap formula for Markov models, evaluated literally as
/// `p_1 * [T^(m-1)]_00`.
///
/// Under the emission-on-entry convention this equals [`hmm_gap_prob`] on the
/// embedded chain with `g = m - 2` ignored symbols (for `m >= 2`); `m = 1`
/// returns `p_1`.
pub fn mm_gap_prob_paper(mm: &MarkovModel, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::Contract("gap formula needs m >= 1".into()));
    }
    let t = mm.transition_matrix().into_inner();
    let p1 = (1.0 - mm.q()) / (2.0 - mm.p() - mm.q());
    // First column of T^(m-1).
    let mut e = DVector::from_vec(vec![1.0, 0.0]);
    for _ in 0..m - 1 {
        e = &t * e;
    }
    checked(p1 * e[0])
}

fn sandwich(k: &Op2, x: &Op2) -> Op2 {
    k * x * k.adjoint()
}

fn trace(x: &Op2) -> f64 {
    (x[(0, 0)] + x[(1, 1)]).re
}

/// `Tr(K_{i_m} ... K_{i_1} rho K_{i_1}^dag ... K_{i_m}^dag)`.
pub fn hqmm_word_prob(hqmm: &HqmmModel, rho_ss: &crate::models::DensityMatrix, word: &Word) -> Result<f64> {
    let mut x = *rho_ss.matrix();
    for s in word.iter() {
        x = sandwich(hqmm.kraus(s), &x);
    }
    checked(trace(&x))
}

pub fn hqmm_block_prob(hqmm: &HqmmModel, rho_ss: &crate::models::DensityMatrix, g: usize) -> Result<f64> {
    hqmm_word_prob(hqmm, rho_ss, &Word::block(g))
}

/// `Tr(K_A K^g(K_A rho K_A^dag) K_A^dag)`; the conditional operator is propagated
/// without renormalization so the final trace is the joint probability.
pub fn hqmm_gap_prob(hqmm: &HqmmModel, rho_ss: &crate::models::DensityMatrix, gap: GapSpec) -> Result<f64> {
    let mut x = sandwich(hqmm.k_a(), rho_ss.matrix());
    for _ in 0..gap.g {
        x = hqmm.apply_raw(&x);
    }
    checked(trace(&sandwich(hqmm.k_a(), &x)))
}

/// Word probability for any machine given its stationary state.
pub fn word_prob(machine: &Machine, state: &StationaryState, word: &Word) -> Result<f64> {
    match (machine, state) {
        (Machine::Mm(_) | Machine::Hmm(_), StationaryState::Classical(p)) => {
            hmm_word_prob(&machine.classical().expect("classical machine"), p, word)
        }
        (Machine::RestrictedHqmm(_) | Machine::Hqmm(_), StationaryState::Quantum(rho)) => {
            hqmm_word_prob(&machine.quantum().expect("quantum machine"), rho, word)
        }
        _ => Err(Error::Contract("stationary state does not match machine class".into())),
    }
}

pub fn gap_prob(machine: &Machine, state: &StationaryState, gap: GapSpec) -> Result<f64> {
    match (machine, state) {
        (Machine::Mm(_) | Machine::Hmm(_), StationaryState::Classical(p)) => {
            hmm_gap_prob(&machine.classical().expect("classical machine"), p, gap)
        }
        (Machine::RestrictedHqmm(_) | Machine::Hqmm(_), StationaryState::Quantum(rho)) => {
            hqmm_gap_prob(&machine.quantum().expect("quantum machine"), rho, gap)
        }
        _ => Err(Error::Contract("stationary state does not match machine class".into())),
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_4;

    use nalgebra::DMatrix;

    use super::*;
    use crate::models::{restricted_kraus, DensityMatrix};
    use crate::stationary::{hqmm_stationary, mm_stationary, SolverSettings};

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    /// Chain product `p_{i1} t_{i2|i1} ... t_{im|i(m-1)}`, written out directly.
    fn mm_chain_product(mm: &MarkovModel, word: &Word) -> f64 {
        let (p, q) = (mm.p(), mm.q());
        let t = |to: usize, from: usize| match (to, from) {
            (0, 0) => p,
            (1, 1) => q,
            (1, 0) => 1.0 - p,
            _ => 1.0 - q,
        };
        let st = [(1.0 - q) / (2.0 - p - q), (1.0 - p) / (2.0 - p - q)];
        let idx: Vec<usize> = word.iter().map(Symbol::index).collect();
        idx.windows(2).fold(st[idx[0]], |acc, pair| acc * t(pair[1], pair[0]))
    }

    fn fair_coin(n: usize) -> HiddenMarkovModel {
        // Random-looking but fixed T, split evenly.
        let mut t = DMatrix::from_fn(n, n, |r, c| 1.0 + ((r * 7 + c * 3) % 5) as f64);
        for mut col in t.column_iter_mut() {
            let s = col.sum();
            col /= s;
        }
        let half = t * 0.5;
        HiddenMarkovModel::new(half.clone(), half).unwrap()
    }

    #[test]
    fn embedded_mm_word() {
        let mm = MarkovModel::new(0.5, 0.5).unwrap();
        let p = mm_stationary(&mm);
        let v = hmm_word_prob(&mm.to_hmm(), &p, &w("BAAAB")).unwrap();
        assert!((v - 0.03125).abs() < 1e-15);
        assert!((mm_chain_product(&mm, &w("BAAAB")) - 0.03125).abs() < 1e-15);
    }

    #[test]
    fn single_b_is_stationary_b() {
        let mm = MarkovModel::new(0.3, 0.8).unwrap();
        let p = mm_stationary(&mm);
        let v = hmm_word_prob(&mm.to_hmm(), &p, &w("B")).unwrap();
        assert!((v - 0.7 / 0.9).abs() < 1e-15);
    }

    #[test]
    fn fair_coin_factorizes() {
        let hmm = fair_coin(3);
        let p = crate::stationary::hmm_stationary(&hmm, &SolverSettings::default());
        let p = p.prob_vector().unwrap();
        for word in ["A", "BB", "ABA", "BAAAB", "ABBABBA"] {
            let v = hmm_word_prob(&hmm, p, &w(word)).unwrap();
            assert!((v - 0.5f64.powi(word.len() as i32)).abs() < 1e-12, "{word}");
        }
        assert!((hmm_block_prob(&hmm, p, 2).unwrap() - 0.0625).abs() < 1e-12);
    }

    #[test]
    fn block_and_gap_examples() {
        let mm = MarkovModel::new(0.5, 0.5).unwrap();
        let (hmm, p) = (mm.to_hmm(), mm_stationary(&mm));
        assert!((hmm_block_prob(&hmm, &p, 3).unwrap() - 0.03125).abs() < 1e-15);
        let aa = hmm_word_prob(&hmm, &p, &w("AA")).unwrap();
        assert_eq!(hmm_block_prob(&hmm, &p, 0).unwrap(), aa);
        assert!((hmm_gap_prob(&hmm, &p, GapSpec::new(0)).unwrap() - aa).abs() < 1e-15);

        let mm = MarkovModel::new(0.3, 0.8).unwrap();
        let (hmm, p) = (mm.to_hmm(), mm_stationary(&mm));
        let p1 = 0.2 / 0.9;
        assert!((hmm_gap_prob(&hmm, &p, GapSpec::new(200)).unwrap() - p1 * p1).abs() < 1e-12);
    }

    #[test]
    fn gap_is_sum_over_middle_words() {
        let hmm = MarkovModel::new(0.3, 0.8).unwrap().to_hmm();
        let p = mm_stationary(&MarkovModel::new(0.3, 0.8).unwrap());
        for g in 1..=6 {
            let brute: f64 = Word::enumerate(g)
                .map(|mid| {
                    let mut s = vec![Symbol::A];
                    s.extend(mid.iter());
                    s.push(Symbol::A);
                    hmm_word_prob(&hmm, &p, &Word::new(s).unwrap()).unwrap()
                })
                .sum();
            assert!((hmm_gap_prob(&hmm, &p, GapSpec::new(g)).unwrap() - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn mm_closed_forms() {
        let half = MarkovModel::new(0.5, 0.5).unwrap();
        assert!((mm_block_prob_closed(&half, 1).unwrap() - 0.125).abs() < 1e-15);
        assert!((mm_block_prob_closed(&half, 3).unwrap() - 0.03125).abs() < 1e-15);
        assert!(mm_block_prob_closed(&half, 0).is_err());

        let small_q = mm_block_prob_closed(&MarkovModel::new(0.4, 1e-6).unwrap(), 2).unwrap();
        let smaller_q = mm_block_prob_closed(&MarkovModel::new(0.4, 1e-9).unwrap(), 2).unwrap();
        assert!(small_q < 1e-6 && smaller_q < small_q * 1e-2);

        let mm = MarkovModel::new(0.3, 0.8).unwrap();
        assert!((mm_gap_prob_paper(&mm, 1).unwrap() - 0.2 / 0.9).abs() < 1e-15);
        assert!((mm_gap_prob_paper(&half, 3).unwrap() - 0.25).abs() < 1e-15);
        let (hmm, p) = (half.to_hmm(), mm_stationary(&half));
        assert!((hmm_gap_prob(&hmm, &p, GapSpec::new(1)).unwrap() - 0.25).abs() < 1e-15);
        let p1 = 0.2 / 0.9;
        assert!((mm_gap_prob_paper(&mm, 400).unwrap() - p1 * p1).abs() < 1e-12);
        assert!(mm_gap_prob_paper(&mm, 0).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let hmm = fair_coin(3);
        let p = ProbVector::uniform(2);
        assert!(matches!(hmm_word_prob(&hmm, &p, &w("A")), Err(Error::Contract(_))));
        assert!(matches!(
            hmm_gap_prob(&hmm, &p, GapSpec::new(1)),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn inconsistent_inputs_are_not_clamped() {
        // Sub-stochastic "stationary" input is fine; a super-normalized one is not
        // representable as ProbVector, so go through the checker directly.
        assert!(checked(1.0 + 1e-13).is_ok());
        assert_eq!(checked(-1e-13).unwrap(), 0.0);
        assert!(matches!(checked(1.0 + 1e-9), Err(Error::Consistency { .. })));
        assert!(checked(f64::NAN).is_err());
    }

    #[test]
    fn quantum_fair_coin() {
        let (ka, kb) = restricted_kraus(0.0, FRAC_PI_4, FRAC_PI_4);
        let m = HqmmModel::new(ka, kb).unwrap();
        let rep = hqmm_stationary(&m, &SolverSettings::default());
        let rho = rep.density_matrix().unwrap();
        assert!((hqmm_word_prob(&m, rho, &w("BAAAB")).unwrap() - 0.03125).abs() < 1e-11);
    }

    #[test]
    fn quantum_all_a_process() {
        let m = HqmmModel::new(Op2::identity(), Op2::zeros()).unwrap();
        let rho = DensityMatrix::maximally_mixed();
        assert_eq!(hqmm_word_prob(&m, &rho, &w("AAB")).unwrap(), 0.0);
        assert_eq!(hqmm_word_prob(&m, &rho, &w("AAAA")).unwrap(), 1.0);
        for g in 1..5 {
            assert_eq!(hqmm_block_prob(&m, &rho, g).unwrap(), 0.0);
            assert_eq!(hqmm_gap_prob(&m, &rho, GapSpec::new(g)).unwrap(), 1.0);
        }
        let aa = hqmm_word_prob(&m, &rho, &w("AA")).unwrap();
        assert_eq!(hqmm_block_prob(&m, &rho, 0).unwrap(), aa);
        assert_eq!(hqmm_gap_prob(&m, &rho, GapSpec::new(0)).unwrap(), aa);
    }

    #[test]
    fn quantum_normalization_and_gap() {
        let m = HqmmModel::restricted(&crate::RestrictedParams::new(0.6, 2.2, 0.9).unwrap());
        let rep = hqmm_stationary(&m, &SolverSettings::default());
        let rho = rep.density_matrix().unwrap();
        for len in 1..=8 {
            let total: f64 = Word::enumerate(len).map(|x| hqmm_word_prob(&m, rho, &x).unwrap()).sum();
            assert!((total - 1.0).abs() < 1e-10);
        }
        for g in 0..=6 {
            let brute: f64 = if g == 0 {
                hqmm_word_prob(&m, rho, &w("AA")).unwrap()
            } else {
                Word::enumerate(g)
                    .map(|mid| {
                        let word: Word = format!("A{mid}A").parse().unwrap();
                        hqmm_word_prob(&m, rho, &word).unwrap()
                    })
                    .sum()
            };
            assert!((hqmm_gap_prob(&m, rho, GapSpec::new(g)).unwrap() - brute).abs() < 1e-10);
        }
    }

    #[test]
    fn dispatch_rejects_mismatched_state() {
        let mm = Machine::Mm(MarkovModel::new(0.5, 0.5).unwrap());
        let st = StationaryState::Quantum(DensityMatrix::maximally_mixed());
        assert!(word_prob(&mm, &st, &w("A")).is_err());
    }
}
