use nalgebra::{DMatrix, DVector};

use super::{Symbol, INTERNAL_TOL, USER_TOL};
use crate::error::{Error, Result};

/// Two-state Markov chain whose emitted symbol reveals the state entered.
///
/// The transition matrix is column-stochastic,
/// `T = [[p, 1-q], [1-p, q]]`, so `p` is the probability of staying in state 0
/// and `q` of staying in state 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovModel {
    p: f64,
    q: f64,
}

pub(crate) fn check_open_unit(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            range: "(0, 1)",
        })
    }
}

impl MarkovModel {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        check_open_unit("p", p)?;
        check_open_unit("q", q)?;
        Ok(MarkovModel { p, q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn transition_matrix(&self) -> TransitionMatrix {
        let (p, q) = (self.p, self.q);
        TransitionMatrix(DMatrix::from_row_slice(2, 2, &[p, 1.0 - q, 1.0 - p, q]))
    }

    /// Embeds the chain as a two-state HMM.
    ///
    /// Row 0 of `T` goes into `T_A` and row 1 into `T_B`, so the symbol names the
    /// state that was entered.
    pub fn to_hmm(&self) -> HiddenMarkovModel {
        let t = self.transition_matrix().0;
        let mut t_a = DMatrix::zeros(2, 2);
        let mut t_b = DMatrix::zeros(2, 2);
        t_a.row_mut(0).copy_from(&t.row(0));
        t_b.row_mut(1).copy_from(&t.row(1));
        HiddenMarkovModel::from_parts(t_a, t_b)
    }
}

impl From<&MarkovModel> for HiddenMarkovModel {
    fn from(mm: &MarkovModel) -> Self {
        mm.to_hmm()
    }
}

/// Column-stochastic `N x N` matrix; column `i` is the distribution of the next
/// state given current state `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix(DMatrix<f64>);

impl TransitionMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerance(entries, USER_TOL)
    }

    pub fn with_tolerance(entries: DMatrix<f64>, tol: f64) -> Result<Self> {
        check_square(&entries, "T")?;
        check_nonnegative(&entries, "T")?;
        for (j, col) in entries.column_iter().enumerate() {
            if let Some(&v) = col.iter().find(|&&v| v > 1.0 + tol) {
                return Err(Error::ColumnSum { column: j, sum: v });
            }
        }
        check_column_sums(&entries, tol)?;
        Ok(TransitionMatrix(entries))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn n_states(&self) -> usize {
        self.0.nrows()
    }
}

fn check_square(m: &DMatrix<f64>, name: &'static str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape(format!(
            "{name} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() < 2 {
        return Err(Error::Shape(format!("{name} needs at least 2 states")));
    }
    Ok(())
}

fn check_nonnegative(m: &DMatrix<f64>, name: &'static str) -> Result<()> {
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            let v = m[(r, c)];
            if !(v >= 0.0) {
                return Err(Error::NegativeEntry {
                    matrix: name,
                    row: r,
                    col: c,
                    value: v,
                });
            }
        }
    }
    Ok(())
}

fn check_column_sums(m: &DMatrix<f64>, tol: f64) -> Result<()> {
    for (j, col) in m.column_iter().enumerate() {
        let sum = col.sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::ColumnSum { column: j, sum });
        }
    }
    Ok(())
}

/// Mealy hidden Markov model with two output symbols.
///
/// Entry `(j, i)` of `T_m` is the probability of moving from hidden state `i`
/// to `j` while emitting `m`. `T = T_A + T_B` is column-stochastic.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenMarkovModel {
    t_a: DMatrix<f64>,
    t_b: DMatrix<f64>,
    t: DMatrix<f64>,
}

impl HiddenMarkovModel {
    /// Validates user-supplied sub-transition matrices (column sums to 1e-10).
    pub fn new(t_a: DMatrix<f64>, t_b: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerance(t_a, t_b, USER_TOL)
    }

    pub fn with_tolerance(t_a: DMatrix<f64>, t_b: DMatrix<f64>, tol: f64) -> Result<Self> {
        check_square(&t_a, "T_A")?;
        check_square(&t_b, "T_B")?;
        if t_a.shape() != t_b.shape() {
            return Err(Error::Shape(format!(
                "T_A is {}x{} but T_B is {}x{}",
                t_a.nrows(),
                t_a.ncols(),
                t_b.nrows(),
                t_b.ncols()
            )));
        }
        check_nonnegative(&t_a, "T_A")?;
        check_nonnegative(&t_b, "T_B")?;
        let t = &t_a + &t_b;
        check_column_sums(&t, tol)?;
        Ok(HiddenMarkovModel { t_a, t_b, t })
    }

    /// For matrices built internally; still checked at 1e-12.
    pub(crate) fn from_parts(t_a: DMatrix<f64>, t_b: DMatrix<f64>) -> Self {
        Self::with_tolerance(t_a, t_b, INTERNAL_TOL).expect("internally constructed HMM is valid")
    }

    pub fn n_states(&self) -> usize {
        self.t.nrows()
    }

    pub fn t_a(&self) -> &DMatrix<f64> {
        &self.t_a
    }

    pub fn t_b(&self) -> &DMatrix<f64> {
        &self.t_b
    }

    pub fn sub_matrix(&self, s: Symbol) -> &DMatrix<f64> {
        match s {
            Symbol::A => &self.t_a,
            Symbol::B => &self.t_b,
        }
    }

    /// `T_A + T_B`.
    pub fn total(&self) -> &DMatrix<f64> {
        &self.t
    }
}

/// Probability distribution over `N` classical states.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(DVector<f64>);

impl ProbVector {
    pub fn new(probs: DVector<f64>) -> Result<Self> {
        Self::with_tolerance(probs, INTERNAL_TOL)
    }

    pub fn with_tolerance(probs: DVector<f64>, tol: f64) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidState("empty probability vector".into()));
        }
        if let Some(&v) = probs.iter().find(|&&v| !(-tol..=1.0 + tol).contains(&v)) {
            return Err(Error::InvalidState(format!("entry {v} outside [0, 1]")));
        }
        let sum = probs.sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::InvalidState(format!("entries sum to {sum}, expected 1")));
        }
        Ok(ProbVector(probs))
    }

    pub fn uniform(n: usize) -> Self {
        ProbVector(DVector::from_element(n, 1.0 / n as f64))
    }

    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        ProbVector(v)
    }

    /// Normalizes a nonnegative vector by its sum. The caller guarantees the sum
    /// is positive.
    pub(crate) fn from_unnormalized(mut v: DVector<f64>) -> Self {
        let s = v.sum();
        v /= s;
        ProbVector(v)
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mm_transition_matrix() {
        let mm = MarkovModel::new(0.5, 0.5).unwrap();
        assert_eq!(mm.transition_matrix().matrix(), &DMatrix::from_element(2, 2, 0.5));

        let mm = MarkovModel::new(0.3, 0.8).unwrap();
        let t = mm.transition_matrix();
        let expected = DMatrix::from_row_slice(2, 2, &[0.3, 0.2, 0.7, 0.8]);
        assert!((t.matrix() - expected).norm() < 1e-15);
    }

    #[test]
    fn mm_domain_errors_name_parameter() {
        match MarkovModel::new(1.0, 0.5) {
            Err(Error::Domain { name, .. }) => assert_eq!(name, "p"),
            other => panic!("expected domain error, got {other:?}"),
        }
        match MarkovModel::new(0.5, 0.0) {
            Err(Error::Domain { name, .. }) => assert_eq!(name, "q"),
            other => panic!("expected domain error, got {other:?}"),
        }
        assert!(MarkovModel::new(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn embedding_layout() {
        let hmm = MarkovModel::new(0.5, 0.5).unwrap().to_hmm();
        assert_eq!(hmm.t_a(), &DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.0, 0.0]));
        assert_eq!(hmm.t_b(), &DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.5, 0.5]));

        let mm = MarkovModel::new(0.3, 0.8).unwrap();
        let hmm = mm.to_hmm();
        let ta = DMatrix::from_row_slice(2, 2, &[0.3, 0.2, 0.0, 0.0]);
        assert!((hmm.t_a() - ta).norm() < 1e-15);
        let tb = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.7, 0.8]);
        assert!((hmm.t_b() - tb).norm() < 1e-15);
        assert!((hmm.total() - mm.transition_matrix().matrix()).norm() < 1e-15);
    }

    #[test]
    fn make_hmm_accepts_valid() {
        let emb = MarkovModel::new(0.5, 0.5).unwrap().to_hmm();
        assert!(HiddenMarkovModel::new(emb.t_a().clone(), emb.t_b().clone()).is_ok());

        let half = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]);
        assert!(HiddenMarkovModel::new(half.clone(), half).is_ok());
    }

    #[test]
    fn make_hmm_reports_column() {
        let ta = DMatrix::from_row_slice(2, 2, &[0.9, 0.0, 0.0, 0.9]);
        let tb = DMatrix::from_row_slice(2, 2, &[0.2, 0.0, 0.0, 0.2]);
        match HiddenMarkovModel::new(ta, tb) {
            Err(Error::ColumnSum { column, sum }) => {
                assert_eq!(column, 0);
                assert!((sum - 1.1).abs() < 1e-12);
            }
            other => panic!("expected column-sum error, got {other:?}"),
        }
    }

    #[test]
    fn make_hmm_rejects_negative_and_shape() {
        let ta = DMatrix::from_row_slice(2, 2, &[1.1, 0.0, 0.0, 1.0]);
        let tb = DMatrix::from_row_slice(2, 2, &[-0.1, 0.0, 0.0, 0.0]);
        assert!(matches!(
            HiddenMarkovModel::new(ta, tb),
            Err(Error::NegativeEntry {
                matrix: "T_B",
                row: 0,
                col: 0,
                ..
            })
        ));
        let ta = DMatrix::from_element(2, 2, 0.25);
        let tb = DMatrix::from_element(3, 3, 0.25);
        assert!(matches!(HiddenMarkovModel::new(ta, tb), Err(Error::Shape(_))));
        let one = DMatrix::from_element(1, 1, 0.5);
        assert!(matches!(HiddenMarkovModel::new(one.clone(), one), Err(Error::Shape(_))));
    }

    #[test]
    fn tolerance_allows_rounded_input() {
        let ta = DMatrix::from_row_slice(2, 2, &[0.3333333333333, 0.5, 0.0, 0.0]);
        let tb = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.6666666666667, 0.5]);
        assert!(HiddenMarkovModel::new(ta, tb).is_ok());
    }

    #[test]
    fn transition_matrix_validation() {
        assert!(TransitionMatrix::new(DMatrix::identity(3, 3)).is_ok());
        assert!(TransitionMatrix::new(DMatrix::from_element(2, 2, 0.6)).is_err());
    }

    #[test]
    fn prob_vector_validation() {
        assert!(ProbVector::new(DVector::from_vec(vec![0.25, 0.75])).is_ok());
        assert!(ProbVector::new(DVector::from_vec(vec![0.5, 0.6])).is_err());
        assert!(ProbVector::new(DVector::from_vec(vec![-0.5, 1.5])).is_err());
        assert_eq!(ProbVector::uniform(4).as_slice(), &[0.25; 4]);
    }
}
