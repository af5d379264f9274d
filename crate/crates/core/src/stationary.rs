//! Stationary states: closed form for Markov models, averaged power iteration
//! for hidden Markov models and for the quantum superoperator.
//!
//! Both iterative solvers use the lazy map `x -> (x + F x) / 2`. It has the same
//! fixed points as `F`, but eigenvalues on the unit circle other than 1 are
//! pulled inside it, so periodic chains and rotation-like channels converge.
//! Iteration always starts from the uniform vector or the maximally mixed
//! state, which pins the answer when the fixed point is not unique.

use nalgebra::{DVector, Matrix4, Vector4};
use num_complex::Complex64;
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::models::{hermitize, DensityMatrix, HiddenMarkovModel, HqmmModel, Machine, MarkovModel, Op2, ProbVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol: 1e-12,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StationaryState {
    Classical(ProbVector),
    Quantum(DensityMatrix),
}

impl Serialize for StationaryState {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(1))?;
        match self {
            StationaryState::Classical(p) => map.serialize_entry("prob_vector", p.as_slice())?,
            StationaryState::Quantum(rho) => {
                let m = rho.matrix();
                let e = |r: usize, c: usize| [m[(r, c)].re, m[(r, c)].im];
                map.serialize_entry("density_matrix", &[[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]])?
            }
        }
        map.end()
    }
}

/// Outcome of a fixed-point solve. `residual` is `||F x - x||` for the returned
/// state (1-norm for classical, Frobenius for quantum).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointReport {
    pub state: StationaryState,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

impl FixedPointReport {
    pub fn prob_vector(&self) -> Option<&ProbVector> {
        match &self.state {
            StationaryState::Classical(p) => Some(p),
            StationaryState::Quantum(_) => None,
        }
    }

    pub fn density_matrix(&self) -> Option<&DensityMatrix> {
        match &self.state {
            StationaryState::Quantum(r) => Some(r),
            StationaryState::Classical(_) => None,
        }
    }
}

/// `((1-q)/(2-p-q), (1-p)/(2-p-q))`.
pub fn mm_stationary(mm: &MarkovModel) -> ProbVector {
    let (p, q) = (mm.p(), mm.q());
    let d = 2.0 - p - q;
    ProbVector::new(DVector::from_vec(vec![(1.0 - q) / d, (1.0 - p) / d]))
        .expect("closed-form stationary vector is a distribution")
}

pub fn classical_residual(hmm: &HiddenMarkovModel, p: &ProbVector) -> f64 {
    (hmm.total() * p.as_vector() - p.as_vector()).lp_norm(1)
}

pub fn quantum_residual(hqmm: &HqmmModel, rho: &DensityMatrix) -> f64 {
    (hqmm.apply(rho).matrix() - rho.matrix()).norm()
}

pub fn hmm_stationary(hmm: &HiddenMarkovModel, settings: &SolverSettings) -> FixedPointReport {
    let t = hmm.total();
    let n = hmm.n_states();
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut diff = f64::INFINITY;
    let mut iterations = 0;
    while iterations < settings.max_iter {
        iterations += 1;
        let mut next = (&x + t * &x) * 0.5;
        next /= next.sum();
        diff = (&next - &x).lp_norm(1);
        x = next;
        if diff <= settings.tol {
            break;
        }
    }
    let state = ProbVector::from_unnormalized(x);
    let residual = classical_residual(hmm, &state);
    FixedPointReport {
        converged: diff <= settings.tol && residual <= 10.0 * settings.tol,
        state: StationaryState::Classical(state),
        iterations,
        residual,
    }
}

/// Matrix of the superoperator acting on column-stacked density matrices,
/// `vec(rho) = (rho00, rho10, rho01, rho11)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperoperatorMatrix(Matrix4<Complex64>);

impl SuperoperatorMatrix {
    /// `sum_m conj(K_m) (x) K_m`, since `vec(K X K^dag) = (conj(K) (x) K) vec(X)`
    /// for column stacking.
    pub fn new(hqmm: &HqmmModel) -> Self {
        let m = [hqmm.k_a(), hqmm.k_b()]
            .iter()
            .map(|k| k.conjugate().kronecker(k))
            .fold(Matrix4::zeros(), |acc, term| acc + term);
        SuperoperatorMatrix(m)
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.0
    }

    pub fn apply(&self, x: &Op2) -> Op2 {
        unvec(&(self.0 * vec(x)))
    }
}

pub fn superoperator_matrix(hqmm: &HqmmModel) -> SuperoperatorMatrix {
    SuperoperatorMatrix::new(hqmm)
}

pub fn vec(m: &Op2) -> Vector4<Complex64> {
    Vector4::new(m[(0, 0)], m[(1, 0)], m[(0, 1)], m[(1, 1)])
}

pub fn unvec(v: &Vector4<Complex64>) -> Op2 {
    Op2::new(v[0], v[2], v[1], v[3])
}

pub fn hqmm_stationary(hqmm: &HqmmModel, settings: &SolverSettings) -> FixedPointReport {
    let sup = SuperoperatorMatrix::new(hqmm);
    let mut rho = *DensityMatrix::maximally_mixed().matrix();
    let mut diff = f64::INFINITY;
    let mut iterations = 0;
    while iterations < settings.max_iter {
        iterations += 1;
        let mut next = hermitize(&((rho + sup.apply(&rho)) * Complex64::new(0.5, 0.0)));
        let tr = (next[(0, 0)] + next[(1, 1)]).re;
        next.unscale_mut(tr);
        diff = (next - rho).norm();
        rho = next;
        if diff <= settings.tol {
            break;
        }
    }
    let state = DensityMatrix::from_trusted(rho);
    let residual = quantum_residual(hqmm, &state);
    let (lo, _) = state.eigenvalues();
    FixedPointReport {
        converged: diff <= settings.tol && residual <= 10.0 * settings.tol && lo >= -1e-10,
        state: StationaryState::Quantum(state),
        iterations,
        residual,
    }
}

/// Stationary state of any machine. Markov models use the closed form and
/// report zero iterations.
pub fn stationary(machine: &Machine, settings: &SolverSettings) -> FixedPointReport {
    match machine {
        Machine::Mm(mm) => {
            let p = mm_stationary(mm);
            let residual = classical_residual(&mm.to_hmm(), &p);
            FixedPointReport {
                state: StationaryState::Classical(p),
                iterations: 0,
                residual,
                converged: true,
            }
        }
        Machine::Hmm(h) => hmm_stationary(h, settings),
        Machine::RestrictedHqmm(r) => hqmm_stationary(&HqmmModel::restricted(r), settings),
        Machine::Hqmm(q) => hqmm_stationary(q, settings),
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, PI};

    use nalgebra::DMatrix;

    use super::*;
    use crate::models::restricted_kraus;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn mm_closed_form() {
        let p = mm_stationary(&MarkovModel::new(0.5, 0.5).unwrap());
        assert_eq!(p.as_slice(), &[0.5, 0.5]);

        let mm = MarkovModel::new(0.3, 0.8).unwrap();
        let p = mm_stationary(&mm);
        assert!((p.as_slice()[0] - 0.2 / 0.9).abs() < 1e-15);
        assert!((p.as_slice()[1] - 0.7 / 0.9).abs() < 1e-15);
        assert!(classical_residual(&mm.to_hmm(), &p) <= 1e-14);

        for x in [0.01, 0.37, 0.99] {
            let p = mm_stationary(&MarkovModel::new(x, x).unwrap());
            assert!((p.as_slice()[0] - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn hmm_matches_closed_form() {
        let mm = MarkovModel::new(0.3, 0.8).unwrap();
        let s = SolverSettings::default();
        let rep = hmm_stationary(&mm.to_hmm(), &s);
        assert!(rep.converged);
        let p = rep.prob_vector().unwrap().as_slice();
        assert!((p[0] - 0.2 / 0.9).abs() <= 10.0 * s.tol);
        assert!(rep.residual <= 10.0 * s.tol);
    }

    #[test]
    fn hmm_identity_keeps_uniform() {
        let half = DMatrix::identity(3, 3) * 0.5;
        let hmm = HiddenMarkovModel::new(half.clone(), half).unwrap();
        let rep = hmm_stationary(&hmm, &SolverSettings::default());
        assert!(rep.converged);
        assert_eq!(rep.iterations, 1);
        for &v in rep.prob_vector().unwrap().as_slice() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn hmm_periodic_chain() {
        // T = [[0,1],[1,0]] split evenly between the two symbols.
        let t = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]);
        let hmm = HiddenMarkovModel::new(t.clone(), t).unwrap();
        let rep = hmm_stationary(&hmm, &SolverSettings::default());
        assert!(rep.converged);
        assert_eq!(rep.prob_vector().unwrap().as_slice(), &[0.5, 0.5]);

        // Period-2 chain 0 -> 1 -> {0, 2} -> 1 with stationary (1/4, 1/2, 1/4).
        // Plain power iteration from uniform oscillates forever.
        let ta = DMatrix::from_row_slice(3, 3, &[0.0, 0.5, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let tb = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5, 0.0]);
        let rep = hmm_stationary(&HiddenMarkovModel::new(ta, tb).unwrap(), &SolverSettings::default());
        assert!(rep.converged);
        let p = rep.prob_vector().unwrap().as_slice();
        for (v, want) in p.iter().zip([0.25, 0.5, 0.25]) {
            assert!((v - want).abs() < 1e-11);
        }
    }

    #[test]
    fn non_convergence_is_reported() {
        let mm = MarkovModel::new(0.3, 0.8).unwrap();
        let rep = hmm_stationary(
            &mm.to_hmm(),
            &SolverSettings {
                tol: 1e-12,
                max_iter: 3,
            },
        );
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 3);
    }

    #[test]
    fn superoperator_matrix_examples() {
        let id = HqmmModel::new(Op2::identity(), Op2::zeros()).unwrap();
        assert!((superoperator_matrix(&id).matrix() - Matrix4::identity()).norm() < 1e-15);
        let h = Op2::identity().scale(FRAC_1_SQRT_2);
        let half = HqmmModel::new(h, h).unwrap();
        assert!((superoperator_matrix(&half).matrix() - Matrix4::identity()).norm() < 1e-15);

        let (ka, kb) = restricted_kraus(0.0, FRAC_PI_4, FRAC_PI_4);
        let m = HqmmModel::new(ka, kb).unwrap();
        let plus = Op2::from_element(c(0.5));
        assert!((superoperator_matrix(&m).apply(&plus) - plus).norm() < 1e-15);
    }

    #[test]
    fn superoperator_matches_kraus_sum() {
        let m = HqmmModel::restricted(&crate::RestrictedParams::new(0.4, 1.1, 4.0).unwrap());
        let sup = superoperator_matrix(&m);
        let x = Op2::new(c(0.3), Complex64::new(0.2, -0.4), Complex64::new(-0.7, 0.1), c(0.9));
        assert!((sup.apply(&x) - m.apply_raw(&x)).norm() < 1e-14);
    }

    #[test]
    fn hqmm_examples() {
        let s = SolverSettings::default();
        let id = HqmmModel::new(Op2::identity(), Op2::zeros()).unwrap();
        let rep = hqmm_stationary(&id, &s);
        assert!(rep.converged);
        assert_eq!(rep.density_matrix().unwrap(), &DensityMatrix::maximally_mixed());

        let (ka, kb) = restricted_kraus(0.0, FRAC_PI_4, FRAC_PI_4);
        let rep = hqmm_stationary(&HqmmModel::new(ka, kb).unwrap(), &s);
        assert!(rep.converged);
        let plus = Op2::from_element(c(0.5));
        assert!((rep.density_matrix().unwrap().matrix() - plus).norm() < 1e-11);

        for theta in [PI / 3.0, 1.0, 4.0] {
            let (ka, kb) = restricted_kraus(0.0, 0.0, theta);
            let m = HqmmModel::new(ka, kb).unwrap();
            let ground = Op2::new(c(1.0), c(0.0), c(0.0), c(0.0));
            assert!((m.apply_raw(&ground) - ground).norm() < 1e-15);
            let rep = hqmm_stationary(&m, &s);
            assert!(rep.converged, "theta = {theta}");
            assert!((rep.density_matrix().unwrap().matrix() - ground).norm() < 1e-10);
        }
    }

    #[test]
    fn report_serializes() {
        let rep = stationary(
            &Machine::Mm(MarkovModel::new(0.5, 0.5).unwrap()),
            &SolverSettings::default(),
        );
        let json = serde_json::to_value(&rep).unwrap();
        assert_eq!(json["state"]["prob_vector"][0], 0.5);
        assert_eq!(json["iterations"], 0);
        assert_eq!(json["converged"], true);
    }
}
