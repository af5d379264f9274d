use std::f64::consts::TAU;

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

use super::{Symbol, INTERNAL_TOL, USER_TOL};
use crate::error::{Error, Result};

/// 2x2 complex operator on the memory qubit.
pub type Op2 = Matrix2<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub(crate) fn real_op(m00: f64, m01: f64, m10: f64, m11: f64) -> Op2 {
    Op2::new(c(m00), c(m01), c(m10), c(m11))
}

/// `||K_A^dag K_A + K_B^dag K_B - I||_F`.
pub fn completeness_deviation(k_a: &Op2, k_b: &Op2) -> f64 {
    (k_a.adjoint() * k_a + k_b.adjoint() * k_b - Op2::identity()).norm()
}

/// Pair of Kraus operators for a one-qubit HQMM with outputs `A` and `B`.
#[derive(Debug, Clone, PartialEq)]
pub struct HqmmModel {
    k_a: Op2,
    k_b: Op2,
}

impl HqmmModel {
    /// Validates the completeness relation to 1e-10 in Frobenius norm.
    pub fn new(k_a: Op2, k_b: Op2) -> Result<Self> {
        Self::with_tolerance(k_a, k_b, USER_TOL)
    }

    pub fn with_tolerance(k_a: Op2, k_b: Op2, tol: f64) -> Result<Self> {
        if k_a
            .iter()
            .chain(k_b.iter())
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::Shape("Kraus operators must have finite entries".into()));
        }
        let deviation = completeness_deviation(&k_a, &k_b);
        if !(deviation <= tol) {
            return Err(Error::Completeness { deviation });
        }
        Ok(HqmmModel { k_a, k_b })
    }

    /// Three-parameter family; always complete.
    pub fn restricted(params: &RestrictedParams) -> Self {
        let (k_a, k_b) = restricted_kraus(params.a, params.phi, params.theta);
        Self::with_tolerance(k_a, k_b, INTERNAL_TOL).expect("restricted family is complete")
    }

    pub fn k_a(&self) -> &Op2 {
        &self.k_a
    }

    pub fn k_b(&self) -> &Op2 {
        &self.k_b
    }

    pub fn kraus(&self, s: Symbol) -> &Op2 {
        match s {
            Symbol::A => &self.k_a,
            Symbol::B => &self.k_b,
        }
    }

    pub fn completeness_deviation(&self) -> f64 {
        completeness_deviation(&self.k_a, &self.k_b)
    }

    /// `sum_m K_m X K_m^dag` on an arbitrary (possibly unnormalized) operator.
    pub fn apply_raw(&self, x: &Op2) -> Op2 {
        self.k_a * x * self.k_a.adjoint() + self.k_b * x * self.k_b.adjoint()
    }

    /// Ensemble-averaged one-step evolution, re-Hermitized.
    pub fn apply(&self, rho: &DensityMatrix) -> DensityMatrix {
        DensityMatrix(hermitize(&self.apply_raw(&rho.0)))
    }
}

/// Kraus pair of the restricted family without range checks. Completeness holds
/// for any `a` in `[0, 1]` and any real angles.
pub fn restricted_kraus(a: f64, phi: f64, theta: f64) -> (Op2, Op2) {
    let (sp, cp) = phi.sin_cos();
    let (st, ct) = theta.sin_cos();
    let b = ((1.0 - a) * (1.0 + a)).max(0.0).sqrt();
    (real_op(cp, -a * sp, sp, a * cp), real_op(0.0, b * st, 0.0, b * ct))
}

/// Parameters `(a, phi, theta)` of the restricted Kraus family, with
/// `a` in `(0, 1)` and both angles in `(0, 2 pi)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RestrictedParams {
    pub a: f64,
    pub phi: f64,
    pub theta: f64,
}

impl RestrictedParams {
    pub fn new(a: f64, phi: f64, theta: f64) -> Result<Self> {
        super::classical::check_open_unit("a", a)?;
        check_angle("phi", phi)?;
        check_angle("theta", theta)?;
        Ok(RestrictedParams { a, phi, theta })
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.a, self.phi, self.theta).map(|_| ())
    }
}

fn check_angle(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < TAU {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            range: "(0, 2 pi)",
        })
    }
}

/// Normalized qubit state `c0 |0> + c1 |1>`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState(Vector2<Complex64>);

impl PureState {
    pub fn new(amplitudes: Vector2<Complex64>) -> Result<Self> {
        let n2 = amplitudes.norm_squared();
        if !((n2 - 1.0).abs() <= INTERNAL_TOL) {
            return Err(Error::InvalidState(format!("|c0|^2 + |c1|^2 = {n2}, expected 1")));
        }
        Ok(PureState(amplitudes))
    }

    pub fn basis(i: usize) -> Self {
        let mut v = Vector2::zeros();
        v[i] = c(1.0);
        PureState(v)
    }

    /// `(|0> + |1>) / sqrt 2`.
    pub fn plus() -> Self {
        let h = c(std::f64::consts::FRAC_1_SQRT_2);
        PureState(Vector2::new(h, h))
    }

    /// Normalizes `v`; `None` if its norm is zero.
    pub fn normalize(v: Vector2<Complex64>) -> Option<Self> {
        let n = v.norm();
        (n > 0.0).then(|| PureState(v.unscale(n)))
    }

    pub fn amplitudes(&self) -> &Vector2<Complex64> {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

pub(crate) fn hermitize(m: &Op2) -> Op2 {
    (m + m.adjoint()).scale(0.5)
}

/// One-qubit density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(Op2);

impl DensityMatrix {
    pub fn new(m: Op2) -> Result<Self> {
        Self::with_tolerance(m, INTERNAL_TOL)
    }

    pub fn with_tolerance(m: Op2, tol: f64) -> Result<Self> {
        let herm_dev = (m - m.adjoint()).norm();
        if !(herm_dev <= tol) {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm_dev:e})")));
        }
        let rho = DensityMatrix(hermitize(&m));
        let tr = rho.trace();
        if !((tr - 1.0).abs() <= tol) {
            return Err(Error::InvalidState(format!("trace {tr}, expected 1")));
        }
        let (lo, _) = rho.eigenvalues();
        if lo < -tol {
            return Err(Error::InvalidState(format!("negative eigenvalue {lo:e}")));
        }
        Ok(rho)
    }

    pub(crate) fn from_trusted(m: Op2) -> Self {
        DensityMatrix(m)
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix(real_op(0.5, 0.0, 0.0, 0.5))
    }

    pub fn from_pure(psi: &PureState) -> Self {
        let v = psi.amplitudes();
        DensityMatrix(hermitize(&(v * v.adjoint())))
    }

    pub fn matrix(&self) -> &Op2 {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        (self.0[(0, 0)] + self.0[(1, 1)]).re
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let a = self.0[(0, 0)].re;
        let d = self.0[(1, 1)].re;
        let b = self.0[(0, 1)];
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        (mean - r, mean + r)
    }
}

/// `U_A`: rotation by `phi` applied after a step without photon emission.
pub fn rotation_a(phi: f64) -> Op2 {
    let (s, co) = phi.sin_cos();
    real_op(co, -s, s, co)
}

/// `U_B`: rotation by `-theta` applied after a photon emission.
pub fn rotation_b(theta: f64) -> Op2 {
    let (s, co) = theta.sin_cos();
    real_op(co, s, -s, co)
}

/// Conditional (unnormalized) evolution over `delta_t` when no photon is seen:
/// `diag(1, exp(-gamma dt / 2))`.
pub fn no_emission_operator(gamma: f64, delta_t: f64) -> Op2 {
    real_op(1.0, 0.0, 0.0, (-0.5 * gamma * delta_t).exp())
}

/// Conditional evolution when a photon is seen, with the amplitude left in the
/// `|1>` component: `[[0, 0], [0, sqrt(1 - exp(-gamma dt))]]`.
pub fn emission_operator(gamma: f64, delta_t: f64) -> Op2 {
    real_op(0.0, 0.0, 0.0, (-(-gamma * delta_t).exp_m1()).sqrt())
}

/// Restricted HQMM realized by a decaying two-level atom observed for
/// `delta_t`, followed by the rotation `U_A` or `U_B`.
///
/// `a = exp(-gamma delta_t / 2)`. Angles are not range-checked. Fails with
/// [`Error::Contract`] if the operators do not factor as
/// `K_A = U_A diag(1, a)` and `K_B = U_B [[0,0],[0,sqrt(1-a^2)]]` within 1e-12.
pub fn decay_realization(gamma: f64, delta_t: f64, phi: f64, theta: f64) -> Result<HqmmModel> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Domain {
            name: "gamma",
            value: gamma,
            range: "(0, inf)",
        });
    }
    if !(delta_t > 0.0 && delta_t.is_finite()) {
        return Err(Error::Domain {
            name: "delta_t",
            value: delta_t,
            range: "(0, inf)",
        });
    }
    let a = (-0.5 * gamma * delta_t).exp();
    let (k_a, k_b) = restricted_kraus(a, phi, theta);

    let dev_a = (k_a - rotation_a(phi) * no_emission_operator(gamma, delta_t)).norm();
    let dev_b = (k_b - rotation_b(theta) * emission_operator(gamma, delta_t)).norm();
    if dev_a > INTERNAL_TOL || dev_b > INTERNAL_TOL {
        return Err(Error::Contract(format!(
            "decay factorization off by {dev_a:e} (A) / {dev_b:e} (B)"
        )));
    }
    HqmmModel::with_tolerance(k_a, k_b, INTERNAL_TOL)
}
