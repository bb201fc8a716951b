//! Two-level emitter dynamics in vectorized Liouville space.
//!
//! Density matrices are flattened row-major in the fixed order
//! `(rho_gg, rho_ge, rho_eg, rho_ee)`, so that `vec(A X B) = (A ⊗ Bᵀ) vec(X)`.
//! Every superoperator in the crate is built against this order.
//!
//! All rates are in units of the radiative dissipation rate and the frame
//! rotates at the transition frequency, so there is no Hamiltonian term.

use nalgebra::{Matrix2, Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, expm, CMat, C64, ONE, ZERO};

pub type Mat2 = Matrix2<C64>;

/// Index of `|g><g|` in a vectorized operator.
pub const GG: usize = 0;
pub const GE: usize = 1;
pub const EG: usize = 2;
/// Index of `|e><e|` in a vectorized operator.
pub const EE: usize = 3;

/// Physical rates of the pumped emitter, in units of `gamma_diss`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSet {
    pub gamma_pump: f64,
    pub gamma_diss: f64,
    pub gamma_deph: f64,
    /// Pump pulse duration; the pump is on for `0 <= t <= pulse_t`.
    pub pulse_t: f64,
    /// Filter centre minus transition frequency.
    pub detuning: f64,
}

impl RateSet {
    /// Rates with `gamma_diss = 1` and zero detuning.
    pub fn new(gamma_pump: f64, gamma_deph: f64, pulse_t: f64) -> Result<Self> {
        Self::with_all(gamma_pump, 1.0, gamma_deph, pulse_t, 0.0)
    }

    pub fn with_all(
        gamma_pump: f64,
        gamma_diss: f64,
        gamma_deph: f64,
        pulse_t: f64,
        detuning: f64,
    ) -> Result<Self> {
        let check = |name: &str, v: f64| {
            if !v.is_finite() || v < 0.0 {
                Err(Error::InvalidParameter(format!(
                    "{name} must be finite and non-negative, got {v}"
                )))
            } else {
                Ok(())
            }
        };
        check("gamma_pump", gamma_pump)?;
        check("gamma_deph", gamma_deph)?;
        check("pulse_T", pulse_t)?;
        if !gamma_diss.is_finite() || gamma_diss <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "gamma_diss must be finite and positive, got {gamma_diss}"
            )));
        }
        if !detuning.is_finite() {
            return Err(Error::InvalidParameter("detuning must be finite".into()));
        }
        Ok(Self {
            gamma_pump,
            gamma_diss,
            gamma_deph,
            pulse_t,
            detuning,
        })
    }

    pub fn with_detuning(mut self, detuning: f64) -> Result<Self> {
        if !detuning.is_finite() {
            return Err(Error::InvalidParameter("detuning must be finite".into()));
        }
        self.detuning = detuning;
        Ok(self)
    }

    pub fn derived(&self) -> DerivedRates {
        DerivedRates {
            longitudinal: self.gamma_pump + self.gamma_diss,
            transverse: (self.gamma_pump + self.gamma_diss + self.gamma_deph) / 2.0,
            pump_fraction: self.gamma_pump / (self.gamma_pump + self.gamma_diss),
            emission_time: self.pulse_t + 1.0 / self.gamma_diss,
        }
    }

    /// Dipole decay rate once the pump has switched off.
    pub fn transverse_off(&self) -> f64 {
        (self.gamma_diss + self.gamma_deph) / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedRates {
    /// Population relaxation rate during the pulse.
    pub longitudinal: f64,
    /// Dipole relaxation rate during the pulse.
    pub transverse: f64,
    /// Steady-state excited population under continuous pumping.
    pub pump_fraction: f64,
    /// Rough duration of the emission, pulse plus one lifetime.
    pub emission_time: f64,
}

/// Single-emitter operators that can be inserted into correlators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Op {
    /// Lowering operator `|g><e|`.
    Lower,
    /// Raising operator `|e><g|`.
    Raise,
    /// Excited-state projector.
    Number,
}

impl Op {
    pub fn matrix(self) -> Mat2 {
        match self {
            Op::Lower => Mat2::new(ZERO, ONE, ZERO, ZERO),
            Op::Raise => Mat2::new(ZERO, ZERO, ONE, ZERO),
            Op::Number => Mat2::new(ZERO, ZERO, ZERO, ONE),
        }
    }
}

/// Vectorized 2x2 operator. Physical density matrices and the generalized
/// carriers of the regression theorem share this type.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector(pub Vector4<C64>);

impl StateVector {
    pub fn ground() -> Self {
        Self(Vector4::new(ONE, ZERO, ZERO, ZERO))
    }

    pub fn excited() -> Self {
        Self(Vector4::new(ZERO, ZERO, ZERO, ONE))
    }

    pub fn from_matrix(m: &Mat2) -> Self {
        Self(Vector4::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]))
    }

    pub fn to_matrix(&self) -> Mat2 {
        Mat2::new(self.0[GG], self.0[GE], self.0[EG], self.0[EE])
    }

    pub fn trace(&self) -> C64 {
        self.0[GG] + self.0[EE]
    }

    pub fn excited_population(&self) -> f64 {
        self.0[EE].re
    }

    /// `Tr[op · X]`.
    pub fn expectation(&self, op: Op) -> C64 {
        (op.matrix() * self.to_matrix()).trace()
    }

    /// Trace one, Hermitian and positive semidefinite, all to `tol`.
    pub fn is_physical(&self, tol: f64) -> bool {
        let m = self.to_matrix();
        if (self.trace() - ONE).norm() > tol {
            return false;
        }
        if (m[(0, 1)] - m[(1, 0)].conj()).norm() > tol
            || m[(0, 0)].im.abs() > tol
            || m[(1, 1)].im.abs() > tol
        {
            return false;
        }
        // Eigenvalues of a Hermitian 2x2 matrix.
        let a = m[(0, 0)].re;
        let d = m[(1, 1)].re;
        let b = m[(0, 1)].norm();
        let disc = (((a - d) / 2.0).powi(2) + b * b).sqrt();
        (a + d) / 2.0 - disc >= -tol
    }
}

/// Linear map on vectorized operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Superoperator(pub Matrix4<C64>);

impl Superoperator {
    pub fn apply(&self, x: &StateVector) -> StateVector {
        StateVector(self.0 * x.0)
    }

    pub fn compose(&self, inner: &Superoperator) -> Superoperator {
        Superoperator(self.0 * inner.0)
    }

    /// `exp(self · dt)`.
    pub fn exp(&self, dt: f64) -> Result<Superoperator> {
        let m = to_dynamic(&self.0) * C64::from(dt);
        let e = expm(&m)?;
        Ok(Superoperator(Matrix4::from_fn(|i, j| e[(i, j)])))
    }

    pub fn to_dynamic(&self) -> CMat {
        to_dynamic(&self.0)
    }
}

fn to_dynamic(m: &Matrix4<C64>) -> CMat {
    CMat::from_fn(4, 4, |i, j| m[(i, j)])
}

fn kron2(a: &Mat2, b: &Mat2) -> Matrix4<C64> {
    Matrix4::from_fn(|i, j| a[(i / 2, j / 2)] * b[(i % 2, j % 2)])
}

/// Superoperator `X ↦ op · X`.
pub fn left_mult(op: Op) -> Superoperator {
    left_mult_matrix(&op.matrix())
}

/// Superoperator `X ↦ X · op`.
pub fn right_mult(op: Op) -> Superoperator {
    right_mult_matrix(&op.matrix())
}

pub fn left_mult_matrix(a: &Mat2) -> Superoperator {
    Superoperator(kron2(a, &Mat2::identity()))
}

pub fn right_mult_matrix(b: &Mat2) -> Superoperator {
    Superoperator(kron2(&Mat2::identity(), &b.transpose()))
}

/// Lindblad jump operators, already scaled by the square roots of their rates.
pub fn jump_operators(rates: &RateSet, pump_on: bool) -> Vec<Mat2> {
    let mut ops = vec![
        Op::Lower.matrix() * C64::from(rates.gamma_diss.sqrt()),
        Op::Number.matrix() * C64::from(rates.gamma_deph.sqrt()),
    ];
    if pump_on && rates.gamma_pump > 0.0 {
        ops.push(Op::Raise.matrix() * C64::from(rates.gamma_pump.sqrt()));
    }
    ops
}

/// Schrödinger-picture Lindblad generator with the pump on or off.
pub fn build_liouvillian(rates: &RateSet, pump_on: bool) -> Superoperator {
    let eye = Mat2::identity();
    let mut m = Matrix4::<C64>::zeros();
    for l in jump_operators(rates, pump_on) {
        let ldl = l.adjoint() * l;
        m += kron2(&l, &l.conjugate());
        m -= kron2(&ldl, &eye) * c(0.5, 0.0);
        m -= kron2(&eye, &ldl.transpose()) * c(0.5, 0.0);
    }
    Superoperator(m)
}

/// Heisenberg-picture (adjoint) generator acting on vectorized observables.
pub fn adjoint_generator(rates: &RateSet, pump_on: bool) -> Superoperator {
    let eye = Mat2::identity();
    let mut m = Matrix4::<C64>::zeros();
    for l in jump_operators(rates, pump_on) {
        let ld = l.adjoint();
        let ldl = ld * l;
        m += kron2(&ld, &l.transpose());
        m -= kron2(&ldl, &eye) * c(0.5, 0.0);
        m -= kron2(&eye, &ldl.transpose()) * c(0.5, 0.0);
    }
    Superoperator(m)
}

/// `exp(L · dt) · state`.
pub fn propagate(state: &StateVector, dt: f64, l: &Superoperator) -> Result<StateVector> {
    if !(dt >= 0.0) || !dt.is_finite() {
        return Err(Error::Domain(format!("propagation step must be >= 0, got {dt}")));
    }
    if dt == 0.0 {
        return Ok(*state);
    }
    Ok(l.exp(dt)?.apply(state))
}

/// Propagate over `[from, to]`, switching the pump off at `pulse_t`.
pub fn propagate_piecewise(
    state: &StateVector,
    from: f64,
    to: f64,
    rates: &RateSet,
) -> Result<StateVector> {
    if to < from {
        return Err(Error::Domain(format!(
            "backwards propagation requested ({from} -> {to})"
        )));
    }
    let t_off = rates.pulse_t;
    let mut x = *state;
    if from < t_off {
        let end = to.min(t_off);
        x = propagate(&x, end - from, &build_liouvillian(rates, true))?;
    }
    if to > t_off {
        let start = from.max(t_off);
        x = propagate(&x, to - start, &build_liouvillian(rates, false))?;
    }
    Ok(x)
}

/// Emitter state at time `t`, starting from the ground state at `t = 0`.
pub fn density_matrix_at(t: f64, rates: &RateSet) -> Result<StateVector> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("time must be finite and >= 0, got {t}")));
    }
    propagate_piecewise(&StateVector::ground(), 0.0, t, rates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix4 as M4;

    fn rates(p: f64, deph: f64, t: f64) -> RateSet {
        RateSet::new(p, deph, t).unwrap()
    }

    fn spectrum(l: &Superoperator) -> Vec<C64> {
        let re = M4::<f64>::from_fn(|i, j| l.0[(i, j)].re);
        assert!(l.0.iter().all(|z| z.im == 0.0));
        let mut ev: Vec<C64> = re.complex_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap());
        ev
    }

    #[test]
    fn rejects_bad_rates() {
        assert!(RateSet::new(-1.0, 0.0, 1.0).is_err());
        assert!(RateSet::new(1.0, f64::NAN, 1.0).is_err());
        assert!(RateSet::with_all(1.0, 0.0, 0.0, 1.0, 0.0).is_err());
        assert!(RateSet::new(1.0, 0.0, -0.1).is_err());
    }

    #[test]
    fn derived_rates() {
        let d = rates(5.0, 10.0, 2.0).derived();
        assert_eq!(d.longitudinal, 6.0);
        assert_eq!(d.transverse, 8.0);
        assert!((d.pump_fraction - 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(d.emission_time, 3.0);
    }

    #[test]
    fn pump_off_decay_structure() {
        let r = rates(3.0, 2.5, 1.0);
        let l = build_liouvillian(&r, false);
        let t = 0.7;
        let rho = StateVector::from_matrix(&Mat2::new(
            c(0.4, 0.0),
            c(0.1, 0.2),
            c(0.1, -0.2),
            c(0.6, 0.0),
        ));
        let out = propagate(&rho, t, &l).unwrap();
        assert!((out.0[EE].re - 0.6 * (-t).exp()).abs() < 1e-13);
        let coh = (-(1.0 + 2.5) * t / 2.0).exp();
        assert!((out.0[GE] - c(0.1, 0.2) * coh).norm() < 1e-13);
        assert!((out.0[EG] - c(0.1, -0.2) * coh).norm() < 1e-13);
    }

    #[test]
    fn pumped_fixed_point() {
        let r = rates(5.0, 0.3, 100.0);
        let l = build_liouvillian(&r, true);
        let ss = propagate(&StateVector::ground(), 40.0, &l).unwrap();
        assert!((ss.0[EE].re - 5.0 / 6.0).abs() < 1e-12);
        assert!((ss.0[GG].re - 1.0 / 6.0).abs() < 1e-12);
        // The fixed point is annihilated by the generator.
        assert!(l.apply(&ss).0.norm() < 1e-12);
    }

    #[test]
    fn pumped_spectrum() {
        let r = rates(2.0, 3.0, 1.0);
        let d = r.derived();
        let ev = spectrum(&build_liouvillian(&r, true));
        let want = [0.0, -d.transverse, -d.transverse, -d.longitudinal];
        let mut want = want.to_vec();
        want.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (z, w) in ev.iter().zip(want) {
            assert!((z - c(w, 0.0)).norm() < 1e-10, "{z} vs {w}");
        }
    }

    #[test]
    fn trace_is_a_left_null_vector() {
        let r = rates(1.3, 0.7, 1.0);
        for on in [true, false] {
            let l = build_liouvillian(&r, on);
            for j in 0..4 {
                assert!((l.0[(GG, j)] + l.0[(EE, j)]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn adjoint_is_the_trace_dual() {
        let r = rates(1.3, 0.7, 1.0);
        let l = build_liouvillian(&r, true);
        let la = adjoint_generator(&r, true);
        let rho = StateVector::from_matrix(&Mat2::new(c(0.3, 0.0), c(0.2, 0.1), c(0.2, -0.1), c(0.7, 0.0)));
        let x = StateVector::from_matrix(&Mat2::new(c(0.5, 1.0), c(-2.0, 0.3), c(0.1, 0.0), c(1.5, -0.2)));
        let lhs = (l.apply(&rho).to_matrix() * x.to_matrix()).trace();
        let rhs = (rho.to_matrix() * la.apply(&x).to_matrix()).trace();
        assert!((lhs - rhs).norm() < 1e-14);
    }

    #[test]
    fn zero_step_is_identity() {
        let l = build_liouvillian(&rates(1.0, 1.0, 1.0), true);
        let x = StateVector::from_matrix(&Mat2::new(c(0.2, 0.0), c(0.0, 0.3), c(1.0, 0.0), c(0.8, 0.0)));
        assert_eq!(propagate(&x, 0.0, &l).unwrap(), x);
        assert!(propagate(&x, -1.0, &l).is_err());
    }

    #[test]
    fn insertion_superoperators() {
        let ll = left_mult(Op::Lower);
        assert!(ll.compose(&ll).0.norm() == 0.0);
        let x = left_mult(Op::Lower).apply(&right_mult(Op::Raise).apply(&StateVector::excited()));
        assert_eq!(x, StateVector::ground());
        let rho = StateVector::from_matrix(&Mat2::new(c(0.25, 0.0), c(0.1, 0.0), c(0.1, 0.0), c(0.75, 0.0)));
        let n = left_mult(Op::Raise).compose(&left_mult(Op::Lower)).apply(&rho);
        assert!((n.trace() - rho.expectation(Op::Number)).norm() < 1e-15);
        assert!((n.trace().re - 0.75).abs() < 1e-15);
    }

    #[test]
    fn piecewise_population() {
        let r = rates(2.0, 4.0, 0.8);
        let d = r.derived();
        assert_eq!(density_matrix_at(0.0, &r).unwrap(), StateVector::ground());
        for &t in &[0.1, 0.5, 0.8] {
            let want = d.pump_fraction * (1.0 - (-d.longitudinal * t).exp());
            let got = density_matrix_at(t, &r).unwrap().excited_population();
            assert!((got - want).abs() < 1e-13);
        }
        let at_t = density_matrix_at(0.8, &r).unwrap().excited_population();
        for &s in &[0.1, 2.0, 7.0] {
            let got = density_matrix_at(0.8 + s, &r).unwrap().excited_population();
            assert!((got - at_t * (-s).exp()).abs() < 1e-13);
        }
        assert!(matches!(density_matrix_at(-1.0, &r), Err(Error::Domain(_))));
    }
}
