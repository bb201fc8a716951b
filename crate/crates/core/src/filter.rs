//! Lorentzian spectral filter and its time-domain kernels (rotating frame).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    /// Half width of the Lorentzian.
    pub gamma_f: f64,
    /// Filter centre minus transition frequency.
    pub detuning: f64,
}

impl FilterSpec {
    pub fn new(gamma_f: f64) -> Result<Self> {
        Self::with_detuning(gamma_f, 0.0)
    }

    pub fn with_detuning(gamma_f: f64, detuning: f64) -> Result<Self> {
        if !gamma_f.is_finite() || gamma_f <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "gamma_F must be finite and positive, got {gamma_f}"
            )));
        }
        if !detuning.is_finite() {
            return Err(Error::InvalidParameter("detuning must be finite".into()));
        }
        Ok(Self { gamma_f, detuning })
    }

    /// Complex decay rate `γ_F + iδ` of the transfer kernel.
    pub fn kappa(&self) -> C64 {
        c(self.gamma_f, self.detuning)
    }
}

/// `F(ω) = γ_F / (ω − δ + iγ_F)`.
pub fn transmission(omega: f64, filter: &FilterSpec) -> C64 {
    C64::from(filter.gamma_f) / c(omega - filter.detuning, filter.gamma_f)
}

/// Causal transfer kernel `f(Δt)`, with the half-sum value at `Δt = 0`.
pub fn transfer_kernel(dt: f64, filter: &FilterSpec) -> C64 {
    let amp = c(0.0, -filter.gamma_f);
    if dt > 0.0 {
        amp * (-filter.kappa() * dt).exp()
    } else if dt == 0.0 {
        amp * 0.5
    } else {
        C64::from(0.0)
    }
}

/// Power kernel `x(Δt)`, the inverse Fourier transform of `|F(ω)|²`.
pub fn power_kernel(dt: f64, filter: &FilterSpec) -> C64 {
    let mag = 0.5 * filter.gamma_f * (-filter.gamma_f * dt.abs()).exp();
    C64::from_polar(mag, -filter.detuning * dt)
}

/// Integral of the transfer kernel over `[0, ∞)`.
pub fn dc_gain(filter: &FilterSpec) -> C64 {
    c(0.0, -filter.gamma_f) / filter.kappa()
}
