//! Closed-form limits of the metrics, each valid only inside its regime.
//!
//! | name         | regime                                              |
//! |--------------|-----------------------------------------------------|
//! | `I0`         | unfiltered indistinguishability as `T → 0`          |
//! | `ind_wide`   | `γ_F ≫ γ_deph`                                      |
//! | `ind_short`  | `T` short against every inverse geometric-mean rate |
//! | `ind_narrow` | `γ_F ≪ γ_diss`, `T ≪ (γ_diss γ_F)^{-1/2}`           |
//! | `g2_cw`      | `T ≫ 1/γ_diss`                                      |
//! | `g2_inf_limit` | `T ≪ 1/γ_diss`, `γ_pump T ≲ 1`                    |
//! | `qy_short`   | `T ≪ 1/γ_diss`                                      |
//! | `qy_long`    | `T ≫ 1/γ_diss`                                      |

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liouville::RateSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Limit {
    I0,
    IndWide,
    IndShort,
    IndNarrow,
    G2Cw,
    G2InfLimit,
    QyShort,
    QyLong,
}

impl Limit {
    pub const ALL: [Limit; 8] = [
        Limit::I0,
        Limit::IndWide,
        Limit::IndShort,
        Limit::IndNarrow,
        Limit::G2Cw,
        Limit::G2InfLimit,
        Limit::QyShort,
        Limit::QyLong,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Limit::I0 => "I0",
            Limit::IndWide => "ind_wide",
            Limit::IndShort => "ind_short",
            Limit::IndNarrow => "ind_narrow",
            Limit::G2Cw => "g2_cw",
            Limit::G2InfLimit => "g2_inf_limit",
            Limit::QyShort => "qy_short",
            Limit::QyLong => "qy_long",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Limit::ALL.into_iter().find(|l| l.name() == name).ok_or_else(|| {
            let names: Vec<_> = Limit::ALL.iter().map(|l| l.name()).collect();
            Error::Usage(format!("unknown limit '{name}' (expected one of {})", names.join(", ")))
        })
    }

    /// Evaluate the closed form. `gamma_f` is ignored by unfiltered limits.
    pub fn eval(self, rates: &RateSet, gamma_f: f64) -> f64 {
        let gd = rates.gamma_diss;
        let gdeph = rates.gamma_deph;
        let gp = rates.gamma_pump;
        let gf = gamma_f;
        let t = rates.pulse_t;
        let i0 = gd / (gd + gdeph);
        match self {
            Limit::I0 => i0,
            Limit::IndWide => {
                let x = t * gd;
                if x < 1e-3 {
                    i0 * (1.0 - x / 3.0 + x * x / 12.0 - x * x * x / 60.0)
                } else {
                    i0 * 2.0 * (x + (-x).exp_m1()) / (x * x)
                }
            }
            Limit::IndShort => {
                let a = gdeph / (gd + 2.0 * gf) * (gdeph + 3.0 * gd + 4.0 * gf)
                    / (gdeph + 3.0 * gd + 2.0 * gf);
                let b = t * t * gf * gd / 12.0 * (gd + gdeph + 2.0 * gf) / (gd + 2.0 * gf)
                    * (2.0 * gdeph + 3.0 * gd + 2.0 * gf)
                    / (gdeph + 3.0 * gd + 2.0 * gf);
                i0 * (1.0 + a - b)
            }
            Limit::IndNarrow => 1.0 - 2.0 * gf / gd - t * t * gd * gf / 6.0,
            Limit::G2Cw => {
                let d = rates.derived();
                let (g, big, p) = (d.longitudinal, d.transverse, d.pump_fraction);
                let q = (1.0 - 2.0 * p).powi(2);
                2.0 * g * g * (gf + g * q) * (big + gf)
                    / ((g + 2.0 * gf) * (3.0 * g * gf + 2.0 * gf * gf + g * g * q) * (big + 3.0 * gf))
            }
            Limit::G2InfLimit => 4.0 * i0,
            Limit::QyShort => 2.0 * gf / (gd + gdeph + 2.0 * gf),
            Limit::QyLong => 2.0 * gf / (gd + gdeph + gp + 2.0 * gf),
        }
    }
}

/// Evaluate the closed form called `name`.
pub fn analytic_limits(name: &str, rates: &RateSet, gamma_f: f64) -> Result<f64> {
    let l = Limit::from_name(name)?;
    let needs_filter = !matches!(l, Limit::I0 | Limit::IndWide | Limit::G2InfLimit);
    if needs_filter && !(gamma_f > 0.0 && gamma_f.is_finite()) {
        return Err(Error::InvalidParameter(format!("{name} needs a finite gamma_F > 0")));
    }
    Ok(l.eval(rates, gamma_f))
}
