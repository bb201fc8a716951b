//! Sweep grids for the standard figure set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{IntegrationConfig, Metric};
use crate::sweep::{Axis, Param, PointParams, SweepGrid};

pub const FIGURE_IDS: [&str; 9] = ["fig1a", "fig1b", "fig2a", "fig2b", "fig3", "fig4a", "fig4b", "fig5a", "fig5b"];

/// Default resolution per axis.
pub const DEFAULT_POINTS: usize = 40;

/// Pulse duration used for the short-pulse figure.
pub const FIG3_PULSE: f64 = 0.01;
/// Pump rate used for the short-pulse figure.
pub const FIG3_PUMP: f64 = 0.01;

/// How to draw one heatmap axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotAxis {
    pub label: String,
    /// Coordinates of the samples as drawn.
    pub values: Vec<f64>,
    pub log: bool,
}

/// Heatmap description. The grid's first axis runs along `y`, the second along `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    pub id: String,
    pub title: String,
    pub metric: Metric,
    pub x: PlotAxis,
    pub y: PlotAxis,
}

fn log_values(min: f64, max: f64, n: usize) -> Vec<f64> {
    Axis::log(Param::GammaF, min, max, n).values()
}

fn filter_pulse(id: &str, metric: Metric, pump: f64, title: &str, n: usize) -> (SweepGrid, PlotSpec) {
    let grid = SweepGrid {
        axes: vec![Axis::log(Param::PulseT, 1e-2, 1e2, n), Axis::log(Param::GammaF, 1e-2, 1e2, n)],
        fixed: PointParams { gamma_pump: pump, gamma_deph: 10.0, gamma_f: 1.0, pulse_t: 1.0, detuning: 0.0 },
        metrics: vec![metric],
        config: IntegrationConfig::default(),
    };
    let plot = PlotSpec {
        id: id.into(),
        title: format!("{title}, gamma_deph=10, gamma_pump={pump}"),
        metric,
        x: PlotAxis { label: "gamma_F".into(), values: grid.axes[1].values(), log: true },
        y: PlotAxis { label: "T".into(), values: grid.axes[0].values(), log: true },
    };
    (grid, plot)
}

fn pump_pulse(id: &str, deph: f64, n: usize) -> (SweepGrid, PlotSpec) {
    let grid = SweepGrid {
        axes: vec![Axis::log(Param::PulseT, 1e-2, 1e2, n), Axis::log(Param::GammaPump, 1e-2, 1e2, n)],
        fixed: PointParams { gamma_pump: 1.0, gamma_deph: deph, gamma_f: 1.0, pulse_t: 1.0, detuning: 0.0 },
        metrics: vec![Metric::G2Infinity],
        config: IntegrationConfig::default(),
    };
    let plot = PlotSpec {
        id: id.into(),
        title: format!("g2_inf, gamma_deph={deph}"),
        metric: Metric::G2Infinity,
        x: PlotAxis { label: "gamma_pump".into(), values: grid.axes[1].values(), log: true },
        y: PlotAxis { label: "T".into(), values: grid.axes[0].values(), log: true },
    };
    (grid, plot)
}

/// Short-pulse filtered g2 against `gamma_F*T` and `Gamma*T`, with `Gamma`
/// the transverse rate during the pulse. `Gamma` is reached through the
/// dephasing rate at fixed small pump.
fn fig3(n: usize) -> (SweepGrid, PlotSpec) {
    let t = FIG3_PULSE;
    let ft = log_values(1e-3, 1e2, n);
    let gt = log_values(1e-2, 1e1, n);
    let deph: Vec<f64> = gt.iter().map(|g| (2.0 * g / t - FIG3_PUMP - 1.0).max(0.0)).collect();
    let gf: Vec<f64> = ft.iter().map(|x| x / t).collect();
    let grid = SweepGrid {
        axes: vec![Axis::explicit(Param::GammaDeph, deph), Axis::explicit(Param::GammaF, gf)],
        fixed: PointParams { gamma_pump: FIG3_PUMP, gamma_deph: 0.0, gamma_f: 1.0, pulse_t: t, detuning: 0.0 },
        metrics: vec![Metric::G2AtT],
        config: IntegrationConfig::default(),
    };
    let plot = PlotSpec {
        id: "fig3".into(),
        title: format!("g2_F(T,0), T={t}, gamma_pump={FIG3_PUMP}"),
        metric: Metric::G2AtT,
        x: PlotAxis { label: "gamma_F*T".into(), values: ft, log: true },
        y: PlotAxis { label: "Gamma*T".into(), values: gt, log: true },
    };
    (grid, plot)
}

/// Grid and plot description for a figure, `points` samples per axis.
pub fn figure_preset(id: &str, points: usize) -> Result<(SweepGrid, PlotSpec)> {
    if points < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 points per axis, got {points}")));
    }
    let n = points;
    Ok(match id {
        "fig1a" => filter_pulse(id, Metric::Indistinguishability, 0.01, "I_F", n),
        "fig1b" => filter_pulse(id, Metric::Indistinguishability, 5.0, "I_F", n),
        "fig2a" => filter_pulse(id, Metric::G2AtT, 0.01, "g2_F(T,0)", n),
        "fig2b" => filter_pulse(id, Metric::G2AtT, 5.0, "g2_F(T,0)", n),
        "fig3" => fig3(n),
        "fig4a" => pump_pulse(id, 0.0, n),
        "fig4b" => pump_pulse(id, 10.0, n),
        "fig5a" => filter_pulse(id, Metric::QyRatio, 0.01, "quantum yield", n),
        "fig5b" => filter_pulse(id, Metric::QyRatio, 5.0, "quantum yield", n),
        _ => {
            return Err(Error::Usage(format!(
                "unknown figure `{id}`; valid ids: {}",
                FIGURE_IDS.join(", ")
            )))
        }
    })
}
