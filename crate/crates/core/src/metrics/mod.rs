//! Figures of merit of the filtered source.
//!
//! Every metric is a ratio of multi-time integrals described by
//! [`model::EventModel`]s. The semi-analytic path ([`exact`]) exponentiates
//! the augmented generator; the quadrature path ([`quadrature`]) marches the
//! same equations with Gauss–Legendre panels. [`IntegrationConfig::path`]
//! picks one of them or runs both and reports their spread as the error.

pub mod exact;
pub mod limits;
pub mod model;
pub mod quadrature;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::FilterSpec;
use crate::linalg::C64;
use crate::liouville::RateSet;
use crate::regression::RegressionEngine;
use model::{Augmented, EventModel};

/// Integrated emission below which metric ratios are reported as degenerate.
pub const EMISSION_THRESHOLD: f64 = 1e-12;

/// Largest relative imaginary part tolerated in a metric numerator or denominator.
pub const IMAG_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathSelector {
    SemiAnalytic,
    Quadrature,
    Both,
}

impl FromStr for PathSelector {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "semi-analytic" => Ok(Self::SemiAnalytic),
            "quadrature" => Ok(Self::Quadrature),
            "both" => Ok(Self::Both),
            _ => Err(Error::Usage(format!(
                "unknown path '{s}' (expected semi-analytic, quadrature or both)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegrationConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Infinite upper limits are cut at `T + horizon_factor / slowest decay`.
    pub horizon_factor: f64,
    /// Gauss–Legendre nodes per panel on the quadrature path.
    pub quad_nodes: usize,
    pub path: PathSelector,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            abs_tol: 1e-10,
            horizon_factor: 40.0,
            quad_nodes: 10,
            path: PathSelector::SemiAnalytic,
        }
    }
}

impl IntegrationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        if !(self.horizon_factor >= 10.0) || !self.horizon_factor.is_finite() {
            return Err(Error::InvalidParameter("horizon_factor must be >= 10".into()));
        }
        if !(2..=40).contains(&self.quad_nodes) {
            return Err(Error::InvalidParameter("quad_nodes must be in 2..=40".into()));
        }
        Ok(())
    }

    pub fn with_path(mut self, path: PathSelector) -> Self {
        self.path = path;
        self
    }
}

/// The four figures of merit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "ind")]
    Indistinguishability,
    #[serde(rename = "g2T")]
    G2AtT,
    #[serde(rename = "g2inf")]
    G2Infinity,
    #[serde(rename = "qy")]
    QyRatio,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::Indistinguishability,
        Metric::G2AtT,
        Metric::G2Infinity,
        Metric::QyRatio,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Indistinguishability => "ind",
            Metric::G2AtT => "g2T",
            Metric::G2Infinity => "g2inf",
            Metric::QyRatio => "qy",
        }
    }

    /// Parse a comma separated list such as `ind,g2T`.
    pub fn parse_list(s: &str) -> Result<Vec<Metric>> {
        let mut out: Vec<Metric> = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let m: Metric = part.parse()?;
            if !out.contains(&m) {
                out.push(m);
            }
        }
        out.sort();
        Ok(out)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Usage(format!("unknown metric '{s}' (expected ind, g2T, g2inf or qy)"))
            })
    }
}

/// A metric value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Complex integral value with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: C64,
    pub error: f64,
}

/// Evaluate one event model on the configured path.
pub fn integrate(model: &EventModel, engine: &RegressionEngine, cfg: &IntegrationConfig) -> Result<Integral> {
    let aug = Augmented::new(model, engine.rates().pulse_t)?;
    let roundoff = |v: C64| 1e-12 * v.norm();
    match cfg.path {
        PathSelector::SemiAnalytic => {
            let v = exact::integrate(&aug, engine)?.value;
            Ok(Integral { value: v, error: roundoff(v) })
        }
        PathSelector::Quadrature => {
            let q = quadrature::integrate(&aug, engine, cfg.quad_nodes)?;
            Ok(Integral { value: q.value, error: q.error })
        }
        PathSelector::Both => {
            let v = exact::integrate(&aug, engine)?.value;
            let q = quadrature::integrate(&aug, engine, cfg.quad_nodes)?;
            Ok(Integral { value: v, error: (v - q.value).norm().max(roundoff(v)) })
        }
    }
}

fn sum_models(models: &[EventModel], engine: &RegressionEngine, cfg: &IntegrationConfig) -> Result<Integral> {
    let mut acc = Integral { value: C64::from(0.0), error: 0.0 };
    for m in models {
        let i = integrate(m, engine, cfg)?;
        acc.value += i.value;
        acc.error += i.error;
    }
    Ok(acc)
}

/// `num / den^power` with first-order error propagation and the accuracy
/// and range checks shared by all metrics.
fn ratio(
    num: Integral,
    den: Integral,
    power: i32,
    tail: f64,
    range: (f64, f64),
    cfg: &IntegrationConfig,
) -> Result<Estimate> {
    for (part, z) in [("numerator", num.value), ("denominator", den.value)] {
        if z.im.abs() > IMAG_TOLERANCE * z.norm() + f64::MIN_POSITIVE {
            return Err(Error::Numerical(format!("{part} {z} is not real")));
        }
    }
    let d = den.value.re;
    let value = num.value.re / d.powi(power);
    let rel = num.error / num.value.norm().max(f64::MIN_POSITIVE)
        + power as f64 * den.error / d.abs()
        + tail;
    let error = if num.value.norm() == 0.0 { num.error / d.abs().powi(power) } else { rel * value.abs() };
    if !value.is_finite() {
        return Err(Error::Numerical("metric ratio is not finite".into()));
    }
    if error > cfg.rel_tol * value.abs() + cfg.abs_tol {
        return Err(Error::Accuracy { estimate: value, bound: error });
    }
    let (lo, hi) = range;
    let value = if value < lo && value >= lo - cfg.abs_tol {
        lo
    } else if value > hi && value <= hi + cfg.abs_tol {
        hi
    } else if value < lo || value > hi {
        return Err(Error::Numerical(format!(
            "value {value} outside [{lo}, {hi}] beyond abs_tol"
        )));
    } else {
        value
    };
    Ok(Estimate { value, error })
}

/// Relative size of the neglected tail beyond the horizon.
fn tail_bound(cfg: &IntegrationConfig, events: usize) -> f64 {
    events as f64 * (-cfg.horizon_factor).exp() * (1.0 + cfg.horizon_factor)
}

fn check_emission(engine: &RegressionEngine, cfg: &IntegrationConfig) -> Result<f64> {
    let h = model::horizon(engine.rates(), cfg.horizon_factor);
    let cfg = cfg.with_path(PathSelector::SemiAnalytic);
    let e = integrate(&model::emission(h), engine, &cfg)?.value.re;
    if !(e > EMISSION_THRESHOLD) {
        return Err(Error::Degenerate(format!(
            "integrated emission {e:.3e} is below {EMISSION_THRESHOLD:e}"
        )));
    }
    Ok(e)
}

fn prepare(rates: &RateSet, cfg: &IntegrationConfig) -> Result<RegressionEngine> {
    cfg.validate()?;
    let engine = RegressionEngine::new(rates);
    check_emission(&engine, cfg)?;
    Ok(engine)
}

fn filter_rates(rates: &RateSet, filter: &FilterSpec) -> RateSet {
    let mut r = *rates;
    r.detuning = filter.detuning;
    r
}

/// Two-photon interference visibility of the filtered light.
pub fn indistinguishability(rates: &RateSet, filter: &FilterSpec, cfg: &IntegrationConfig) -> Result<Estimate> {
    let rates = filter_rates(rates, filter);
    let engine = prepare(&rates, cfg)?;
    let h = model::horizon(&rates, cfg.horizon_factor);
    let den = integrate(&model::filtered_number(filter, h), &engine, cfg)?;
    let num = integrate(&model::interference(filter, h), &engine, cfg)?;
    ratio(num, den, 2, tail_bound(cfg, 4), (0.0, 1.0), cfg)
}

/// Filtered `g²` sampled at the end of the pulse.
pub fn g2_filtered_at_t(rates: &RateSet, filter: &FilterSpec, cfg: &IntegrationConfig) -> Result<Estimate> {
    if rates.pulse_t <= 0.0 {
        return Err(Error::Domain("g2 at the pulse end needs pulse_T > 0".into()));
    }
    let rates = filter_rates(rates, filter);
    let engine = prepare(&rates, cfg)?;
    let (n, d) = model::filtered_g2_at(filter, rates.pulse_t);
    let den = integrate(&d, &engine, cfg)?;
    let num = integrate(&n, &engine, cfg)?;
    ratio(num, den, 2, 0.0, (0.0, f64::INFINITY), cfg)
}

/// Filtered `g²` of a detector integrating over `[t, t + tau]`.
pub fn g2_detector_window(
    t: f64,
    tau: f64,
    rates: &RateSet,
    filter: &FilterSpec,
    cfg: &IntegrationConfig,
) -> Result<Estimate> {
    if !(t >= 0.0 && t.is_finite()) || !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Domain(format!("need t >= 0 and tau > 0, got t={t}, tau={tau}")));
    }
    let rates = filter_rates(rates, filter);
    let engine = prepare(&rates, cfg)?;
    let (n, d) = model::detector_window(filter, t, tau);
    let den = sum_models(&d, &engine, cfg)?;
    if !(den.value.re.abs() > 0.0) {
        return Err(Error::Degenerate("no filtered emission reaches the window".into()));
    }
    let num = sum_models(&n, &engine, cfg)?;
    ratio(num, den, 2, 0.0, (0.0, f64::INFINITY), cfg)
}

/// Both sides of the integrated-amplitude identity: the filtered field
/// correlator integrated over both detection times up to the horizon, and
/// `|A|²` times the unfiltered two-time correlator integrated over the same
/// square, with `A` the integral of the transfer kernel.
pub fn amplitude_identity(rates: &RateSet, filter: &FilterSpec, cfg: &IntegrationConfig) -> Result<(f64, f64)> {
    let rates = filter_rates(rates, filter);
    let engine = prepare(&rates, cfg)?;
    let h = model::horizon(&rates, cfg.horizon_factor);
    let (_, d) = model::detector_window(filter, 0.0, h + cfg.horizon_factor / filter.gamma_f);
    let filtered = sum_models(&d, &engine, cfg)?.value.re;
    let (_, bare) = model::unfiltered_g2(h);
    let amp2 = filter.gamma_f.powi(2) / filter.kappa().norm_sqr();
    Ok((filtered, amp2 * integrate(&bare, &engine, cfg)?.value.re))
}

/// Unfiltered `g²` of a detector integrating over all emission.
pub fn g2_infinity(rates: &RateSet, cfg: &IntegrationConfig) -> Result<Estimate> {
    let engine = prepare(rates, cfg)?;
    let h = model::horizon(rates, cfg.horizon_factor);
    let (n, d) = model::unfiltered_g2(h);
    let den = integrate(&d, &engine, cfg)?;
    let num = integrate(&n, &engine, cfg)?;
    ratio(num, den, 2, tail_bound(cfg, 4), (0.0, f64::INFINITY), cfg)
}

/// Fraction of the emitted energy transmitted by the filter.
pub fn qy_ratio(rates: &RateSet, filter: &FilterSpec, cfg: &IntegrationConfig) -> Result<Estimate> {
    let rates = filter_rates(rates, filter);
    let engine = prepare(&rates, cfg)?;
    let h = model::horizon(&rates, cfg.horizon_factor);
    let num = integrate(&model::filtered_number(filter, h), &engine, cfg)?;
    let den = integrate(&model::emission(h), &engine, cfg)?;
    ratio(num, den, 1, tail_bound(cfg, 2), (0.0, 1.0), cfg)
}

/// Per-metric outcome inside a [`MetricRecord`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Outcome {
    Ok { value: f64, error: f64 },
    Accuracy { estimate: f64, bound: f64 },
    Degenerate { message: String },
    Failed { message: String },
}

impl Outcome {
    pub fn from_result(r: Result<Estimate>) -> Self {
        match r {
            Ok(e) => Outcome::Ok { value: e.value, error: e.error },
            Err(Error::Accuracy { estimate, bound }) => Outcome::Accuracy { estimate, bound },
            Err(Error::Degenerate(m)) => Outcome::Degenerate { message: m },
            Err(e) => Outcome::Failed { message: e.to_string() },
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Outcome::Ok { value, .. } => Some(*value),
            _ => None,
        }
    }

    pub fn error(&self) -> Option<f64> {
        match self {
            Outcome::Ok { error, .. } => Some(*error),
            _ => None,
        }
    }

    pub fn is_ok(&self) -> bool {
        matches!(self, Outcome::Ok { .. })
    }

    pub fn status(&self) -> &'static str {
        match self {
            Outcome::Ok { .. } => "ok",
            Outcome::Accuracy { .. } => "accuracy",
            Outcome::Degenerate { .. } => "degenerate",
            Outcome::Failed { .. } => "failed",
        }
    }
}

/// One parameter point's metrics. Unrequested metrics are `None`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricRecord {
    pub indistinguishability: Option<Outcome>,
    pub g2_at_t: Option<Outcome>,
    pub g2_infinity: Option<Outcome>,
    pub qy_ratio: Option<Outcome>,
    pub wall_ms: f64,
}

impl MetricRecord {
    pub fn get(&self, m: Metric) -> Option<&Outcome> {
        match m {
            Metric::Indistinguishability => self.indistinguishability.as_ref(),
            Metric::G2AtT => self.g2_at_t.as_ref(),
            Metric::G2Infinity => self.g2_infinity.as_ref(),
            Metric::QyRatio => self.qy_ratio.as_ref(),
        }
    }

    fn slot(&mut self, m: Metric) -> &mut Option<Outcome> {
        match m {
            Metric::Indistinguishability => &mut self.indistinguishability,
            Metric::G2AtT => &mut self.g2_at_t,
            Metric::G2Infinity => &mut self.g2_infinity,
            Metric::QyRatio => &mut self.qy_ratio,
        }
    }

    pub fn outcomes(&self) -> impl Iterator<Item = (Metric, &Outcome)> {
        Metric::ALL.into_iter().filter_map(|m| self.get(m).map(|o| (m, o)))
    }
}

/// Evaluate the selected metrics at one point. Failures are recorded per
/// metric; the call itself only fails on invalid configuration.
pub fn evaluate_point(
    rates: &RateSet,
    filter: &FilterSpec,
    metrics: &[Metric],
    cfg: &IntegrationConfig,
) -> Result<MetricRecord> {
    cfg.validate()?;
    let start = Instant::now();
    let mut rec = MetricRecord::default();
    for &m in metrics {
        let r = match m {
            Metric::Indistinguishability => indistinguishability(rates, filter, cfg),
            Metric::G2AtT => g2_filtered_at_t(rates, filter, cfg),
            Metric::G2Infinity => g2_infinity(rates, cfg),
            Metric::QyRatio => qy_ratio(rates, filter, cfg),
        };
        *rec.slot(m) = Some(Outcome::from_result(r));
    }
    rec.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(rec)
}
