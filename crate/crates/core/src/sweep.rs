//! Parameter grids, parallel sweeps and tabular output.

use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::FilterSpec;
use crate::liouville::RateSet;
use crate::metrics::{evaluate_point, IntegrationConfig, Metric, MetricRecord, Outcome};

/// Sweepable input parameter. Rates are in units of `gamma_diss`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Param {
    #[serde(rename = "gamma_pump")]
    GammaPump,
    #[serde(rename = "gamma_deph")]
    GammaDeph,
    #[serde(rename = "gamma_F", alias = "gamma_f")]
    GammaF,
    #[serde(rename = "pulse_T", alias = "pulse_t")]
    PulseT,
    #[serde(rename = "detuning")]
    Detuning,
}

impl Param {
    pub const ALL: [Param; 5] = [Param::GammaPump, Param::GammaDeph, Param::GammaF, Param::PulseT, Param::Detuning];

    pub fn name(self) -> &'static str {
        match self {
            Param::GammaPump => "gamma_pump",
            Param::GammaDeph => "gamma_deph",
            Param::GammaF => "gamma_F",
            Param::PulseT => "pulse_T",
            Param::Detuning => "detuning",
        }
    }
}

impl FromStr for Param {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma_pump" => Ok(Param::GammaPump),
            "gamma_deph" => Ok(Param::GammaDeph),
            "gamma_F" | "gamma_f" => Ok(Param::GammaF),
            "pulse_T" | "pulse_t" | "pulse" => Ok(Param::PulseT),
            "detuning" => Ok(Param::Detuning),
            _ => Err(Error::Usage(format!(
                "unknown parameter `{s}` (expected gamma_pump, gamma_deph, gamma_F, pulse_T, detuning)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

/// One swept parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub param: Param,
    #[serde(default)]
    pub min: f64,
    #[serde(default)]
    pub max: f64,
    #[serde(default)]
    pub points: usize,
    #[serde(default)]
    pub scale: Scale,
    /// Explicit sample values; when present they replace min/max/points/scale.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl Axis {
    pub fn linear(param: Param, min: f64, max: f64, points: usize) -> Self {
        Self { param, min, max, points, scale: Scale::Linear, values: None }
    }

    pub fn log(param: Param, min: f64, max: f64, points: usize) -> Self {
        Self { param, min, max, points, scale: Scale::Log, values: None }
    }

    pub fn explicit(param: Param, values: Vec<f64>) -> Self {
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Self { param, min, max, points: values.len(), scale: Scale::Linear, values: Some(values) }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(v) = &self.values {
            if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "axis {} needs finite explicit values",
                    self.param.name()
                )));
            }
            return Ok(());
        }
        if self.points < 2 {
            return Err(Error::InvalidParameter(format!("axis {} needs at least 2 points", self.param.name())));
        }
        if !self.min.is_finite() || !self.max.is_finite() || self.min > self.max {
            return Err(Error::InvalidParameter(format!(
                "axis {} has invalid bounds [{}, {}]",
                self.param.name(),
                self.min,
                self.max
            )));
        }
        if self.scale == Scale::Log && self.min <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "log axis {} needs positive bounds",
                self.param.name()
            )));
        }
        Ok(())
    }

    /// Sample values, endpoints exact.
    pub fn values(&self) -> Vec<f64> {
        if let Some(v) = &self.values {
            return v.clone();
        }
        let n = self.points;
        (0..n)
            .map(|i| {
                if i == 0 {
                    return self.min;
                }
                if i == n - 1 {
                    return self.max;
                }
                let u = i as f64 / (n - 1) as f64;
                match self.scale {
                    Scale::Linear => self.min + (self.max - self.min) * u,
                    Scale::Log => 10f64.powf(self.min.log10() * (1.0 - u) + self.max.log10() * u),
                }
            })
            .collect()
    }
}

/// Full parameter set of one evaluation point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointParams {
    pub gamma_pump: f64,
    pub gamma_deph: f64,
    #[serde(rename = "gamma_F", alias = "gamma_f")]
    pub gamma_f: f64,
    #[serde(rename = "pulse_T", alias = "pulse_t")]
    pub pulse_t: f64,
    #[serde(default)]
    pub detuning: f64,
}

impl Default for PointParams {
    fn default() -> Self {
        Self { gamma_pump: 1.0, gamma_deph: 0.0, gamma_f: 1.0, pulse_t: 1.0, detuning: 0.0 }
    }
}

impl PointParams {
    pub fn get(&self, p: Param) -> f64 {
        match p {
            Param::GammaPump => self.gamma_pump,
            Param::GammaDeph => self.gamma_deph,
            Param::GammaF => self.gamma_f,
            Param::PulseT => self.pulse_t,
            Param::Detuning => self.detuning,
        }
    }

    pub fn set(&mut self, p: Param, v: f64) {
        match p {
            Param::GammaPump => self.gamma_pump = v,
            Param::GammaDeph => self.gamma_deph = v,
            Param::GammaF => self.gamma_f = v,
            Param::PulseT => self.pulse_t = v,
            Param::Detuning => self.detuning = v,
        }
    }

    pub fn rates(&self) -> Result<RateSet> {
        RateSet::with_all(self.gamma_pump, 1.0, self.gamma_deph, self.pulse_t, self.detuning)
    }

    pub fn filter(&self) -> Result<FilterSpec> {
        FilterSpec::with_detuning(self.gamma_f, self.detuning)
    }
}

/// A rectangular sweep: the first axis varies slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub axes: Vec<Axis>,
    #[serde(default)]
    pub fixed: PointParams,
    pub metrics: Vec<Metric>,
    #[serde(default)]
    pub config: IntegrationConfig,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        for (i, a) in self.axes.iter().enumerate() {
            a.validate()?;
            if self.axes[..i].iter().any(|b| b.param == a.param) {
                return Err(Error::InvalidParameter(format!("axis {} appears twice", a.param.name())));
            }
        }
        self.config.validate()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.values().len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All points in lexicographic axis order.
    pub fn points(&self) -> Vec<PointParams> {
        let values: Vec<Vec<f64>> = self.axes.iter().map(Axis::values).collect();
        let mut out = vec![self.fixed];
        for (axis, vals) in self.axes.iter().zip(&values) {
            out = out
                .into_iter()
                .flat_map(|p| {
                    vals.iter().map(move |&v| {
                        let mut q = p;
                        q.set(axis.param, v);
                        q
                    })
                })
                .collect();
        }
        out
    }
}

/// One evaluated point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub params: PointParams,
    pub record: MetricRecord,
}

impl PointResult {
    /// `ok` when every requested metric succeeded, otherwise the failing
    /// metrics as `name:status` joined by `;`.
    pub fn status(&self) -> String {
        let bad: Vec<String> = self
            .record
            .outcomes()
            .filter(|(_, o)| !o.is_ok())
            .map(|(m, o)| format!("{}:{}", m.name(), o.status()))
            .collect();
        if bad.is_empty() {
            "ok".into()
        } else {
            bad.join(";")
        }
    }

    /// True when metrics were requested and none succeeded.
    pub fn all_failed(&self) -> bool {
        let mut any = false;
        for (_, o) in self.record.outcomes() {
            if o.is_ok() {
                return false;
            }
            any = true;
        }
        any
    }
}

/// Everything needed to rerun a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub engine_version: String,
    pub grid: SweepGrid,
    pub workers: usize,
    pub points: usize,
    pub wall_ms: f64,
    /// Per-point status in row order.
    pub point_status: Vec<String>,
    pub failed_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<PointResult>,
    pub manifest: RunManifest,
}

impl SweepTable {
    pub fn all_failed(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(PointResult::all_failed)
    }
}

/// Evaluate one point; invalid parameters become failed outcomes.
pub fn run_point(params: &PointParams, metrics: &[Metric], cfg: &IntegrationConfig) -> Result<MetricRecord> {
    cfg.validate()?;
    let built = params.rates().and_then(|r| Ok((r, params.filter()?)));
    match built {
        Ok((rates, filter)) => evaluate_point(&rates, &filter, metrics, cfg),
        Err(e) => {
            let mut rec = MetricRecord::default();
            for &m in metrics {
                let o = Some(Outcome::Failed { message: e.to_string() });
                match m {
                    Metric::Indistinguishability => rec.indistinguishability = o,
                    Metric::G2AtT => rec.g2_at_t = o,
                    Metric::G2Infinity => rec.g2_infinity = o,
                    Metric::QyRatio => rec.qy_ratio = o,
                }
            }
            Ok(rec)
        }
    }
}

/// Evaluate every grid point on `workers` threads (0 picks the rayon default).
pub fn run_sweep(grid: &SweepGrid, workers: usize) -> Result<SweepTable> {
    grid.validate()?;
    let start = Instant::now();
    let points = grid.points();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Resource(e.to_string()))?;
    let records: Vec<Result<MetricRecord>> =
        pool.install(|| points.par_iter().map(|p| run_point(p, &grid.metrics, &grid.config)).collect());
    let mut rows = Vec::with_capacity(points.len());
    for (params, rec) in points.into_iter().zip(records) {
        rows.push(PointResult { params, record: rec? });
    }
    let point_status: Vec<String> = rows.iter().map(PointResult::status).collect();
    let failed_points = rows.iter().filter(|r| r.all_failed()).count();
    let manifest = RunManifest {
        engine_version: env!("CARGO_PKG_VERSION").to_string(),
        grid: grid.clone(),
        workers: pool.current_num_threads(),
        points: rows.len(),
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        point_status,
        failed_points,
    };
    Ok(SweepTable { rows, manifest })
}

/// Fixed CSV column order.
pub const CSV_COLUMNS: [&str; 18] = [
    "gamma_pump",
    "gamma_deph",
    "gamma_f",
    "pulse_T",
    "detuning",
    "ind",
    "ind_err",
    "g2_T",
    "g2_T_err",
    "g2_inf",
    "g2_inf_err",
    "qy_ratio",
    "qy_err",
    "status",
    "wall_ms",
    "rel_tol",
    "abs_tol",
    "horizon_factor",
];

/// CSV writing options.
#[derive(Debug, Clone, Copy, Default)]
pub struct CsvOptions {
    /// Fill `wall_ms`. Off by default so that output is reproducible.
    pub timing: bool,
}

fn fmt_num(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:e}"),
        None => String::new(),
    }
}

fn outcome_cells(o: Option<&Outcome>) -> [String; 2] {
    match o {
        None => [String::new(), String::new()],
        Some(Outcome::Ok { value, error }) => [fmt_num(Some(*value)), fmt_num(Some(*error))],
        Some(Outcome::Accuracy { estimate, bound }) => [fmt_num(Some(*estimate)), fmt_num(Some(*bound))],
        Some(_) => ["nan".into(), "nan".into()],
    }
}

/// Write rows as CSV, preceded by a `#` comment stating the units and tolerances.
pub fn write_csv<W: Write>(out: W, rows: &[PointResult], cfg: &IntegrationConfig, opts: CsvOptions) -> Result<()> {
    let mut out = out;
    let mut head = String::new();
    let _ = writeln!(
        head,
        "# rates and detuning in units of gamma_diss, times in units of 1/gamma_diss; \
         rel_tol={:e} abs_tol={:e} horizon_factor={} path={:?}",
        cfg.rel_tol, cfg.abs_tol, cfg.horizon_factor, cfg.path
    );
    out.write_all(head.as_bytes()).map_err(|e| Error::Io(e.to_string()))?;
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(CSV_COLUMNS).map_err(io)?;
    for row in rows {
        let p = &row.params;
        let r = &row.record;
        let mut cells = vec![
            fmt_num(Some(p.gamma_pump)),
            fmt_num(Some(p.gamma_deph)),
            fmt_num(Some(p.gamma_f)),
            fmt_num(Some(p.pulse_t)),
            fmt_num(Some(p.detuning)),
        ];
        for m in Metric::ALL {
            cells.extend(outcome_cells(r.get(m)));
        }
        cells.push(row.status());
        cells.push(if opts.timing { format!("{:.3}", r.wall_ms) } else { String::new() });
        cells.push(fmt_num(Some(cfg.rel_tol)));
        cells.push(fmt_num(Some(cfg.abs_tol)));
        cells.push(fmt_num(Some(cfg.horizon_factor)));
        w.write_record(&cells).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

pub fn csv_string(rows: &[PointResult], cfg: &IntegrationConfig, opts: CsvOptions) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows, cfg, opts)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}
