use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use filtsps::metrics::limits::analytic_limits;
use filtsps::oracles::{self, OracleMetric, OracleReport};
use filtsps::sweep::{self, CsvOptions};
use filtsps::{
    presets, svg, Axis, IntegrationConfig, Limit, Metric, Outcome, Param, PointParams,
    PointResult, RateSet, Scale, SweepGrid, SweepTable,
};

const EXIT_USAGE: u8 = 2;
const EXIT_ALL_FAILED: u8 = 3;
const EXIT_ACCURACY: u8 = 4;
const EXIT_CHECKS_FAILED: u8 = 1;

/// Filtered single-photon source simulator. Rates are in units of
/// gamma_diss, times in units of 1/gamma_diss.
#[derive(Parser, Debug)]
#[command(name = "filtsps", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate metrics at one parameter point.
    Point(PointCmd),
    /// Evaluate a parameter grid in parallel.
    Sweep(SweepCmd),
    /// Regenerate a figure grid and write CSV, SVG and manifest.
    Figure(FigureCmd),
    /// Evaluate the closed-form limits.
    Limits(LimitsCmd),
    /// Run the oracle suite.
    Selftest(SelftestCmd),
}

#[derive(Args, Debug, Default, Clone)]
struct ParamArgs {
    #[arg(long, allow_negative_numbers = true)]
    gamma_pump: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    gamma_deph: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    gamma_f: Option<f64>,
    /// Pulse duration T.
    #[arg(long, allow_negative_numbers = true)]
    pulse: Option<f64>,
    /// Filter centre minus transition frequency.
    #[arg(long, allow_negative_numbers = true)]
    detuning: Option<f64>,
}

impl ParamArgs {
    fn apply(&self, p: &mut PointParams) {
        let pairs = [
            (Param::GammaPump, self.gamma_pump),
            (Param::GammaDeph, self.gamma_deph),
            (Param::GammaF, self.gamma_f),
            (Param::PulseT, self.pulse),
            (Param::Detuning, self.detuning),
        ];
        for (param, v) in pairs {
            if let Some(v) = v {
                p.set(param, v);
            }
        }
    }
}

#[derive(Args, Debug, Default, Clone)]
struct ConfigArgs {
    /// Comma separated subset of ind,g2T,g2inf,qy.
    #[arg(long)]
    metrics: Option<String>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    /// semi-analytic, quadrature or both.
    #[arg(long)]
    path: Option<String>,
}

impl ConfigArgs {
    fn apply(&self, cfg: &mut IntegrationConfig) -> filtsps::Result<()> {
        if let Some(r) = self.rel_tol {
            cfg.rel_tol = r;
        }
        if let Some(a) = self.abs_tol {
            cfg.abs_tol = a;
        }
        if let Some(p) = &self.path {
            cfg.path = p.parse()?;
        }
        Ok(())
    }

    fn metrics(&self) -> filtsps::Result<Option<Vec<Metric>>> {
        self.metrics.as_deref().map(Metric::parse_list).transpose()
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, Default, PartialEq)]
enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct PointCmd {
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// JSON file with `fixed`, `metrics` and `config` keys.
    #[arg(long = "config")]
    config_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fill the wall_ms column.
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct SweepCmd {
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// Sweep grid as JSON. Flags given alongside override its values.
    #[arg(long = "config")]
    config_file: Option<PathBuf>,
    /// `name:min:max:points[:log]`, or `name=v1,v2,...`. Repeat for a second axis.
    #[arg(long = "axis")]
    axes: Vec<String>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the run manifest. Defaults to `<out>.manifest.json` when `--out` is given.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct FigureCmd {
    /// One of fig1a, fig1b, fig2a, fig2b, fig3, fig4a, fig4b, fig5a, fig5b.
    id: String,
    /// Samples per axis.
    #[arg(long, default_value_t = presets::DEFAULT_POINTS)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct LimitsCmd {
    #[command(flatten)]
    params: ParamArgs,
    /// Evaluate only this closed form.
    #[arg(long)]
    name: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SelftestCmd {
    /// Write the JSON summary here. With `--format json` it goes to stdout instead of the report.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Skip the slow quadrature checks.
    #[arg(long)]
    quick: bool,
}

#[derive(Debug)]
struct Exit(u8, String);

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.1)
    }
}

impl std::error::Error for Exit {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Exit(EXIT_USAGE, msg.into()).into()
}

fn core_err(e: filtsps::Error) -> anyhow::Error {
    match e {
        filtsps::Error::Usage(_) | filtsps::Error::InvalidParameter(_) | filtsps::Error::Domain(_) => {
            Exit(EXIT_USAGE, e.to_string()).into()
        }
        e => anyhow::Error::new(e),
    }
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn read_grid(path: &Path) -> anyhow::Result<SweepGrid> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn parse_axis(spec: &str) -> filtsps::Result<Axis> {
    let bad = || filtsps::Error::Usage(format!("bad axis '{spec}' (expected name:min:max:points[:log] or name=v1,v2)"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    if let Some((name, list)) = spec.split_once('=') {
        let values = list.split(',').map(num).collect::<filtsps::Result<Vec<f64>>>()?;
        return Ok(Axis::explicit(name.trim().parse()?, values));
    }
    let parts: Vec<&str> = spec.split(':').collect();
    if !(4..=5).contains(&parts.len()) {
        return Err(bad());
    }
    let param: Param = parts[0].trim().parse()?;
    let (min, max) = (num(parts[1])?, num(parts[2])?);
    let points: usize = parts[3].trim().parse().map_err(|_| bad())?;
    let scale = match parts.get(4).map(|s| s.trim()) {
        None | Some("lin") | Some("linear") => Scale::Linear,
        Some("log") => Scale::Log,
        Some(_) => return Err(bad()),
    };
    Ok(match scale {
        Scale::Linear => Axis::linear(param, min, max, points),
        Scale::Log => Axis::log(param, min, max, points),
    })
}

fn csv_opts(timing: bool) -> CsvOptions {
    CsvOptions { timing }
}

fn point(cmd: PointCmd) -> anyhow::Result<u8> {
    let mut grid = match &cmd.config_file {
        Some(p) => read_grid(p)?,
        None => SweepGrid {
            axes: Vec::new(),
            fixed: PointParams::default(),
            metrics: Metric::ALL.to_vec(),
            config: IntegrationConfig::default(),
        },
    };
    if !grid.axes.is_empty() {
        return Err(usage("point takes no axes; use the sweep subcommand"));
    }
    cmd.params.apply(&mut grid.fixed);
    cmd.config.apply(&mut grid.config).map_err(core_err)?;
    if let Some(m) = cmd.config.metrics().map_err(core_err)? {
        grid.metrics = m;
    }
    grid.config.validate().map_err(core_err)?;
    grid.fixed.rates().map_err(core_err)?;
    grid.fixed.filter().map_err(core_err)?;

    let record = sweep::run_point(&grid.fixed, &grid.metrics, &grid.config).map_err(core_err)?;
    let row = PointResult { params: grid.fixed, record };
    let text = match cmd.format {
        Format::Json => {
            let mut v = serde_json::to_value(&row)?;
            v["config"] = serde_json::to_value(grid.config)?;
            v["status"] = row.status().into();
            serde_json::to_string_pretty(&v)? + "\n"
        }
        Format::Csv => sweep::csv_string(std::slice::from_ref(&row), &grid.config, csv_opts(cmd.timing))
            .map_err(core_err)?,
    };
    emit(cmd.out.as_deref(), &text)?;
    for (m, o) in row.record.outcomes() {
        if !o.is_ok() {
            eprintln!("{m}: {}", describe(o));
        }
    }
    if row.record.outcomes().any(|(_, o)| matches!(o, Outcome::Accuracy { .. })) {
        return Ok(EXIT_ACCURACY);
    }
    if row.all_failed() {
        return Ok(EXIT_ALL_FAILED);
    }
    Ok(0)
}

fn describe(o: &Outcome) -> String {
    match o {
        Outcome::Ok { value, error } => format!("{value:e} +- {error:e}"),
        Outcome::Accuracy { estimate, bound } => {
            format!("accuracy budget exceeded, estimate {estimate:e}, error bound {bound:e}")
        }
        Outcome::Degenerate { message } => format!("degenerate: {message}"),
        Outcome::Failed { message } => format!("failed: {message}"),
    }
}

fn write_table(table: &SweepTable, format: Format, out: Option<&Path>, timing: bool) -> anyhow::Result<()> {
    let text = match format {
        Format::Csv => sweep::csv_string(&table.rows, &table.manifest.grid.config, csv_opts(timing))
            .map_err(core_err)?,
        Format::Json => serde_json::to_string_pretty(table)? + "\n",
    };
    emit(out, &text)
}

fn write_manifest(table: &SweepTable, path: &Path) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(&table.manifest)? + "\n";
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn finish_sweep(table: &SweepTable) -> u8 {
    let failed = table.manifest.failed_points;
    if failed > 0 {
        eprintln!("{failed} of {} points failed every metric", table.rows.len());
    }
    if table.all_failed() {
        EXIT_ALL_FAILED
    } else {
        0
    }
}

fn sweep_cmd(cmd: SweepCmd) -> anyhow::Result<u8> {
    let mut grid = match &cmd.config_file {
        Some(p) => read_grid(p)?,
        None => SweepGrid {
            axes: Vec::new(),
            fixed: PointParams::default(),
            metrics: Metric::ALL.to_vec(),
            config: IntegrationConfig::default(),
        },
    };
    if !cmd.axes.is_empty() {
        grid.axes = cmd.axes.iter().map(|s| parse_axis(s)).collect::<filtsps::Result<_>>().map_err(core_err)?;
    }
    if grid.axes.is_empty() {
        return Err(usage("sweep needs at least one --axis or a --config file with axes"));
    }
    cmd.params.apply(&mut grid.fixed);
    cmd.config.apply(&mut grid.config).map_err(core_err)?;
    if let Some(m) = cmd.config.metrics().map_err(core_err)? {
        grid.metrics = m;
    }
    let table = sweep::run_sweep(&grid, cmd.workers).map_err(core_err)?;
    write_table(&table, cmd.format, cmd.out.as_deref(), cmd.timing)?;
    let manifest = cmd.manifest.clone().or_else(|| {
        cmd.out.as_ref().map(|o| {
            let mut s = o.clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    });
    if let Some(m) = manifest {
        write_manifest(&table, &m)?;
    }
    Ok(finish_sweep(&table))
}

fn figure(cmd: FigureCmd) -> anyhow::Result<u8> {
    let (mut grid, plot) = presets::figure_preset(&cmd.id, cmd.points).map_err(core_err)?;
    if let Some(r) = cmd.rel_tol {
        grid.config.rel_tol = r;
    }
    fs::create_dir_all(&cmd.out).with_context(|| format!("creating {}", cmd.out.display()))?;
    let table = sweep::run_sweep(&grid, cmd.workers).map_err(core_err)?;
    let values: Vec<f64> = table
        .rows
        .iter()
        .map(|r| r.record.get(plot.metric).and_then(Outcome::value).unwrap_or(f64::NAN))
        .collect();
    let picture = svg::heatmap(&plot, &values).map_err(core_err)?;
    let base = cmd.out.join(&cmd.id);
    let csv_path = base.with_extension("csv");
    let svg_path = base.with_extension("svg");
    let manifest_path = base.with_extension("manifest.json");
    write_table(&table, Format::Csv, Some(&csv_path), cmd.timing)?;
    fs::write(&svg_path, picture).with_context(|| format!("writing {}", svg_path.display()))?;
    write_manifest(&table, &manifest_path)?;
    println!("{}", csv_path.display());
    println!("{}", svg_path.display());
    println!("{}", manifest_path.display());
    Ok(finish_sweep(&table))
}

fn limits(cmd: LimitsCmd) -> anyhow::Result<u8> {
    let mut p = PointParams::default();
    cmd.params.apply(&mut p);
    let rates = RateSet::with_all(p.gamma_pump, 1.0, p.gamma_deph, p.pulse_t, 0.0).map_err(core_err)?;
    let names: Vec<&str> = match &cmd.name {
        Some(n) => vec![Limit::from_name(n).map_err(core_err)?.name()],
        None => Limit::ALL.iter().map(|l| l.name()).collect(),
    };
    let mut rows = Vec::new();
    for n in names {
        let v = analytic_limits(n, &rates, p.gamma_f).map_err(core_err)?;
        rows.push((n, v));
    }
    let text = match cmd.format {
        Format::Csv => {
            let mut s = String::from("name,value\n");
            for (n, v) in &rows {
                s.push_str(&format!("{n},{v:e}\n"));
            }
            s
        }
        Format::Json => {
            let mut obj = serde_json::Map::new();
            obj.insert("params".into(), serde_json::to_value(p)?);
            let vals: serde_json::Map<String, serde_json::Value> =
                rows.iter().map(|(n, v)| (n.to_string(), (*v).into())).collect();
            obj.insert("limits".into(), vals.into());
            serde_json::to_string_pretty(&obj)? + "\n"
        }
    };
    emit(cmd.out.as_deref(), &text)?;
    Ok(0)
}

fn ode_checks() -> Vec<OracleReport> {
    let mut out = Vec::new();
    for (pump, deph, t) in [(5.0, 10.0, 0.7), (0.3, 0.0, 2.0), (20.0, 1.0, 0.05)] {
        let rates = match RateSet::new(pump, deph, t) {
            Ok(r) => r,
            Err(e) => {
                out.push(OracleReport::failed("ode_population", e.to_string()));
                continue;
            }
        };
        let meta = format!("gamma_pump={pump}, gamma_deph={deph}, T={t}");
        for s in [0.5 * t, t, t + 1.5] {
            let ode = oracles::ode_oracle(&rates, s);
            let exact = filtsps::liouville::density_matrix_at(s, &rates);
            out.push(match (ode, exact) {
                (Ok(a), Ok(b)) => OracleReport::new(
                    "ode_population",
                    b.excited_population(),
                    a.excited_population(),
                    1e-8,
                    format!("{meta}, t={s}"),
                ),
                (Err(e), _) | (_, Err(e)) => OracleReport::failed("ode_population", e.to_string()),
            });
        }
    }
    out
}

fn quadrature_checks() -> Vec<OracleReport> {
    let cases: [(OracleMetric, f64, f64, f64, f64, usize, f64); 5] = [
        (OracleMetric::QyRatio, 5.0, 10.0, 0.01, 1.0, 400, 0.01),
        (OracleMetric::Indistinguishability, 1.0, 1.0, 0.5, 1.0, 400, 1e-3),
        (OracleMetric::G2AtT, 1.0, 10.0, 0.5, 1.0, 24, 5e-3),
        (OracleMetric::G2Window { t0: 0.0, tau: 1.0 }, 1.0, 10.0, 0.5, 1.0, 24, 0.02),
        (OracleMetric::G2Infinity, 5.0, 0.0, 10.0, 1.0, 32, 0.05),
    ];
    std::thread::scope(|s| {
        let handles: Vec<_> = cases
            .into_iter()
            .map(|(metric, pump, deph, t, gf, n, tol)| {
                s.spawn(move || {
                    match RateSet::new(pump, deph, t).and_then(|r| Ok((r, filtsps::FilterSpec::new(gf)?))) {
                        Ok((r, f)) => oracles::quadrature_check(metric, &r, &f, n, tol),
                        Err(e) => OracleReport::failed(metric.name(), e.to_string()),
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("oracle thread panicked")).collect()
    })
}

fn selftest(cmd: SelftestCmd) -> anyhow::Result<u8> {
    let sections: Vec<(&str, Vec<OracleReport>)> = std::thread::scope(|s| {
        let limits = s.spawn(oracles::limit_convergence_suite);
        let quadrature = (!cmd.quick).then(|| s.spawn(quadrature_checks));
        let mut v = vec![("ode", ode_checks())];
        v.push(("limits", limits.join().expect("oracle thread panicked")));
        if let Some(q) = quadrature {
            v.push(("quadrature", q.join().expect("oracle thread panicked")));
        }
        v
    });
    let total: usize = sections.iter().map(|(_, r)| r.len()).sum();
    let failed: usize = sections.iter().flat_map(|(_, r)| r).filter(|r| !r.passed).count();

    let mut report = String::new();
    for (name, reports) in &sections {
        report.push_str(&format!("[{name}]\n"));
        for r in reports {
            report.push_str(&format!(
                "  {} {:<16} engine={:<14.8e} oracle={:<14.8e} dev={:.2e} tol={:.1e}  {}\n",
                if r.passed { "PASS" } else { "FAIL" },
                r.quantity,
                r.engine,
                r.oracle,
                r.deviation,
                r.tolerance,
                r.metadata
            ));
        }
    }
    report.push_str(&format!("{} of {total} checks passed\n", total - failed));

    let summary = serde_json::json!({
        "engine_version": env!("CARGO_PKG_VERSION"),
        "total": total,
        "failed": failed,
        "sections": sections
            .iter()
            .map(|(n, r)| serde_json::json!({ "name": n, "reports": r }))
            .collect::<Vec<_>>(),
    });
    let json = serde_json::to_string_pretty(&summary)? + "\n";
    match cmd.format {
        Format::Json => {
            eprint!("{report}");
            emit(cmd.out.as_deref(), &json)?;
        }
        Format::Csv => {
            print!("{report}");
            if let Some(p) = &cmd.out {
                emit(Some(p), &json)?;
            }
        }
    }
    Ok(if failed == 0 { 0 } else { EXIT_CHECKS_FAILED })
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Point(c) => point(c),
        Command::Sweep(c) => sweep_cmd(c),
        Command::Figure(c) => figure(c),
        Command::Limits(c) => limits(c),
        Command::Selftest(c) => selftest(c),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Exit>() {
                Some(Exit(code, _)) => ExitCode::from(*code),
                None => ExitCode::FAILURE,
            }
        }
    }
}
