//! `sqzqi`: bounds, OPA model values, dataset analysis and figures.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage or domain error,
//! 3 numerical failure, 4 dataset error.

pub mod config;
pub mod plot;

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use qi_core::bound::{closed_form_gaussian, closed_form_lorentzian_sq, curves_csv, ft_grid, sample_curve};
use qi_core::db::{format_db, round_sig, to_db};
use qi_core::meta::{classify, fit_report_scales, read_dataset, AnalysisReport, BandState, IDEAL_OPA_ID};
use qi_core::opa::{self, FteKernel, OpaParams};
use qi_core::{
    numeric_bound, BoundOptions, Evaluation, PhaseArgument, QiCurve, QiError, SamplingWindow, SpectralFunction,
    Variant, WindowKind,
};
use thiserror::Error;

use crate::config::Settings;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] QiError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Data(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_numeric() || matches!(e, QiError::ZeroWeight) => 3,
            CliError::Core(QiError::Data { .. } | QiError::Infeasible(_)) => 4,
            CliError::Core(_) => 2,
            CliError::Io { .. } => 1,
            CliError::Data(_) => 4,
            CliError::Invariant(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sqzqi", version, about = "Quantum-inequality bounds versus measured vacuum squeezing")]
pub struct Cli {
    /// Settings file with `key = value` lines (quad.rel_tol, quad.max_nodes, plot.db_floor).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a bound curve R(F_T) or evaluate R at one value of ω₀t₀.
    Bound(BoundArgs),
    /// Evaluate the below-threshold OPA model.
    Opa(OpaArgs),
    /// Classify a dataset against bound curves and write a JSON report.
    Analyze(AnalyzeArgs),
    /// Write an SVG figure.
    Plot(PlotArgs),
}

fn parse_window(s: &str) -> Result<WindowKind, String> {
    WindowKind::parse(s).ok_or_else(|| format!("unknown window `{s}` (gaussian, lorentzian2, square, trapezoid)"))
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    Variant::parse(s).ok_or_else(|| format!("unknown variant `{s}` (paper, marecki)"))
}

/// Inclusive `F_T` grid given as `lo:hi:step`.
#[derive(Debug, Clone, PartialEq)]
pub struct FtGrid(pub Vec<f64>);

/// `lo:hi:step` with `0 < lo <= hi <= 1`.
fn parse_grid(s: &str) -> Result<FtGrid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, step] = parts.as_slice() else {
        return Err(format!("grid `{s}` must be lo:hi:step"));
    };
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("`{t}` is not a number"));
    let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
    if !(lo > 0.0 && hi <= 1.0 && lo <= hi && step > 0.0) {
        return Err(format!("grid `{s}` must satisfy 0 < lo <= hi <= 1 and step > 0"));
    }
    ft_grid(lo, hi, step).map(FtGrid).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("domain").required(true).args(["ft", "omega_t0"])))]
pub struct BoundArgs {
    #[arg(long, value_parser = parse_window)]
    pub window: WindowKind,
    /// Trapezoid side length in units of the flat top.
    #[arg(long)]
    pub n: Option<f64>,
    #[arg(long, value_parser = parse_variant, default_value = "paper")]
    pub variant: Variant,
    /// Multiplier applied to the phase argument.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// F_T grid `lo:hi:step`.
    #[arg(long, value_parser = parse_grid)]
    pub ft: Option<FtGrid>,
    /// Evaluate at one value of ω₀t₀ instead of sampling a curve.
    #[arg(long)]
    pub omega_t0: Option<f64>,
    /// Use the numerical bound even when a closed form exists.
    #[arg(long)]
    pub numeric: bool,
    /// Accept the square window.
    #[arg(long)]
    pub allow_unstable: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Depth,
    Uniform,
}

impl From<KernelArg> for FteKernel {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Depth => FteKernel::Depth,
            KernelArg::Uniform => FteKernel::Uniform,
        }
    }
}

#[derive(Debug, Args)]
pub struct OpaArgs {
    /// Pump ratio P/P_th.
    #[arg(long)]
    pub x: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Sideband frequency ω/γ.
    #[arg(long, default_value_t = 0.0)]
    pub w: f64,
    /// Local-oscillator phase in radians; prints S(θ).
    #[arg(long)]
    pub theta: Option<f64>,
    /// Print S₋, S₊ and their product.
    #[arg(long)]
    pub extremes: bool,
    /// Print the squeezed fraction F_T.
    #[arg(long)]
    pub ft: bool,
    /// Ideal-amplifier bound at this F_T.
    #[arg(long)]
    pub ideal_bound: Option<f64>,
    /// Effective F_T averaged over ω/γ ∈ [0, W].
    #[arg(long, value_name = "W")]
    pub effective: Option<f64>,
    #[arg(long, value_enum, default_value = "depth")]
    pub kernel: KernelArg,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated curve ids.
    #[arg(long, value_delimiter = ',', default_value = "gaussian-paper,gaussian-marecki")]
    pub curves: Vec<String>,
    /// Fit the argument scale of every curve.
    #[arg(long)]
    pub fit: bool,
    /// Skip the ideal-amplifier comparison.
    #[arg(long)]
    pub no_ideal: bool,
    #[arg(long)]
    pub allow_unstable: bool,
    /// JSON report path; without it the report goes to stdout and the summary to stderr.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("content").required(true).args(["fig", "curve"])))]
pub struct PlotArgs {
    /// Figure preset.
    #[arg(long, value_parser = clap::value_parser!(u8).range(4..=8))]
    pub fig: Option<u8>,
    /// Curve ids for a custom plot.
    #[arg(long, value_delimiter = ',')]
    pub curve: Vec<String>,
    /// Add the ideal-amplifier curve to a custom plot.
    #[arg(long)]
    pub ideal: bool,
    /// Report supplying data points and fitted scales.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub allow_unstable: bool,
    #[arg(long)]
    pub out: PathBuf,
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    File::create(path)
        .and_then(|mut f| f.write_all(contents.as_bytes()))
        .map_err(|source| CliError::Io {
            context: format!("writing {}", path.display()),
            source,
        })
}

fn io_err(source: std::io::Error) -> CliError {
    CliError::Io {
        context: "writing output".to_string(),
        source,
    }
}

/// Executes a parsed command line.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let settings = match &cli.config {
        Some(p) => Settings::load(p)?,
        None => Settings::default(),
    };
    match cli.command {
        Command::Bound(a) => cmd_bound(a, &settings, out),
        Command::Opa(a) => cmd_opa(a, out),
        Command::Analyze(a) => cmd_analyze(a, &settings, out, err),
        Command::Plot(a) => cmd_plot(a, &settings, err),
    }
}

fn options(settings: &Settings) -> BoundOptions {
    BoundOptions {
        quad: settings.quad,
        ..BoundOptions::default()
    }
}

pub fn cmd_bound(a: BoundArgs, settings: &Settings, out: &mut dyn Write) -> Result<(), CliError> {
    if a.window == WindowKind::Trapezoid && a.n.is_none() {
        return Err(CliError::Usage("--n is required for the trapezoid window".into()));
    }
    if a.window != WindowKind::Trapezoid && a.n.is_some() {
        return Err(CliError::Usage("--n applies only to the trapezoid window".into()));
    }
    let n = a.n.unwrap_or(0.0);
    let opts = options(settings);
    let analytic = a.window.has_analytic_spectrum() && !a.numeric;
    let text = if let Some(arg) = a.omega_t0 {
        let phase = PhaseArgument::new(arg)?;
        let (r_db, bracket, error) = if analytic {
            let r = match a.window {
                WindowKind::Gaussian => closed_form_gaussian(phase),
                _ => closed_form_lorentzian_sq(phase),
            };
            (r, qi_core::db::from_db(r), 0.0)
        } else {
            let w = SamplingWindow::new(a.window, 1.0, n, a.allow_unstable)?;
            let b = numeric_bound(&w, &SpectralFunction::delta(arg)?, &opts)?;
            (b.r_db, b.bracket, b.error_estimate)
        };
        format!(
            "window = {}\nomega_t0 = {arg}\nmethod = {}\nr_db = {}\nbracket = {}\nerror_estimate = {:e}\n",
            a.window.name(),
            if analytic { "closed-form" } else { "numeric" },
            format_db(r_db),
            round_sig(bracket, 10),
            round_sig(error, 3)
        )
    } else {
        let grid = a.ft.expect("clap enforces --ft or --omega-t0").0;
        let evaluation = if analytic { Evaluation::ClosedForm } else { Evaluation::Numeric };
        let curve = QiCurve::new(a.window, n, a.variant, a.scale, evaluation, a.allow_unstable)?;
        let samples = sample_curve(&curve, &grid, &opts)?;
        curves_csv(&[(curve, samples)])
    };
    match &a.out {
        Some(p) => write_file(p, &text),
        None => out.write_all(text.as_bytes()).map_err(io_err),
    }
}

fn lin_db(name: &str, v: f64) -> String {
    format!("{name} = {} ({} dB)\n", round_sig(v, 10), format_db(to_db(v)))
}

pub fn cmd_opa(a: OpaArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut text = String::new();
    let wants_model = a.extremes || a.ft || a.theta.is_some() || a.effective.is_some();
    let model_default = !wants_model && a.ideal_bound.is_none();
    if wants_model || model_default {
        let x = a
            .x
            .ok_or_else(|| CliError::Usage("--x is required for OPA model quantities".into()))?;
        let p = OpaParams::new(x, a.beta, a.w, a.theta.unwrap_or(0.0))?;
        if let Some(theta) = a.theta {
            text.push_str(&format!("theta = {theta}\n"));
            text.push_str(&lin_db("variance", opa::variance(&p)));
        }
        if a.extremes || model_default {
            let sm = opa::s_minus(x, a.beta, a.w)?;
            let sp = opa::s_plus(x, a.beta, a.w)?;
            text.push_str(&lin_db("s_minus", sm));
            text.push_str(&lin_db("s_plus", sp));
            text.push_str(&lin_db("product", sm * sp));
        }
        if a.ft || a.extremes || model_default {
            text.push_str(&format!("ft = {}\n", round_sig(opa::squeezed_fraction(x, a.beta, a.w)?, 10)));
        }
        if let Some(w_max) = a.effective {
            let fte = opa::effective_ft(x, a.beta, w_max, a.kernel.into(), &qi_core::QuadratureConfig::default())?;
            text.push_str(&format!(
                "effective_ft = {} (kernel {}, w_max {w_max})\n",
                round_sig(fte, 10),
                FteKernel::from(a.kernel).name()
            ));
        }
    }
    if let Some(ft) = a.ideal_bound {
        let s = if ft > 0.5 && ft <= 1.0 {
            1.0
        } else {
            opa::ideal_bound(ft)?
        };
        text.push_str(&lin_db("ideal_bound", s));
    }
    out.write_all(text.as_bytes()).map_err(io_err)
}

fn parse_curves(ids: &[String], allow_unstable: bool) -> Result<Vec<QiCurve>, CliError> {
    let curves = ids
        .iter()
        .filter(|s| !s.trim().is_empty())
        .map(|id| QiCurve::parse(id, allow_unstable).map_err(CliError::from))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(curves)
}

fn summary(report: &AnalysisReport) -> String {
    let n = report.per_record.len();
    let mut s = format!("records: {n} classified, {} skipped\n", report.skipped.len());
    if let Some(rms) = report.method_agreement_rms {
        s.push_str(&format!("F_T method agreement (rms relative): {rms}\n"));
    }
    let mut ids: Vec<String> = report
        .per_record
        .first()
        .map(|r| r.violations.keys().cloned().collect())
        .unwrap_or_default();
    for id in report.fitted_scales.keys() {
        if !ids.contains(id) {
            ids.push(id.clone());
        }
    }
    s.push_str(&format!(
        "{:<28} {:>10} {:>12} {:>11} {:>11}\n",
        "curve", "violations", "within-error", "k_envelope", "k_lsq"
    ));
    for id in &ids {
        let violations = report.violation_count(id);
        let within = report
            .per_record
            .iter()
            .filter(|r| r.bands.get(id) == Some(&BandState::WithinError))
            .count();
        let (ke, kl) = report
            .fitted_scales
            .get(id)
            .map(|f| (f.envelope.to_string(), f.least_squares.to_string()))
            .unwrap_or(("-".into(), "-".into()));
        s.push_str(&format!("{id:<28} {:>10} {within:>12} {ke:>11} {kl:>11}\n", format!("{violations}/{n}")));
    }
    if report.per_record.first().and_then(|r| r.ideal_opa_exceeded).is_some() {
        let exceeded = report
            .per_record
            .iter()
            .filter(|r| r.ideal_opa_exceeded == Some(true))
            .count();
        s.push_str(&format!("{IDEAL_OPA_ID:<28} {:>10}\n", format!("{exceeded}/{n}")));
    }
    s
}

pub fn cmd_analyze(a: AnalyzeArgs, settings: &Settings, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let curves = parse_curves(&a.curves, a.allow_unstable)?;
    let file = File::open(&a.data).map_err(|source| CliError::Io {
        context: format!("opening {}", a.data.display()),
        source,
    })?;
    let records = read_dataset(file)?;
    let opts = options(settings);
    let mut report = classify(&records, &curves, !a.no_ideal, &opts)?;
    if a.fit {
        fit_report_scales(&mut report, &curves, &opts)?;
    }
    for s in &report.skipped {
        writeln!(err, "warning: skipped record `{}`: {}", s.id, s.reason).map_err(io_err)?;
    }
    if report.per_record.is_empty() {
        writeln!(err, "warning: no classifiable records in {}", a.data.display()).map_err(io_err)?;
        if a.fit {
            writeln!(err, "warning: no points to fit scales to").map_err(io_err)?;
        }
    }
    let json = report.to_json();
    match &a.report {
        Some(p) => {
            write_file(p, &json)?;
            out.write_all(summary(&report).as_bytes()).map_err(io_err)
        }
        None => {
            out.write_all(json.as_bytes()).map_err(io_err)?;
            out.write_all(b"\n").map_err(io_err)?;
            err.write_all(summary(&report).as_bytes()).map_err(io_err)
        }
    }
}

pub fn load_report(path: &Path) -> Result<AnalysisReport, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        context: format!("reading {}", path.display()),
        source,
    })?;
    AnalysisReport::from_json(&text).map_err(|e| CliError::Data(format!("report {}: {e}", path.display())))
}

pub fn cmd_plot(a: PlotArgs, settings: &Settings, err: &mut dyn Write) -> Result<(), CliError> {
    let report = a.report.as_deref().map(load_report).transpose()?;
    let spec = match a.fig {
        Some(fig) => {
            if !a.curve.is_empty() {
                return Err(CliError::Usage("--curve cannot be combined with --fig".into()));
            }
            plot::figure(fig, settings, report.as_ref())?
        }
        None => plot::custom(&parse_curves(&a.curve, a.allow_unstable)?, a.ideal, settings, report.as_ref())?,
    };
    let svg = plot::render_svg(&spec)?;
    write_file(&a.out, &svg)?;
    writeln!(err, "wrote {}", a.out.display()).map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spec() {
        assert_eq!(parse_grid("0.01:1.0:0.01").unwrap().0.len(), 100);
        assert_eq!(parse_grid("0.05:0.5:0.05").unwrap().0.len(), 10);
        assert!(parse_grid("0:1:0.1").is_err());
        assert!(parse_grid("0.1:1.2:0.1").is_err());
        assert!(parse_grid("0.1:1").is_err());
        assert!(parse_grid("a:b:c").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage(String::new()).exit_code(), 2);
        assert_eq!(CliError::Core(QiError::UnstableWindow).exit_code(), 2);
        assert_eq!(CliError::Core(QiError::ZeroWeight).exit_code(), 3);
        assert_eq!(
            CliError::Core(QiError::Data {
                line: 3,
                message: String::new()
            })
            .exit_code(),
            4
        );
        assert_eq!(CliError::Invariant(String::new()).exit_code(), 3);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
