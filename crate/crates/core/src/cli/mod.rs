//! The `nmkerr` command-line front end.
//!
//! Every command writes CSV files (with a units-bearing header row) and a
//! `manifest.json` into `--out`; `--plot` adds SVG renderings. All frequencies,
//! rates and times in the output are in units of `omega_a`.

mod commands;
mod presets;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::config::{ModelSpec, ResolvedModel, Units};

pub use presets::Preset;

#[derive(Debug, Parser)]
#[command(name = "nmkerr", version, about = "Kerr resonators with frequency-dependent loss")]
pub struct Cli {
    /// Model description (JSON).
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Also render SVG plots.
    #[arg(long, global = true)]
    pub plot: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Units of the model file and of numeric arguments.
    #[arg(long, global = true, value_enum)]
    pub units: Option<UnitsArg>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UnitsArg {
    Absolute,
    Normalized,
}

impl From<UnitsArg> for Units {
    fn from(u: UnitsArg) -> Self {
        match u {
            UnitsArg::Absolute => Units::Absolute,
            UnitsArg::Normalized => Units::Normalized,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate K_l and K_c over a frequency window.
    KernelScan(KernelScanArgs),
    /// Input-output curve: steady-state roots versus pump flux.
    Sweep(SweepArgs),
    /// Quadrature variances and Fano factor of steady states.
    Noise(NoiseArgs),
    /// Quadrature noise spectra at one steady state.
    NoiseSpectrum(SpectrumArgs),
    /// Stability classes over a (pump frequency, photon number) grid.
    PhaseDiagram(PhaseArgs),
    /// Time-domain simulation from a steady state or the vacuum.
    Transient(TransientArgs),
    /// Pulsing diagnostics of a trajectory CSV.
    Diagnose(DiagnoseArgs),
    /// Kramers-Kronig, sum rule, causality and trace checks for a model.
    Validate(ValidateArgs),
    /// Regenerate a figure from a built-in preset.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
pub struct KernelScanArgs {
    #[arg(long)]
    pub omega_min: Option<f64>,
    #[arg(long)]
    pub omega_max: Option<f64>,
    #[arg(long, default_value_t = 2001)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub omega_p: f64,
    #[arg(long, default_value_t = 0.0)]
    pub flux_min: f64,
    #[arg(long)]
    pub flux_max: f64,
    #[arg(long, default_value_t = 401)]
    pub points: usize,
    /// Logarithmic flux grid (needs flux-min > 0).
    #[arg(long)]
    pub log: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseMethodArg {
    Exact,
    Adiabatic,
    Both,
}

#[derive(Debug, Args)]
pub struct NoiseArgs {
    #[arg(long)]
    pub omega_p: f64,
    /// Single photon number.
    #[arg(long, conflicts_with_all = ["flux", "n_min"])]
    pub n: Option<f64>,
    /// Pump flux; one row per steady-state root.
    #[arg(long, conflicts_with = "n_min")]
    pub flux: Option<f64>,
    /// Logarithmic photon-number grid.
    #[arg(long, requires = "n_max")]
    pub n_min: Option<f64>,
    #[arg(long)]
    pub n_max: Option<f64>,
    #[arg(long, default_value_t = 101)]
    pub points: usize,
    #[arg(long, value_enum, default_value_t = NoiseMethodArg::Both)]
    pub method: NoiseMethodArg,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub omega_p: f64,
    #[arg(long)]
    pub n: f64,
    /// Half-width of the sideband-frequency window.
    #[arg(long)]
    pub span: Option<f64>,
    #[arg(long, default_value_t = 4001)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct PhaseArgs {
    /// `min:max` pump frequency range.
    #[arg(long, value_parser = parse_range)]
    pub omega_p_range: (f64, f64),
    /// `min:max` photon-number range (log-spaced).
    #[arg(long, value_parser = parse_range)]
    pub n_range: (f64, f64),
    /// `N` or `NxM` grid points (pump x photon number).
    #[arg(long, value_parser = parse_resolution, default_value = "200")]
    pub resolution: (usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    TwoMode,
    SplitStep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StartArg {
    /// The steady state at the target photon number (or the highest root).
    Steady,
    Vacuum,
}

#[derive(Debug, Args)]
pub struct TransientArgs {
    #[arg(long)]
    pub omega_p: f64,
    #[arg(long, required_unless_present = "target_n", conflicts_with = "target_n")]
    pub flux: Option<f64>,
    /// Choose the flux that holds this photon number.
    #[arg(long)]
    pub target_n: Option<f64>,
    #[arg(long)]
    pub t_end: f64,
    #[arg(long)]
    pub dt: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::TwoMode)]
    pub method: MethodArg,
    /// Relative perturbation of the initial field.
    #[arg(long, default_value_t = 1e-6)]
    pub seed_perturbation: f64,
    #[arg(long, value_enum, default_value_t = StartArg::Steady)]
    pub start: StartArg,
    /// Trailing fraction of the run used for diagnostics.
    #[arg(long, default_value_t = 0.5)]
    pub window_fraction: f64,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Trajectory CSV as written by `transient`.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub window_fraction: f64,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Pump frequencies for the trace check (F.W. only).
    #[arg(long, value_delimiter = ',', default_values_t = [0.99, 1.0, 1.02])]
    pub trace_omega_p: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub preset: Preset,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or("expected min:max")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(format!("need finite min < max, got {a}:{b}"));
    }
    Ok((a, b))
}

fn parse_resolution(s: &str) -> Result<(usize, usize), String> {
    let parse = |t: &str| -> Result<usize, String> {
        let v: usize = t.trim().parse().map_err(|e| format!("{e}"))?;
        if v < 2 {
            return Err("resolution must be at least 2".into());
        }
        Ok(v)
    };
    match s.split_once(['x', 'X']) {
        Some((a, b)) => Ok((parse(a)?, parse(b)?)),
        None => parse(s).map(|v| (v, v)),
    }
}

/// Failure categories with their exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input or unusable output location (exit 2).
    #[error("{0}")]
    Config(String),
    /// A required value could not be computed (exit 3).
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numerical(_) => "numerical",
        }
    }
}

pub(crate) fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

pub(crate) fn numerical_err(e: impl std::fmt::Display) -> CliError {
    CliError::Numerical(e.to_string())
}

/// Output directory, collected artifacts and manifest parameters for one run.
pub(crate) struct Ctx {
    out: PathBuf,
    plot: bool,
    files: Vec<String>,
    params: Map<String, Value>,
}

impl Ctx {
    fn new(out: &Path, plot: bool) -> Result<Self, CliError> {
        fs::create_dir_all(out).map_err(|e| config_err(format!("cannot create {}: {e}", out.display())))?;
        Ok(Self {
            out: out.to_path_buf(),
            plot,
            files: Vec::new(),
            params: Map::new(),
        })
    }

    pub(crate) fn param(&mut self, key: &str, value: impl Serialize) {
        self.params
            .insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.out.join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| config_err(format!("cannot create {}: {e}", dir.display())))?;
        }
        fs::write(&path, bytes).map_err(|e| config_err(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub(crate) fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(config_err)?;
        for r in rows {
            w.write_record(r).map_err(config_err)?;
        }
        let bytes = w.into_inner().map_err(config_err)?;
        self.write(name, &bytes)
    }

    pub(crate) fn svg(&mut self, name: &str, svg: impl FnOnce() -> String) -> Result<(), CliError> {
        if self.plot {
            self.write(name, svg().as_bytes())?;
        }
        Ok(())
    }

    pub(crate) fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(config_err)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// A context writing into a subdirectory, sharing nothing with `self`.
    fn child(&self, sub: &str, plot: bool) -> Result<Self, CliError> {
        Self::new(&self.out.join(sub), plot)
    }

    fn finish(mut self, command: &str, started: Instant) -> Result<(), CliError> {
        let manifest = json!({
            "tool": "nmkerr",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "params": Value::Object(std::mem::take(&mut self.params)),
            "files": self.files,
            "wall_time_s": started.elapsed().as_secs_f64(),
        });
        let text = serde_json::to_string_pretty(&manifest).map_err(config_err)? + "\n";
        let path = self.out.join("manifest.json");
        fs::write(&path, text).map_err(|e| config_err(format!("cannot write {}: {e}", path.display())))
    }
}

/// Number formatting used in every CSV: shortest round-trip representation.
pub(crate) fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else if v == 0.0 || (1e-4..1e7).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn load_model(cli: &Cli) -> Result<ResolvedModel, CliError> {
    let path = cli
        .model
        .as_ref()
        .ok_or_else(|| CliError::Config("this command needs --model <file.json>".into()))?;
    let spec = ModelSpec::load(path).map_err(config_err)?;
    spec.resolve(cli.units.map(Units::from)).map_err(config_err)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::KernelScan(_) => "kernel-scan",
        Command::Sweep(_) => "sweep",
        Command::Noise(_) => "noise",
        Command::NoiseSpectrum(_) => "noise-spectrum",
        Command::PhaseDiagram(_) => "phase-diagram",
        Command::Transient(_) => "transient",
        Command::Diagnose(_) => "diagnose",
        Command::Validate(_) => "validate",
        Command::Reproduce(_) => "reproduce",
    }
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let started = Instant::now();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        // Fails only if a pool already exists, e.g. when called twice in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let mut ctx = Ctx::new(&cli.out, cli.plot)?;
    ctx.param("threads", cli.threads);
    let result = match &cli.command {
        Command::Diagnose(a) => commands::diagnose(&mut ctx, a),
        Command::Reproduce(a) => {
            let mut sub = ctx.child(a.preset.name(), true)?;
            ctx.param("preset", a.preset.name());
            let r = presets::run(&mut sub, a.preset);
            sub.finish(&format!("reproduce {}", a.preset.name()), started)?;
            r
        }
        cmd => {
            let model = load_model(cli)?;
            ctx.param("model", &model.spec);
            ctx.param("units", model.units);
            ctx.param("system", &model.system);
            match cmd {
                Command::KernelScan(a) => commands::kernel_scan(&mut ctx, &model, a),
                Command::Sweep(a) => commands::sweep(&mut ctx, &model, a),
                Command::Noise(a) => commands::noise(&mut ctx, &model, a),
                Command::NoiseSpectrum(a) => commands::noise_spectrum(&mut ctx, &model, a),
                Command::PhaseDiagram(a) => commands::phase(&mut ctx, &model, a),
                Command::Transient(a) => commands::transient(&mut ctx, &model, a),
                Command::Validate(a) => commands::validate(&mut ctx, &model, a),
                Command::Diagnose(_) | Command::Reproduce(_) => unreachable!(),
            }
        }
    };
    ctx.finish(command_name(&cli.command), started)?;
    result
}

/// Entry point for the binary: parses `std::env::args`, runs, and reports errors
/// as JSON on standard error.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = json!({ "error": e.kind(), "message": e.to_string(), "exit_code": e.exit_code() });
            eprintln!("{body}");
            ExitCode::from(e.exit_code())
        }
    }
}
