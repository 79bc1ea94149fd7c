//! Command-line front end.
//!
//! ```text
//! bilattice {simulate|scan-phase|solve|transport} --config FILE [--output FILE] [options] [--section.key VALUE ...]
//! ```
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration or usage error,
//! 3 integrator failure (edge leak, step underflow), 4 solver infeasibility.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::conditions::{solve_cdt_delta_pair, solve_condition, ConditionError, ConditionKind};
use crate::config::{ConfigError, RunConfig, SolveKind};
use crate::dynamics::{integrate_averaged, integrate_full, DynamicsError, Picture, Trajectory, WaveState};
use crate::effective::{analytic_amplitudes, rates_for_site, ChainRates, EffectiveError, EffectiveRates};
use crate::export::{write_json, write_scan_csv, write_trajectory_csv, ScanRow};
use crate::lattice::{LatticeError, Parity};
use crate::transport::{build_ratchet_schedule_with, run_protocol, Model, SegmentSummary, TransportError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INTEGRATOR: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("integration failed: {0}")]
    Integrator(String),
    #[error("no solution: {0}")]
    Solver(#[from] ConditionError),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => EXIT_USAGE,
            CliError::Integrator(_) => EXIT_INTEGRATOR,
            CliError::Solver(_) => EXIT_SOLVER,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::EdgeLeak { .. } | DynamicsError::Stiffness(_) => CliError::Integrator(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<EffectiveError> for CliError {
    fn from(e: EffectiveError) -> Self {
        match e {
            EffectiveError::EdgeLeak { .. } => CliError::Integrator(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<LatticeError> for CliError {
    fn from(e: LatticeError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<TransportError> for CliError {
    fn from(e: TransportError) -> Self {
        match e {
            TransportError::Dynamics(d) => d.into(),
            TransportError::Lattice(l) => l.into(),
            TransportError::Schedule(s) => CliError::Usage(s),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "bilattice",
    version,
    about = "Driven bipartite lattice: dynamics, phase conditions and ratchet transport"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Time evolution from a single site; writes populations per sample.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value_t = SimModel::Averaged)]
        model: SimModel,
    },
    /// Even-site effective rates across a phase range.
    ScanPhase {
        #[command(flatten)]
        common: CommonArgs,
        /// Worker threads; rows are always written in phase order.
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Solve for a CDT, dimerising or crossing phase; writes one JSON object.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        /// Overrides `solve.kind`.
        #[arg(long)]
        kind: Option<SolveKind>,
    },
    /// Phase-switched ratchet; writes the trajectory and a JSON summary.
    Transport {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value_t = TransportModel::Averaged)]
        model: TransportModel,
        /// Overrides `transport.cycles`.
        #[arg(long)]
        cycles: Option<usize>,
        /// Summary path; defaults to `<output>.summary.json` when an output file is given.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Data goes to standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Print the effective configuration (after overrides) and exit.
    #[arg(long)]
    pub print_config: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimModel {
    Full,
    Averaged,
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransportModel {
    Full,
    Averaged,
}

/// A `section.key` override and its raw value.
pub type Override = (String, String);

/// Splits `--section.key value` and `--section.key=value` overrides out of
/// the argument list; everything else is left for clap.
pub fn split_overrides(args: Vec<String>) -> Result<(Vec<String>, Vec<Override>), CliError> {
    let mut rest = Vec::with_capacity(args.len());
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--").filter(|f| f.contains('.')) else {
            rest.push(arg);
            continue;
        };
        match flag.split_once('=') {
            Some((key, value)) => overrides.push((key.to_string(), value.to_string())),
            None => {
                let value = it.next().ok_or_else(|| CliError::Usage(format!("--{flag} needs a value")))?;
                overrides.push((flag.to_string(), value));
            }
        }
    }
    Ok((rest, overrides))
}

/// Runs the tool with process stdout and stderr and returns the exit code.
pub fn main_with_args<I: IntoIterator<Item = OsString>>(args: I) -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    run(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run<I: IntoIterator<Item = OsString>>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let args: Vec<String> = match args.into_iter().map(|a| a.into_string()).collect() {
        Ok(a) => a,
        Err(bad) => {
            let _ = writeln!(stderr, "error: argument {bad:?} is not valid UTF-8");
            return EXIT_USAGE;
        }
    };
    let (args, overrides) = match split_overrides(args) {
        Ok(v) => v,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(stderr, "{text}") } else { write!(stdout, "{text}") };
            return code;
        }
    };
    match execute(&cli.command, &overrides, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn common(command: &Command) -> &CommonArgs {
    match command {
        Command::Simulate { common, .. }
        | Command::ScanPhase { common, .. }
        | Command::Solve { common, .. }
        | Command::Transport { common, .. } => common,
    }
}

/// Loads the config file and applies overrides in order.
pub fn load_config(path: &Path, overrides: &[(String, String)]) -> Result<RunConfig, ConfigError> {
    let mut config = RunConfig::load(path)?;
    for (key, value) in overrides {
        config.apply_override(key, value)?;
    }
    Ok(config)
}

pub fn execute(
    command: &Command,
    overrides: &[(String, String)],
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let args = common(command);
    let config = load_config(&args.config, overrides)?;
    if args.print_config {
        write!(stdout, "{}", config.to_toml_string())?;
        return Ok(());
    }
    config.validate()?;
    match command {
        Command::Simulate { model, .. } => {
            let traj = simulate(&config, *model)?;
            let geom = config.geometry()?;
            emit(args.output.as_deref(), stdout, |w| write_trajectory_csv(w, &geom, &traj))
        }
        Command::ScanPhase { workers, .. } => {
            let rows = scan_phase(&config, *workers)?;
            emit(args.output.as_deref(), stdout, |w| write_scan_csv(w, &rows))
        }
        Command::Solve { kind, .. } => {
            let record = solve(&config, kind.unwrap_or(config.solve.kind))?;
            emit(args.output.as_deref(), stdout, |w| write_json(w, &record))
        }
        Command::Transport { model, cycles, summary, .. } => {
            let cycles = cycles.unwrap_or(config.transport.cycles);
            let (traj, report) = transport(&config, *model, cycles)?;
            for warning in &report.warnings {
                writeln!(stderr, "warning: {warning}")?;
            }
            let geom = config.geometry()?;
            emit(args.output.as_deref(), stdout, |w| write_trajectory_csv(w, &geom, &traj))?;
            let summary_path = summary.clone().or_else(|| {
                args.output.as_ref().map(|p| {
                    let mut s = p.clone().into_os_string();
                    s.push(".summary.json");
                    PathBuf::from(s)
                })
            });
            match summary_path {
                Some(p) => emit(Some(&p), stdout, |w| write_json(w, &report)),
                None => Ok(()),
            }
        }
    }
}

fn emit<F>(path: Option<&Path>, stdout: &mut dyn Write, write: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", p.display())))?;
            let mut w = BufWriter::new(file);
            write(&mut w)?;
            w.flush()?;
        }
        None => {
            write(stdout)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

/// Trajectory of `simulate` from `simulate.start_site`.
pub fn simulate(config: &RunConfig, model: SimModel) -> Result<Trajectory, CliError> {
    let geom = config.geometry()?;
    let drive = config.drive()?;
    let cfg = &config.integrator;
    let start = config.simulate.start_site;
    let t_end = config.simulate.t_end;
    let traj = match model {
        SimModel::Full => {
            integrate_full(&geom, &drive, &WaveState::localized(&geom, start, Picture::Full)?, t_end, cfg)?
        }
        SimModel::Averaged => {
            let chain = ChainRates::from_geometry(&geom, &drive);
            integrate_averaged(&chain, &WaveState::localized(&geom, start, Picture::Averaged)?, t_end, cfg)?
        }
        SimModel::Analytic => {
            geom.index_of(start)?;
            let chain = ChainRates::from_geometry(&geom, &drive);
            let states = cfg
                .sample_times(0.0, t_end)
                .into_iter()
                .map(|t| {
                    let amps = analytic_amplitudes(&chain, start, t, &geom)?;
                    Ok(WaveState { t, n_min: geom.n_min(), amps, picture: Picture::Averaged })
                })
                .collect::<Result<Vec<_>, EffectiveError>>()?;
            Trajectory { states }
        }
    };
    Ok(traj)
}

/// Even-site rates on `scan.steps` evenly spaced phases, endpoints included.
pub fn scan_phase(config: &RunConfig, workers: usize) -> Result<Vec<ScanRow>, CliError> {
    if workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let drive = config.drive()?;
    let gaps = config.geometry()?.gaps(&drive);
    let scan = config.scan;
    let phis: Vec<f64> = (0..scan.steps)
        .map(|i| {
            if i + 1 == scan.steps {
                scan.phi_max
            } else {
                scan.phi_min + (scan.phi_max - scan.phi_min) * i as f64 / (scan.steps - 1) as f64
            }
        })
        .collect();
    let row = |&phi: &f64| ScanRow { phi, rates: rates_for_site(&drive.with_phi(phi), &gaps, Parity::Even) };
    if workers == 1 {
        return Ok(phis.iter().map(row).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(|| phis.par_iter().map(row).collect()))
}

/// JSON record written by `solve`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveRecord {
    pub kind: SolveKind,
    pub phi: f64,
    pub rates: EffectiveRates,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rabi_freq: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_period: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_b: Option<f64>,
}

pub fn solve(config: &RunConfig, kind: SolveKind) -> Result<SolveRecord, CliError> {
    let drive = config.drive()?;
    let gaps = config.geometry()?.gaps(&drive);
    let modulation = config.modulation();
    let s = &config.solve;
    match kind.condition() {
        Some(condition) => {
            let sol = solve_condition(&modulation, &gaps, condition, (s.phi_lo, s.phi_hi))?;
            Ok(SolveRecord {
                kind,
                phi: sol.phi,
                rates: sol.rates,
                rabi_freq: sol.rabi_freq,
                half_period: sol.half_period,
                delta_a: None,
                delta_b: None,
            })
        }
        None => {
            let pair = solve_cdt_delta_pair(
                modulation.j0,
                modulation.delta_j,
                modulation.m,
                gaps.delta_a,
                (s.delta_b_lo, s.delta_b_hi),
            )?;
            let solved = crate::lattice::GapArguments { delta_a: pair.delta_a, delta_b: pair.delta_b };
            Ok(SolveRecord {
                kind,
                phi: pair.phi0,
                rates: rates_for_site(&drive.with_phi(pair.phi0), &solved, Parity::Even),
                rabi_freq: None,
                half_period: None,
                delta_a: Some(pair.delta_a),
                delta_b: Some(pair.delta_b),
            })
        }
    }
}

/// Summary JSON written next to the transport trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportReport {
    pub model: &'static str,
    pub cycles: usize,
    pub phi1: f64,
    pub phi2: f64,
    #[serde(rename = "T1")]
    pub t1: f64,
    #[serde(rename = "T2")]
    pub t2: f64,
    pub t_total: f64,
    pub displacement: f64,
    pub displacement_per_cycle: f64,
    pub warnings: Vec<String>,
    pub segments: Vec<SegmentSummary>,
}

pub fn transport(
    config: &RunConfig,
    model: TransportModel,
    cycles: usize,
) -> Result<(Trajectory, TransportReport), CliError> {
    if cycles == 0 {
        return Err(CliError::Usage("cycles must be at least 1".into()));
    }
    let geom = config.geometry()?;
    let drive = config.drive()?;
    let gaps = geom.gaps(&drive);
    let modulation = config.modulation();
    let bracket = (config.solve.phi_lo, config.solve.phi_hi);
    let sol1 = solve_condition(&modulation, &gaps, ConditionKind::DlBackward, bracket)?;
    let sol2 = solve_condition(&modulation, &gaps, ConditionKind::DlForward, bracket)?;
    let schedule = build_ratchet_schedule_with(&sol1, &sol2, cycles, &config.transport.options())?;
    let (model, name) = match model {
        TransportModel::Full => (Model::Full, "full"),
        TransportModel::Averaged => (Model::Averaged, "averaged"),
    };
    let run = run_protocol(&geom, &drive, &schedule, model, config.transport.start_site, &config.integrator)?;
    let report = TransportReport {
        model: name,
        cycles,
        phi1: sol1.phi,
        phi2: sol2.phi,
        t1: sol1.half_period.expect("dimer solutions carry a half-period"),
        t2: sol2.half_period.expect("dimer solutions carry a half-period"),
        t_total: schedule.t_total(),
        displacement: run.displacement,
        displacement_per_cycle: run.displacement / cycles as f64,
        warnings: run.warnings,
        segments: run.segments,
    };
    Ok((run.trajectory, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn overrides_are_split_out() {
        let (rest, ov) = split_overrides(strings(&[
            "bilattice",
            "solve",
            "--config",
            "c.toml",
            "--drive.phi",
            "1.9",
            "--geometry.a=3",
            "--kind",
            "cdt",
        ]))
        .unwrap();
        assert_eq!(rest, strings(&["bilattice", "solve", "--config", "c.toml", "--kind", "cdt"]));
        assert_eq!(ov, vec![("drive.phi".into(), "1.9".into()), ("geometry.a".into(), "3".into())]);
        assert!(split_overrides(strings(&["x", "--drive.phi"])).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage(String::new()).exit_code(), 2);
        assert_eq!(CliError::Integrator(String::new()).exit_code(), 3);
        assert_eq!(CliError::Solver(ConditionError::NoModulation).exit_code(), 4);
        let leak = DynamicsError::EdgeLeak { t: 0.0, leak: 1.0, tol: 1e-6 };
        assert_eq!(CliError::from(leak).exit_code(), 3);
        assert_eq!(CliError::from(TransportError::Schedule("x".into())).exit_code(), 2);
    }
}
