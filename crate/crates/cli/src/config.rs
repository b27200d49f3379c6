//! Run files, command-line flags and their merge into a validated [`RunConfig`].
//!
//! A run file is TOML. Every table rejects unknown keys, and flags override
//! the values read from the file.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use clockwork::clock::ClockSystemSpec;
use clockwork::devol::{DeSettings, FreeParameter, Objective, OptimizationProblem};
use clockwork::machines::{linspace, ScatterRanges, SweepAxis};
use clockwork::qops::Tolerances;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "CLOCKWORK_OUT_DIR";

/// Declared in every manifest.
pub const CONFIG_DIALECT: &str = "toml-1.0";

const DEFAULT_SWEEP_POINTS: usize = 61;
const DEFAULT_MAP_POINTS: usize = 41;
const DEFAULT_SAMPLES: usize = 10_000;

#[derive(Parser, Debug, Clone)]
#[command(name = "clockwork", version, about = "Steady states and heat currents of clock-rotor thermal machines")]
pub struct Cli {
    /// TOML run file.
    #[arg(short, long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory [default: $CLOCKWORK_OUT_DIR, else the current directory].
    #[arg(short, long, global = true)]
    pub out: Option<PathBuf>,
    /// Maximum accepted steady-state residual.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub residual_tol: Option<f64>,
    /// Relative singular-value threshold for a degenerate steady state.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub null_space_tol: Option<f64>,
    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Subcommand, Debug, Clone)]
pub enum CommandArgs {
    /// Steady state and heat currents of one machine.
    Steady(SteadyArgs),
    /// Steady-state currents along one parameter axis.
    Sweep(AxisArgs),
    /// Random two-rotor machines.
    Scatter(ScatterArgs),
    /// Cold-bath current over a (K_01, K_02) grid.
    RefrigeratorMap(MapArgs),
    /// Currents against the coupling of the middle bath.
    Switch(GridArgs),
    /// Forward and reversed end-to-end throughput.
    Rectify(AxisArgs),
    /// Differential-evolution search over machine parameters.
    Optimize(OptimizeArgs),
}

impl CommandArgs {
    pub fn name(&self) -> &'static str {
        match self {
            CommandArgs::Steady(_) => "steady",
            CommandArgs::Sweep(_) => "sweep",
            CommandArgs::Scatter(_) => "scatter",
            CommandArgs::RefrigeratorMap(_) => "refrigerator-map",
            CommandArgs::Switch(_) => "switch",
            CommandArgs::Rectify(_) => "rectify",
            CommandArgs::Optimize(_) => "optimize",
        }
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct SteadyArgs {
    /// Also write the jump-channel table.
    #[arg(long)]
    pub channels: bool,
    /// Also write the Liouvillian as (row, col, re, im) triplets.
    #[arg(long)]
    pub superoperator: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisKind {
    Phi,
    Coupling,
    Tau,
    G,
    Temperature,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GridArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub from: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub to: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct AxisArgs {
    #[arg(long, value_enum)]
    pub axis: Option<AxisKind>,
    /// First rotor of a pair axis [default: 0].
    #[arg(long)]
    pub i: Option<usize>,
    /// Second rotor of a pair axis [default: 1].
    #[arg(long)]
    pub j: Option<usize>,
    /// Restrict a tau axis to one rotor.
    #[arg(long)]
    pub rotor: Option<usize>,
    /// Bath of a g or temperature axis [default: 0].
    #[arg(long)]
    pub bath: Option<usize>,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ScatterArgs {
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fix both fields to zero.
    #[arg(long)]
    pub zero_tau: bool,
}

#[derive(Args, Debug, Clone, Default)]
pub struct MapArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub k12_from: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub k12_to: Option<f64>,
    #[arg(long)]
    pub k12_points: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub k13_from: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub k13_to: Option<f64>,
    #[arg(long)]
    pub k13_points: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub stall_iterations: Option<usize>,
}

/// Contents of a run file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<ClockSystemSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steady: Option<SteadySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<AxisSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scatter: Option<ScatterSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refrigerator_map: Option<MapSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switch: Option<GridSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rectify: Option<AxisSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize: Option<OptimizeSection>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteadySection {
    #[serde(default)]
    pub channels: bool,
    #[serde(default)]
    pub superoperator: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<SweepAxis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub zero_tau: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranges: Option<ScatterRanges>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k12: Option<GridSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k13: Option<GridSection>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stall_iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stall_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<Objective>,
    #[serde(default)]
    pub parameters: Vec<FreeParameter>,
}

/// A fully validated run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: &'static str,
    pub output_dir: PathBuf,
    pub tolerances: Tolerances,
    pub job: Job,
    /// The run file after flag overrides; rerunning it reproduces the job.
    pub resolved: RunFile,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Job {
    Steady {
        system: ClockSystemSpec,
        channels: bool,
        superoperator: bool,
    },
    Sweep {
        system: ClockSystemSpec,
        axis: SweepAxis,
        grid: Vec<f64>,
    },
    Scatter {
        samples: usize,
        seed: u64,
        zero_tau: bool,
        ranges: ScatterRanges,
    },
    RefrigeratorMap {
        system: ClockSystemSpec,
        k12: Vec<f64>,
        k13: Vec<f64>,
    },
    Switch {
        system: ClockSystemSpec,
        grid: Vec<f64>,
    },
    Rectify {
        system: ClockSystemSpec,
        sweep: Option<(SweepAxis, Vec<f64>)>,
    },
    Optimize {
        problem: OptimizationProblem,
        settings: DeSettings,
    },
}

impl Job {
    pub fn seed(&self) -> Option<u64> {
        match self {
            Job::Scatter { seed, .. } => Some(*seed),
            Job::Optimize { settings, .. } => Some(settings.seed),
            _ => None,
        }
    }
}

/// Parses a run file. Schema errors carry the dotted key path.
pub fn parse_run_file(text: &str) -> CliResult<RunFile> {
    let de = toml::Deserializer::new(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let msg = inner.message().trim().to_string();
        if path == "." || path.is_empty() {
            CliError::Config(format!("run file: {msg}"))
        } else {
            CliError::Config(format!("run file key `{path}`: {msg}"))
        }
    })
}

pub fn read_run_file(path: &Path) -> CliResult<RunFile> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_run_file(&text)
}

/// Parses command-line arguments (including the program name) into a
/// validated run.
pub fn parse_args<I, T>(args: I) -> CliResult<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    parse_config(&cli)
}

/// Reads the run file named by `--config` (if any) and applies the flags.
pub fn parse_config(cli: &Cli) -> CliResult<RunConfig> {
    let file = match &cli.config {
        Some(path) => read_run_file(path)?,
        None => RunFile::default(),
    };
    let env_dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    resolve(file, cli, env_dir)
}

/// Merges flags into `file` and validates the result. `env_dir` is the
/// fallback output directory.
pub fn resolve(mut file: RunFile, cli: &Cli, env_dir: Option<PathBuf>) -> CliResult<RunConfig> {
    if let Some(out) = &cli.out {
        file.output_dir = Some(out.clone());
    }
    let output_dir = file
        .output_dir
        .clone()
        .or(env_dir)
        .unwrap_or_else(|| PathBuf::from("."));

    let mut tolerances = file.tolerances.unwrap_or_default();
    if let Some(v) = cli.residual_tol {
        tolerances.residual = v;
    }
    if let Some(v) = cli.null_space_tol {
        tolerances.null_space = v;
    }
    if cli.residual_tol.is_some() || cli.null_space_tol.is_some() {
        file.tolerances = Some(tolerances);
    }
    check_tolerances(&tolerances)?;

    let job = match &cli.command {
        CommandArgs::Steady(a) => {
            let sec = file.steady.get_or_insert_with(SteadySection::default);
            sec.channels |= a.channels;
            sec.superoperator |= a.superoperator;
            let (channels, superoperator) = (sec.channels, sec.superoperator);
            Job::Steady {
                system: system(&file)?,
                channels,
                superoperator,
            }
        }
        CommandArgs::Sweep(a) => {
            let sec = file.sweep.get_or_insert_with(AxisSection::default);
            merge_axis(sec, a)?;
            let sec = *sec;
            let axis = sec
                .axis
                .ok_or_else(|| CliError::Config("sweep.axis is required".into()))?;
            let grid = grid_from(
                "sweep",
                GridSection {
                    from: sec.from,
                    to: sec.to,
                    points: sec.points,
                },
                None,
            )?;
            let system = system(&file)?;
            check_axis(&system, axis, "sweep.axis")?;
            Job::Sweep { system, axis, grid }
        }
        CommandArgs::Scatter(a) => {
            let sec = file.scatter.get_or_insert_with(ScatterSection::default);
            if a.samples.is_some() {
                sec.samples = a.samples;
            }
            if a.seed.is_some() {
                sec.seed = a.seed;
            }
            sec.zero_tau |= a.zero_tau;
            let samples = sec.samples.unwrap_or(DEFAULT_SAMPLES);
            if samples == 0 {
                return Err(CliError::Config("scatter.samples must be at least 1".into()));
            }
            let seed = sec
                .seed
                .ok_or_else(|| CliError::Config("scatter.seed is required".into()))?;
            let ranges = sec.ranges.unwrap_or_default();
            check_ranges(&ranges)?;
            Job::Scatter {
                samples,
                seed,
                zero_tau: sec.zero_tau,
                ranges,
            }
        }
        CommandArgs::RefrigeratorMap(a) => {
            let sec = file.refrigerator_map.get_or_insert_with(MapSection::default);
            let k12 = sec.k12.get_or_insert_with(GridSection::default);
            override_grid(k12, a.k12_from, a.k12_to, a.k12_points);
            let k12 = *k12;
            let k13 = sec.k13.get_or_insert_with(GridSection::default);
            override_grid(k13, a.k13_from, a.k13_to, a.k13_points);
            let k13 = *k13;
            let window = Some((-30.0, 0.0, DEFAULT_MAP_POINTS));
            let k12 = grid_from("refrigerator_map.k12", k12, window)?;
            let k13 = grid_from("refrigerator_map.k13", k13, window)?;
            let system = system(&file)?;
            if system.n_rotors != 3 {
                return Err(CliError::Config("refrigerator-map needs system.n_rotors = 3".into()));
            }
            Job::RefrigeratorMap { system, k12, k13 }
        }
        CommandArgs::Switch(a) => {
            let sec = file.switch.get_or_insert_with(GridSection::default);
            override_grid(sec, a.from, a.to, a.points);
            let grid = grid_from("switch", *sec, Some((0.0, 2.0, DEFAULT_SWEEP_POINTS)))?;
            if grid.iter().any(|&g| g < 0.0) {
                return Err(CliError::Config("switch grid values must be non-negative".into()));
            }
            let system = system(&file)?;
            if !system.baths.iter().any(|b| b.rotor == 1) {
                return Err(CliError::Config("switch needs a bath on rotor 1 in system.baths".into()));
            }
            Job::Switch { system, grid }
        }
        CommandArgs::Rectify(a) => {
            let sec = file.rectify.get_or_insert_with(AxisSection::default);
            merge_axis(sec, a)?;
            let sec = *sec;
            let system = system(&file)?;
            let sweep = match sec.axis {
                Some(axis) => {
                    check_axis(&system, axis, "rectify.axis")?;
                    let grid = grid_from(
                        "rectify",
                        GridSection {
                            from: sec.from,
                            to: sec.to,
                            points: sec.points,
                        },
                        None,
                    )?;
                    Some((axis, grid))
                }
                None if sec.from.is_some() || sec.to.is_some() || sec.points.is_some() => {
                    return Err(CliError::Config("rectify grid given without rectify.axis".into()));
                }
                None => None,
            };
            Job::Rectify { system, sweep }
        }
        CommandArgs::Optimize(a) => {
            let sec = file.optimize.get_or_insert_with(OptimizeSection::default);
            if a.seed.is_some() {
                sec.seed = a.seed;
            }
            if a.max_iterations.is_some() {
                sec.max_iterations = a.max_iterations;
            }
            if a.stall_iterations.is_some() {
                sec.stall_iterations = a.stall_iterations;
            }
            let sec = sec.clone();
            let defaults = DeSettings::default();
            let settings = DeSettings {
                max_iterations: sec.max_iterations.unwrap_or(defaults.max_iterations),
                stall_iterations: sec.stall_iterations.unwrap_or(defaults.stall_iterations),
                stall_tolerance: sec.stall_tolerance.unwrap_or(defaults.stall_tolerance),
                seed: sec
                    .seed
                    .ok_or_else(|| CliError::Config("optimize.seed is required".into()))?,
            };
            if settings.max_iterations == 0 {
                return Err(CliError::Config("optimize.max_iterations must be at least 1".into()));
            }
            if !(settings.stall_tolerance.is_finite() && settings.stall_tolerance >= 0.0) {
                return Err(CliError::Config("optimize.stall_tolerance must be finite and non-negative".into()));
            }
            let objective = sec
                .objective
                .ok_or_else(|| CliError::Config("optimize.objective is required".into()))?;
            if sec.parameters.is_empty() {
                return Err(CliError::Config("optimize.parameters must list at least one parameter".into()));
            }
            let problem = OptimizationProblem {
                base: system(&file)?,
                parameters: sec.parameters,
                objective,
                tolerances,
            };
            problem
                .validate()
                .map_err(|e| CliError::Config(format!("optimize: {e}")))?;
            Job::Optimize { problem, settings }
        }
    };
    Ok(RunConfig {
        command: cli.command.name(),
        output_dir,
        tolerances,
        job,
        resolved: file,
    })
}

fn system(file: &RunFile) -> CliResult<ClockSystemSpec> {
    let spec = file
        .system
        .clone()
        .ok_or_else(|| CliError::Config("the [system] table is required".into()))?;
    spec.validate()
        .map_err(|e| CliError::Config(format!("system.{}", strip_prefix(&e.to_string()))))?;
    Ok(spec)
}

/// Drops the error-kind prefix so the message starts at the offending key.
fn strip_prefix(msg: &str) -> &str {
    msg.split_once(": ").map_or(msg, |(_, rest)| rest)
}

fn check_tolerances(t: &Tolerances) -> CliResult<()> {
    let fields = [
        ("hermitian", t.hermitian),
        ("trace", t.trace),
        ("positivity", t.positivity),
        ("log_floor", t.log_floor),
        ("residual", t.residual),
        ("null_space", t.null_space),
        ("trajectory_positivity", t.trajectory_positivity),
    ];
    for (name, v) in fields {
        if !(v.is_finite() && v > 0.0) {
            return Err(CliError::Config(format!("tolerances.{name} = {v} must be positive")));
        }
    }
    Ok(())
}

fn check_ranges(r: &ScatterRanges) -> CliResult<()> {
    let fields = [
        ("coupling", r.coupling),
        ("phase", r.phase),
        ("tau", r.tau),
        ("g", r.g),
        ("temperatures", r.temperatures),
    ];
    for (name, (lo, hi)) in fields {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(CliError::Config(format!("scatter.ranges.{name} = [{lo}, {hi}] is not a valid range")));
        }
    }
    if r.g.0 <= 0.0 || r.temperatures.0 <= 0.0 {
        return Err(CliError::Config("scatter.ranges.g and temperatures must be positive".into()));
    }
    Ok(())
}

fn check_axis(spec: &ClockSystemSpec, axis: SweepAxis, key: &str) -> CliResult<()> {
    let mut probe = spec.clone();
    axis.apply(&mut probe, 0.0)
        .map_err(|e| CliError::Config(format!("{key}: {}", strip_prefix(&e.to_string()))))
}

fn override_grid(sec: &mut GridSection, from: Option<f64>, to: Option<f64>, points: Option<usize>) {
    if from.is_some() {
        sec.from = from;
    }
    if to.is_some() {
        sec.to = to;
    }
    if points.is_some() {
        sec.points = points;
    }
}

fn merge_axis(sec: &mut AxisSection, a: &AxisArgs) -> CliResult<()> {
    if let Some(kind) = a.axis {
        let i = a.i.unwrap_or(0);
        let j = a.j.unwrap_or(1);
        let bath = a.bath.unwrap_or(0);
        sec.axis = Some(match kind {
            AxisKind::Phi => SweepAxis::Phase { i, j },
            AxisKind::Coupling => SweepAxis::Coupling { i, j },
            AxisKind::Tau => match a.rotor {
                Some(rotor) => SweepAxis::Tau { rotor },
                None => SweepAxis::TauAll,
            },
            AxisKind::G => SweepAxis::BathCoupling { bath },
            AxisKind::Temperature => SweepAxis::Temperature { bath },
        });
    } else if a.i.is_some() || a.j.is_some() || a.rotor.is_some() || a.bath.is_some() {
        return Err(CliError::Usage("--i, --j, --rotor and --bath need --axis".into()));
    }
    let mut grid = GridSection {
        from: sec.from,
        to: sec.to,
        points: sec.points,
    };
    override_grid(&mut grid, a.grid.from, a.grid.to, a.grid.points);
    sec.from = grid.from;
    sec.to = grid.to;
    sec.points = grid.points;
    Ok(())
}

/// Evenly spaced grid; `fallback` supplies (from, to, points) defaults.
fn grid_from(key: &str, sec: GridSection, fallback: Option<(f64, f64, usize)>) -> CliResult<Vec<f64>> {
    let (from, to) = match (sec.from, sec.to, fallback) {
        (Some(a), Some(b), _) => (a, b),
        (a, b, Some((fa, fb, _))) => (a.unwrap_or(fa), b.unwrap_or(fb)),
        _ => return Err(CliError::Config(format!("{key}.from and {key}.to are required"))),
    };
    let points = sec
        .points
        .or(fallback.map(|f| f.2))
        .unwrap_or(DEFAULT_SWEEP_POINTS);
    if !(from.is_finite() && to.is_finite()) {
        return Err(CliError::Config(format!("{key} grid bounds must be finite")));
    }
    if points == 0 {
        return Err(CliError::Config(format!("{key}.points must be at least 1")));
    }
    if points == 1 && from != to {
        return Err(CliError::Config(format!("{key}.points = 1 needs from = to")));
    }
    Ok(linspace(from, to, points))
}
