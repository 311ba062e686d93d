//! Command-line front end: `single`, `sweep` and `adapt` subcommands that
//! read TOML scenario files and write CSV/PGM artifacts.
//!
//! Exit codes: 0 success, 2 parse error, 3 I/O error, 4 every sweep
//! configuration failed, 1 any other simulation error.

pub mod output;
pub mod scenario;
pub mod sweep;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::adaptation::{run_adaptation, AdaptError, SearchMode};
use crate::pipeline::run_scenario;

pub use scenario::{ParseError, ResolvedScenario, ScenarioFile};
pub use sweep::{evaluate_sweep, Band, Preset, SweepOutcome, SweepSpec};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: ParseError },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("all {0} sweep configurations failed")]
    AllFailed(usize),
    #[error(transparent)]
    Simulation(#[from] crate::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } => 2,
            CliError::Io { .. } => 3,
            CliError::AllFailed(_) => 4,
            CliError::Simulation(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "prs-isac", version, about = "PRS-based sensing simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario and write its map, detections and metrics.
    Single(SingleArgs),
    /// Monte Carlo sweep over waveform configurations.
    Sweep(SweepArgs),
    /// Binary search for the PRB allocation on one scenario.
    Adapt(AdaptArgs),
}

#[derive(Debug, Args)]
pub struct Overrides {
    /// Replaces the seed from the input file.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub zero_pad: Option<usize>,
    /// Detection threshold as a fraction of the map maximum.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Print the effective configuration as TOML and exit.
    #[arg(long)]
    pub dump_config: bool,
}

#[derive(Debug, Args)]
pub struct SingleArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep specification; defaults to the built-in preset.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "both", conflicts_with = "spec")]
    pub preset: Preset,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Monte Carlo runs per configuration.
    #[arg(long)]
    pub runs: Option<usize>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct AdaptArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, default_value_t = SearchMode::Standard)]
    pub mode: SearchMode,
    /// Evaluator calls allowed after the first one.
    #[arg(long, default_value_t = 20)]
    pub max_iters: usize,
    #[command(flatten)]
    pub overrides: Overrides,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_error(path: &Path, source: ParseError) -> CliError {
    CliError::Parse {
        path: path.to_path_buf(),
        source,
    }
}

fn emit(stdout: &mut dyn Write, line: &str) -> Result<(), CliError> {
    writeln!(stdout, "{line}").map_err(|source| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })
}

/// Reads a scenario file and applies command-line overrides.
pub fn load_scenario(path: &Path, o: &Overrides) -> Result<ScenarioFile, CliError> {
    let mut file = ScenarioFile::parse(&read(path)?).map_err(|e| parse_error(path, e))?;
    if let Some(seed) = o.seed {
        file.seed = seed;
    }
    if let Some(z) = o.zero_pad {
        file.detector.zero_pad = z;
    }
    if let Some(t) = o.threshold {
        file.detector.threshold_fraction = t;
    }
    file.resolve().map_err(|(key, message)| {
        parse_error(
            path,
            ParseError {
                key: Some(key),
                line: None,
                message,
            },
        )
    })?;
    Ok(file)
}

fn dump(stdout: &mut dyn Write, path: &Path, toml: Result<String, ParseError>) -> Result<(), CliError> {
    let text = toml.map_err(|e| parse_error(path, e))?;
    write!(stdout, "{text}").map_err(|source| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })
}

pub fn run_single(args: &SingleArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let file = load_scenario(&args.scenario, &args.overrides)?;
    if args.overrides.dump_config {
        return dump(stdout, &args.scenario, file.to_toml());
    }
    let ResolvedScenario { scenario, detector } = file.resolve().expect("validated on load");
    let out = run_scenario(&scenario, &detector)?;
    create_dir(&args.out)?;
    output::write_file(&args.out, "map.csv", output::map_csv(&out.map).as_bytes())?;
    output::write_file(&args.out, "map.pgm", &output::map_pgm(&out.map))?;
    output::write_file(
        &args.out,
        "detections.csv",
        output::detections_csv(&out.detections).as_bytes(),
    )?;
    output::write_file(
        &args.out,
        "truths.csv",
        output::truths_csv(&scenario.targets).as_bytes(),
    )?;
    output::write_file(&args.out, "metrics.csv", output::metrics_csv(&out.record).as_bytes())?;
    emit(stdout, &output::summary_line(&out.record, scenario.targets.len()))
}

pub fn load_sweep(args: &SweepArgs) -> Result<SweepSpec, CliError> {
    let (mut spec, path) = match &args.spec {
        Some(path) => (
            SweepSpec::parse(&read(path)?).map_err(|e| parse_error(path, e))?,
            path.clone(),
        ),
        None => (SweepSpec::preset(args.preset), PathBuf::from("<preset>")),
    };
    if let Some(runs) = args.runs {
        spec.monte_carlo_runs = runs;
    }
    if let Some(seed) = args.overrides.seed {
        spec.seed_base = seed;
    }
    if let Some(z) = args.overrides.zero_pad {
        spec.detector.zero_pad = z;
    }
    if let Some(t) = args.overrides.threshold {
        spec.detector.threshold_fraction = t;
    }
    spec.validate().map_err(|(key, message)| {
        parse_error(
            &path,
            ParseError {
                key: Some(key),
                line: None,
                message,
            },
        )
    })?;
    Ok(spec)
}

pub fn run_sweep(args: &SweepArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let spec = load_sweep(args)?;
    if args.overrides.dump_config {
        return dump(stdout, Path::new("<sweep>"), spec.to_toml());
    }
    let outcome = evaluate_sweep(&spec).map_err(|e| parse_error(Path::new("<sweep>"), e))?;
    create_dir(&args.out)?;
    output::write_file(
        &args.out,
        "tradeoff.csv",
        sweep::tradeoff_csv(&spec, &outcome).as_bytes(),
    )?;
    for f in &outcome.failures {
        eprintln!(
            "config band={} bandwidth_hz={} spacing_hz={} failed: {}",
            f.band, f.bandwidth_hz, f.spacing_hz, f.reason
        );
    }
    let truths = spec.monte_carlo_runs * spec.targets_per_run;
    for row in &outcome.rows {
        emit(stdout, &output::summary_line(&row.result.record, truths))?;
    }
    if outcome.rows.is_empty() {
        return Err(CliError::AllFailed(outcome.failures.len()));
    }
    Ok(())
}

pub fn run_adapt(args: &AdaptArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let file = load_scenario(&args.scenario, &args.overrides)?;
    if args.overrides.dump_config {
        return dump(stdout, &args.scenario, file.to_toml());
    }
    let ResolvedScenario { scenario, detector } = file.resolve().expect("validated on load");
    let evaluator = |n_prb: usize| -> crate::Result<usize> {
        let mut s = scenario.clone();
        s.config = scenario.config.with_n_prb(n_prb)?;
        Ok(run_scenario(&s, &detector)?.detections.len())
    };
    let (chosen, state) = match run_adaptation(evaluator, args.mode, args.max_iters) {
        Ok(result) => result,
        Err(AdaptError::Evaluator(e)) => return Err(e.into()),
        Err(e) => {
            return Err(parse_error(
                &args.scenario,
                ParseError {
                    key: Some("max_iters".into()),
                    line: None,
                    message: e.to_string(),
                },
            ))
        }
    };
    create_dir(&args.out)?;
    output::write_file(
        &args.out,
        "search_trace.csv",
        output::search_trace_csv(&state, chosen).as_bytes(),
    )?;
    let mut final_scenario = scenario.clone();
    final_scenario.config = scenario.config.with_n_prb(chosen)?;
    let out = run_scenario(&final_scenario, &detector)?;
    emit(stdout, &output::summary_line(&out.record, scenario.targets.len()))?;
    emit(stdout, &format!("chosen_n_prb={chosen}"))
}

pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Single(a) => run_single(a, stdout),
        Command::Sweep(a) => run_sweep(a, stdout),
        Command::Adapt(a) => run_adapt(a, stdout),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let mut stdout = std::io::stdout().lock();
    match run(&cli, &mut stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
