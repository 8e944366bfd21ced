use std::collections::HashSet;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use terrasim::calibration::calibrate;
use terrasim::io::compare::{compare, observations_from_summary, Observation};
use terrasim::io::config::{parse_config_with, write_rig_config, CalibrationSpec, Config, Overrides};
use terrasim::io::emit::{
    calibration_json, emit_summary, emit_timeseries, reference_curve_csv, slip_curve_csv, trace_csv,
};
use terrasim::io::manifest::{Command, ExitStatus, RunManifest};
use terrasim::io::reference::{render, ReferenceDataset, REFERENCE_TOML};
use terrasim::io::{read_file, IoError};
use terrasim::rig::{run_experiment, sweep};
use terrasim::soil::{GrouserFrequency, ShearForm, SlipConvention};
use terrasim::{CalibrationError, ExperimentOutcome, RigConfig, RigError};

/// The four bundled experiments on the tuned soil.
const DEFAULT_SWEEP: &str = r#"soil = "table2"

[[experiment]]
slip = 0.0

[[experiment]]
slip = 0.25

[[experiment]]
slip = 0.5

[[experiment]]
slip = 0.75
"#;

/// Initial soil fitted against the measured columns of the bundled table.
const DEFAULT_CALIBRATION: &str = r#"soil = "table1"

[calibration]
"#;

#[derive(Parser, Debug)]
#[command(
    name = "terrasim",
    version,
    about = "Grouser wheel on loose soil: single-wheel test rig simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// TOML configuration file
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory (created if absent)
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Relative tolerance for `compare`
    #[arg(long, global = true, default_value_t = 0.15, value_name = "REL")]
    tolerance: f64,

    /// Reuse a non-empty output directory
    #[arg(long, global = true)]
    force: bool,

    #[arg(long, global = true, value_enum)]
    shear_form: Option<ShearFormArg>,

    #[arg(long = "grouser-freq", global = true, value_enum)]
    grouser_freq: Option<GrouserFreqArg>,

    /// Convention in which slip values in the config are given
    #[arg(long, global = true, value_enum)]
    slip_convention: Option<SlipConventionArg>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Simulate the configured run
    Run,
    /// Simulate every `[[experiment]]` (default: the four bundled experiments)
    Sweep,
    /// Fit soil parameters (default: initial soil against measured means)
    Calibrate,
    /// Compare steady-state means against the bundled table
    Compare {
        /// summary.json from `run` or `sweep`; simulated afresh when omitted
        summary: Option<PathBuf>,
    },
    /// Write plot-ready CSV: time series, slip curve and reference curve
    EmitPlotData,
    /// Print the bundled reference tables
    Reference,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ShearFormArg {
    Complete,
    AsPrinted,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GrouserFreqArg {
    Passing,
    AsPrinted,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SlipConventionArg {
    Paper,
    Conventional,
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            shear_form: self.shear_form.map(|f| match f {
                ShearFormArg::Complete => ShearForm::Complete,
                ShearFormArg::AsPrinted => ShearForm::AsPrinted,
            }),
            grouser_frequency: self.grouser_freq.map(|f| match f {
                GrouserFreqArg::Passing => GrouserFrequency::Passing,
                GrouserFreqArg::AsPrinted => GrouserFrequency::AsPrinted,
            }),
            slip_convention: self.slip_convention.map(|c| match c {
                SlipConventionArg::Paper => SlipConvention::Paper,
                SlipConventionArg::Conventional => SlipConvention::Conventional,
            }),
        }
    }
}

/// A message and the exit status it maps to.
#[derive(Debug)]
struct Failure {
    status: ExitStatus,
    message: String,
}

impl Failure {
    fn validation(message: impl Display) -> Self {
        Self {
            status: ExitStatus::Validation,
            message: message.to_string(),
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::validation(e)
    }
}

impl From<RigError> for Failure {
    fn from(e: RigError) -> Self {
        let status = match e {
            RigError::Config(_) => ExitStatus::Validation,
            RigError::Divergence { .. } | RigError::Model { .. } => ExitStatus::Divergence,
        };
        Self {
            status,
            message: e.to_string(),
        }
    }
}

impl From<CalibrationError> for Failure {
    fn from(e: CalibrationError) -> Self {
        let status = match e {
            CalibrationError::Problem(_) | CalibrationError::BudgetTooSmall { .. } => ExitStatus::Validation,
            CalibrationError::Simulation { .. } | CalibrationError::AllEvaluationsFailed(_) => ExitStatus::Divergence,
        };
        Self {
            status,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<ExitStatus, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(ExitStatus::Validation.code() as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let status = match execute(&cli) {
        Ok(status) => status,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.status
        }
    };
    ExitCode::from(status.code() as u8)
}

fn execute(cli: &Cli) -> Outcome {
    if !(cli.tolerance >= 0.0 && cli.tolerance.is_finite()) {
        return Err(Failure::validation(format!(
            "--tolerance must be >= 0, got {}",
            cli.tolerance
        )));
    }
    match &cli.command {
        Cmd::Run => run(cli),
        Cmd::Sweep => run_sweep(cli),
        Cmd::Calibrate => run_calibrate(cli),
        Cmd::Compare { summary } => run_compare(cli, summary.as_deref()),
        Cmd::EmitPlotData => emit_plot_data(cli),
        Cmd::Reference => reference(cli),
    }
}

/// Parses `--config`, or `fallback` when no file is given.
fn load_config(cli: &Cli, fallback: Option<&str>) -> Result<Config, Failure> {
    let (text, origin) = match (&cli.config, fallback) {
        (Some(path), _) => (read_file(path)?, path.display().to_string()),
        (None, Some(text)) => (text.to_string(), "built-in configuration".to_string()),
        (None, None) => return Err(Failure::validation("this command needs --config <PATH>")),
    };
    parse_config_with(&text, &cli.overrides()).map_err(|e| Failure::validation(format!("{origin}: {e}")))
}

fn require_out(cli: &Cli) -> Result<&Path, Failure> {
    cli.out
        .as_deref()
        .ok_or_else(|| Failure::validation("this command needs --out <DIR>"))
}

fn open_manifest(cli: &Cli, command: Command, out: &Path, seed: u64) -> Result<RunManifest, Failure> {
    let manifest = RunManifest::new(command, cli.config.clone(), out, seed);
    manifest.prepare(cli.force)?;
    Ok(manifest)
}

/// File-name-safe, unique stems for run labels.
fn file_stems(outcomes: &[ExperimentOutcome]) -> Vec<String> {
    let mut seen = HashSet::new();
    outcomes
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let mut stem: String = o
                .label()
                .chars()
                .map(|c| {
                    if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                        c
                    } else {
                        '_'
                    }
                })
                .collect();
            if stem.is_empty() || !seen.insert(stem.clone()) {
                stem = format!("{stem}_{i}");
                seen.insert(stem.clone());
            }
            stem
        })
        .collect()
}

fn write_timeseries(manifest: &mut RunManifest, outcomes: &[ExperimentOutcome]) -> Result<(), Failure> {
    for (o, stem) in outcomes.iter().zip(file_stems(outcomes)) {
        manifest.write(&format!("timeseries_{stem}.csv"), &emit_timeseries(o))?;
    }
    Ok(())
}

fn print_outcome(o: &ExperimentOutcome) {
    let s = &o.steady;
    println!(
        "{:<8} slip {:<5} DP {:>9.4} N  W {:>8.3} N  z {:.5} m",
        o.label(),
        o.config.slip,
        s.drawbar_pull.mean,
        s.normal_force.mean,
        s.sinkage.mean
    );
}

/// Runs every config, keeping the order. Failures are reported and turn
/// the final status into a divergence.
fn simulate(configs: &[RigConfig]) -> (Vec<ExperimentOutcome>, Option<Failure>) {
    let mut outcomes = Vec::new();
    let mut failure = None;
    for (config, result) in configs.iter().zip(sweep(configs)) {
        match result {
            Ok(o) => outcomes.push(o),
            Err(e) => {
                eprintln!("error: {}: {e}", config.label);
                failure.get_or_insert(Failure::from(e));
            }
        }
    }
    (outcomes, failure)
}

fn run(cli: &Cli) -> Outcome {
    let config = load_config(cli, None)?;
    let out = require_out(cli)?;
    let mut manifest = open_manifest(cli, Command::Run, out, config.seed)?;
    let outcome = run_experiment(&config.base)?;
    print_outcome(&outcome);
    let outcomes = [outcome];
    write_timeseries(&mut manifest, &outcomes)?;
    manifest.write("summary.json", &emit_summary(&outcomes))?;
    manifest.finish()?;
    Ok(ExitStatus::Success)
}

fn run_sweep(cli: &Cli) -> Outcome {
    let config = load_config(cli, Some(DEFAULT_SWEEP))?;
    let out = require_out(cli)?;
    let mut manifest = open_manifest(cli, Command::Sweep, out, config.seed)?;
    let (outcomes, failure) = simulate(&config.runs());
    outcomes.iter().for_each(print_outcome);
    write_timeseries(&mut manifest, &outcomes)?;
    manifest.write("slip_curve.csv", &slip_curve_csv(&outcomes))?;
    manifest.write("summary.json", &emit_summary(&outcomes))?;
    manifest.finish()?;
    Ok(failure.map_or(ExitStatus::Success, |f| f.status))
}

fn run_calibrate(cli: &Cli) -> Outcome {
    let config = load_config(cli, Some(DEFAULT_CALIBRATION))?;
    let Some(CalibrationSpec { problem, settings }) = &config.calibration else {
        return Err(Failure::validation(format!(
            "{}: no [calibration] section",
            cli.config.as_deref().unwrap_or(Path::new("configuration")).display()
        )));
    };
    let out = require_out(cli)?;
    let mut manifest = open_manifest(cli, Command::Calibrate, out, settings.seed)?;
    let report = calibrate(problem, settings)?;
    match report.initial_objective {
        Some(j0) => println!("objective {j0:.6} -> {:.6}", report.final_objective),
        None => println!("objective (start failed) -> {:.6}", report.final_objective),
    }
    println!(
        "{} evaluations ({} failed), method {}",
        report.evaluations, report.failed_evaluations, report.method
    );
    for f in &report.free {
        let p = f.parameter;
        println!(
            "  {:<6} {:>12.6} -> {:>12.6}",
            p.key(),
            p.get(&report.base),
            p.get(&report.tuned)
        );
    }
    let tuned_rig = RigConfig {
        soil: report.tuned,
        ..config.base.clone()
    };
    manifest.write("calibration.json", &calibration_json(&report))?;
    manifest.write("trace.csv", &trace_csv(&report.trace))?;
    manifest.write("tuned.toml", &write_rig_config(&tuned_rig))?;
    manifest.finish()?;
    Ok(ExitStatus::Success)
}

fn run_compare(cli: &Cli, summary: Option<&Path>) -> Outcome {
    let (observations, failure, seed) = match summary {
        Some(path) => {
            let text = read_file(path)?;
            let obs = observations_from_summary(&text)
                .map_err(|e| Failure::validation(format!("{}: {e}", path.display())))?;
            (obs, None, 0)
        }
        None => {
            let config = load_config(cli, Some(DEFAULT_SWEEP))?;
            let (outcomes, failure) = simulate(&config.runs());
            (outcomes.iter().map(Observation::from).collect(), failure, config.seed)
        }
    };
    let report = compare(&observations, ReferenceDataset::bundled(), cli.tolerance);
    let text = report.to_text();
    print!("{text}");
    if let Some(out) = &cli.out {
        let mut manifest = open_manifest(cli, Command::Compare, out, seed)?;
        let mut json = report.to_json().to_string();
        json.push('\n');
        manifest.write("comparison.json", &json)?;
        manifest.write("comparison.txt", &text)?;
        manifest.finish()?;
    }
    if let Some(f) = failure {
        return Ok(f.status);
    }
    Ok(if report.passed() {
        ExitStatus::Success
    } else {
        ExitStatus::ComparisonFailed
    })
}

fn emit_plot_data(cli: &Cli) -> Outcome {
    let config = load_config(cli, Some(DEFAULT_SWEEP))?;
    let out = require_out(cli)?;
    let mut manifest = open_manifest(cli, Command::EmitPlotData, out, config.seed)?;
    let (outcomes, failure) = simulate(&config.runs());
    write_timeseries(&mut manifest, &outcomes)?;
    manifest.write("slip_curve.csv", &slip_curve_csv(&outcomes))?;
    manifest.write("reference_curve.csv", &reference_curve_csv(ReferenceDataset::bundled()))?;
    manifest.finish()?;
    Ok(failure.map_or(ExitStatus::Success, |f| f.status))
}

fn reference(cli: &Cli) -> Outcome {
    print!("{}", render(ReferenceDataset::bundled()));
    if let Some(out) = &cli.out {
        let mut manifest = open_manifest(cli, Command::Reference, out, 0)?;
        manifest.write("reference.toml", REFERENCE_TOML)?;
        manifest.finish()?;
    }
    Ok(ExitStatus::Success)
}
