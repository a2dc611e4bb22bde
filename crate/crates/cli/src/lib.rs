//! Library side of the `qpredict` binary: argument handling, report
//! assembly and rendering, and the verification driver.
//!
//! Exit codes: 0 on success, 1 when a contract or property check fails,
//! 2 on invalid input.

pub mod args;
pub mod report;
pub mod verify;

use std::ffi::OsString;
use std::fmt;
use std::io::Write;

use clap::Parser;
use qpredict_core::{Complex64, ScenarioConfig};

use args::{Cli, Command, Format, OutputArgs, ScenarioArgs};
pub use report::{build_report, RunReport};

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad arguments or configuration.
    Input(String),
    /// A check failed while running.
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "invalid input: {m}"),
            CliError::Failure(m) => write!(f, "check failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<qpredict_core::Error> for CliError {
    fn from(e: qpredict_core::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

/// Merges a config file (if any) with the inline flags.
pub fn resolve_config(args: &ScenarioArgs) -> Result<ScenarioConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str::<ScenarioConfig>(&text)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        }
        None => {
            let kind = args
                .kind
                .ok_or_else(|| CliError::Input("scenario kind or --config is required".into()))?;
            let h = Complex64::new(0.5f64.sqrt(), 0.0);
            ScenarioConfig::new(kind.into(), h, h)
        }
    };
    if let Some(kind) = args.kind {
        cfg.kind = kind.into();
    }
    if let Some(a2) = args.a2 {
        if !(0.0..=1.0).contains(&a2) {
            return Err(CliError::Input(format!(
                "--a2 must lie in [0, 1], got {a2}"
            )));
        }
        cfg.a = [a2.sqrt(), 0.0];
        cfg.b = [(1.0 - a2).sqrt(), 0.0];
    }
    if [args.a_re, args.a_im, args.b_re, args.b_im]
        .iter()
        .any(Option::is_some)
    {
        cfg.a = [args.a_re.unwrap_or(0.0), args.a_im.unwrap_or(0.0)];
        cfg.b = [args.b_re.unwrap_or(0.0), args.b_im.unwrap_or(0.0)];
    }
    if let Some(m) = args.mode {
        cfg.mode = m.into();
    }
    if let Some(t) = args.t {
        cfg.t = t;
    }
    if let Some(e) = args.energy {
        cfg.energy = e;
    }
    if let Some(p) = args.x_detect {
        cfg.x_detect = p;
    }
    if let Some(p) = args.x_plus {
        cfg.x_plus = p;
    }
    if let Some(p) = args.x_minus {
        cfg.x_minus = p;
    }
    if let Some(o) = args.observe {
        cfg.observe = Some(o.into());
    }
    Ok(cfg)
}

fn emit(report: &RunReport, output: &OutputArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let machine = report.to_machine();
    let rendered = match output.format {
        Format::Table => report.to_table(),
        Format::Machine => machine.clone(),
    };
    out.write_all(rendered.as_bytes())
        .map_err(|e| CliError::Input(format!("cannot write output: {e}")))?;
    if let Some(path) = &output.out {
        std::fs::write(path, machine)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn failed_checks(report: &RunReport) -> Result<(), CliError> {
    let failed: Vec<&str> = report
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.as_str())
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failure(failed.join(", ")))
    }
}

/// Runs a parsed command, writing the report to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Scenario(cmd) => {
            let cfg = resolve_config(&cmd.scenario)?;
            let report = build_report(&cfg, None)?;
            emit(&report, &cmd.output, out)?;
            failed_checks(&report)
        }
        Command::Sample(cmd) => {
            if cmd.shots == 0 {
                return Err(CliError::Input("--shots must be at least 1".into()));
            }
            let cfg = resolve_config(&cmd.scenario)?;
            let report = build_report(&cfg, Some((cmd.shots, cmd.seed)))?;
            emit(&report, &cmd.output, out)?;
            failed_checks(&report)
        }
        Command::Verify(cmd) => {
            let opts = verify::VerifyOptions {
                dims: cmd.dims.clone(),
                trials: cmd.trials,
                seed: cmd.seed,
                tol: cmd.tol,
            };
            let outcome = verify::run(&opts)?;
            out.write_all(outcome.transcript.as_bytes())
                .map_err(|e| CliError::Input(format!("cannot write output: {e}")))?;
            match outcome.first_failure() {
                Some(r) => Err(CliError::Failure(format!(
                    "{} at dim={}",
                    r.property, r.dim
                ))),
                None => Ok(()),
            }
        }
    }
}

/// Parses `argv`, runs it and returns the process exit code.
pub fn main_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version go to stdout with code 0; usage errors to stderr.
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return e.exit_code();
        }
    };
    match run(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "qpredict: {e}");
            e.exit_code()
        }
    }
}
