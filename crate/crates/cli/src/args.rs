use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qpredict_core::scenarios::{Mode, Observe, Point, ScenarioKind};

#[derive(Debug, Parser)]
#[command(
    name = "qpredict",
    version,
    about = "Conditional-expectation predictions for measurement scenarios"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the analytic predictions of a scenario.
    Scenario(ScenarioCmd),
    /// Evaluate a scenario and compare against a seeded Monte Carlo run.
    Sample(SampleCmd),
    /// Run the randomized property suites.
    Verify(VerifyCmd),
}

#[derive(Debug, Args)]
pub struct ScenarioCmd {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SampleCmd {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Number of shots.
    #[arg(long, default_value_t = 100_000)]
    pub shots: u64,
    /// RNG seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyCmd {
    /// Comma-separated Hilbert space dimensions, each in 2..=16.
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 4, 8])]
    pub dims: Vec<usize>,
    /// Random instances per property and dimension.
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Residual tolerance.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario kind; overrides the kind in --config.
    #[arg(value_enum)]
    pub kind: Option<KindArg>,
    /// JSON scenario file; other flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub a_re: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub a_im: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub b_re: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub b_im: Option<f64>,
    /// |a|^2, with a and b = sqrt(1 - |a|^2) real.
    #[arg(long, conflicts_with_all = ["a_re", "a_im", "b_re", "b_im"])]
    pub a2: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Propagation time (particle mode).
    #[arg(long)]
    pub t: Option<f64>,
    /// Energy (wave mode).
    #[arg(long)]
    pub energy: Option<f64>,
    /// Detector position as "x,y,z".
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub x_detect: Option<Point>,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub x_plus: Option<Point>,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub x_minus: Option<Point>,
    /// Observation branch to condition on.
    #[arg(long, value_enum)]
    pub observe: Option<ObserveArg>,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Also write the machine-readable report to this path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Machine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    DoubleSlit,
    Cat,
    Epr,
}

impl From<KindArg> for ScenarioKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::DoubleSlit => ScenarioKind::DoubleSlit,
            KindArg::Cat => ScenarioKind::Cat,
            KindArg::Epr => ScenarioKind::Epr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Particle,
    Wave,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Particle => Mode::Particle,
            ModeArg::Wave => Mode::Wave,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObserveArg {
    None,
    Plus,
    Minus,
    Photon,
    NoPhoton,
}

impl From<ObserveArg> for Observe {
    fn from(o: ObserveArg) -> Self {
        match o {
            ObserveArg::None => Observe::None,
            ObserveArg::Plus => Observe::Plus,
            ObserveArg::Minus => Observe::Minus,
            ObserveArg::Photon => Observe::Photon,
            ObserveArg::NoPhoton => Observe::NoPhoton,
        }
    }
}

pub fn parse_point(s: &str) -> Result<Point, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated numbers, got {s:?}"));
    }
    let mut p = [0.0; 3];
    for (slot, part) in p.iter_mut().zip(parts) {
        *slot = part
            .parse()
            .map_err(|_| format!("not a number: {part:?}"))?;
    }
    Ok(p)
}
