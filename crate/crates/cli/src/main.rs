//! `spinsense`: command-line access to spin-J sensing and code diagnostics.
//!
//! Documents travel as JSON on stdin/stdout so subcommands can be piped.
//! Exit status is 0 on success, 2 when a requested check fails, and 1 for
//! bad input; errors are reported on stderr as `{"error": "..."}`.

mod commands;
mod error;
mod input;
mod operators;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "spinsense", version, about = "Fisher information, anti-coherence and error-correction checks for spin-J states")]
struct Cli {
    /// Write the result here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check normalization and anti-coherence of a state document.
    StateCheck(StateCheckArgs),
    /// Quantum Fisher information for a rotation axis or a named generator.
    Qfi(QfiArgs),
    /// Symmetrized spin covariance matrix of a state.
    FisherMatrix(FisherArgs),
    /// Build a second-order anti-coherent state on a set of symmetric shells.
    Construct(ConstructArgs),
    /// Emit the two AE codewords as a code-space document.
    AeCode(AeArgs),
    /// Error-detection and Knill-Laflamme checks for a code space.
    CodeCheck(CodeCheckArgs),
    /// Error of a state (or worst codeword) under a unitary or error set.
    Error(ErrorArgs),
    /// Monte Carlo comparison of the estimation spread with the Cramer-Rao bound.
    Estimate(EstimateArgs),
    /// Distinguishability of two states and the distance a measurement sees.
    Distance(DistanceArgs),
}

#[derive(Args, Debug)]
pub struct StateSource {
    /// `noon`, `coherent`, a state file, or `-` for stdin.
    #[arg(long, default_value = "-")]
    pub state: String,
    /// Twice the spin, for the named states.
    #[arg(long)]
    pub twice_j: Option<u32>,
}

#[derive(Args, Debug)]
pub struct StateCheckArgs {
    /// State file, or `-` for stdin.
    #[arg(long, default_value = "-")]
    pub input: String,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Also require first- or second-order anti-coherence.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub require_order: Option<u8>,
}

#[derive(Args, Debug)]
pub struct QfiArgs {
    #[command(flatten)]
    pub source: StateSource,
    /// Rotation axis: x, y, z or a unit vector `ux,uy,uz`.
    #[arg(long, conflicts_with = "generator")]
    pub axis: Option<String>,
    /// Hermitian generator from the operator vocabulary.
    #[arg(long)]
    pub generator: Option<String>,
}

#[derive(Args, Debug)]
pub struct FisherArgs {
    #[command(flatten)]
    pub source: StateSource,
    /// Also report the QFI and the alignment angle for this axis.
    #[arg(long)]
    pub axis: Option<String>,
}

#[derive(Args, Debug)]
pub struct ConstructArgs {
    #[arg(long, required_unless_present = "spec")]
    pub twice_j: Option<u32>,
    /// Comma-separated non-negative shells `m`; 0 adds `|J,0>`.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["default_support", "spec"])]
    pub support: Vec<u32>,
    #[arg(long)]
    pub include_zero: bool,
    /// Use shells J, J-3, ... down to 3, plus 0.
    #[arg(long, conflicts_with = "spec")]
    pub default_support: bool,
    /// Support document `{"twice_j", "support", "include_zero"}`, or `-`.
    #[arg(long)]
    pub spec: Option<String>,
}

#[derive(Args, Debug)]
pub struct AeArgs {
    #[arg(long)]
    pub twice_j: u32,
    #[arg(long)]
    pub m1: u32,
    #[arg(long)]
    pub m2: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Condition {
    Detection,
    Kl,
    Both,
}

#[derive(Args, Debug)]
pub struct CodeCheckArgs {
    /// Code-space file, or `-` for stdin.
    #[arg(long, default_value = "-")]
    pub input: String,
    /// Comma-separated error operators.
    #[arg(long)]
    pub errors: String,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Condition::Both)]
    pub condition: Condition,
}

#[derive(Args, Debug)]
pub struct ErrorArgs {
    #[command(flatten)]
    pub source: StateSource,
    /// Treat the input as a code space and report its worst superposition.
    #[arg(long)]
    pub code: bool,
    /// Unitary error, e.g. `Rz(0.1)`.
    #[arg(long, conflicts_with_all = ["generator", "errors"])]
    pub unitary: Option<String>,
    /// Hermitian generator G of `exp(-i theta G)`.
    #[arg(long, requires = "theta", conflicts_with = "errors")]
    pub generator: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    /// Error operators for the recovery form.
    #[arg(long, requires = "recoveries")]
    pub errors: Option<String>,
    #[arg(long, requires = "errors")]
    pub recoveries: Option<String>,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub source: StateSource,
    #[arg(long, default_value = "Jz")]
    pub generator: String,
    /// True parameter value in (0, theta_half).
    #[arg(long)]
    pub theta: f64,
    /// Trials per run.
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 200)]
    pub runs: usize,
    #[arg(long, env = "SPINSENSE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Write per-run estimates as CSV (`run,theta_hat`).
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BasisChoice {
    /// Eigenbasis of Jz.
    Standard,
    /// `{|psi><psi|, I - |psi><psi|}` built on the first state.
    Optimal,
}

#[derive(Args, Debug)]
pub struct DistanceArgs {
    /// First state: `noon`, `coherent`, a file, or `-`.
    pub first: String,
    /// Second state, same forms.
    pub second: String,
    #[arg(long)]
    pub twice_j: Option<u32>,
    #[arg(long, value_enum, default_value_t = BasisChoice::Optimal, conflicts_with = "unitary_basis")]
    pub basis: BasisChoice,
    /// Measure in the columns of a unitary given as an operator file.
    #[arg(long)]
    pub unitary_basis: Option<String>,
}

/// Whether the command's own check passed.
pub enum Status {
    Ok,
    CheckFailed,
}

fn report_error(message: &str) {
    let line = serde_json::json!({ "error": message });
    eprintln!("{line}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            report_error(e.render().to_string().trim());
            return ExitCode::from(1);
        }
    };
    match commands::run(&cli.command, cli.output.as_deref()) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::CheckFailed) => ExitCode::from(2),
        Err(CliError::Input(msg)) => {
            report_error(&msg);
            ExitCode::from(1)
        }
    }
}
