//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a check ran and failed, 2 usage or shape error,
//! 3 I/O or parse error.

mod commands;
mod format;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::builder::SynthesisError;
use crate::field::{FieldError, PrimeModulus};
use crate::matmul::Encoding;
use crate::matrix::MatrixError;
use crate::nonlinear::{FixedPointParams, Function};
use crate::r1cs::R1csError;

pub use format::format_real;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

const DEFAULT_MODULUS: &str = "2305843009213693951";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Failed(_) => EXIT_FAILED,
        }
    }
}

impl From<SynthesisError> for CliError {
    fn from(e: SynthesisError) -> Self {
        match e {
            SynthesisError::R1cs(inner) => inner.into(),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<R1csError> for CliError {
    fn from(e: R1csError) -> Self {
        match e {
            R1csError::Shape(_) | R1csError::Field(FieldError::ModulusMismatch { .. }) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Io(other.to_string()),
        }
    }
}

impl From<MatrixError> for CliError {
    fn from(e: MatrixError) -> Self {
        match e {
            MatrixError::Shape(_) => CliError::Usage(e.to_string()),
            other => CliError::Io(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "matcircuit",
    version,
    about = "R1CS circuits for matrix multiplication and fixed-point nonlinearities"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a matmul instance and print its statistics.
    Compile(CompileArgs),
    /// Compute Y = X × W and an assignment for an existing instance.
    Witness(WitnessArgs),
    /// Check an assignment against an instance.
    Check(CheckArgs),
    /// Tabulate constraint counts over a sweep of dimensions.
    Bench(BenchArgs),
    /// Measure how often a forged output survives the challenge.
    Soundness(SoundnessArgs),
    /// Compare a nonlinear gadget against its floating-point reference.
    Approx(ApproxArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct DimArgs {
    #[arg(long)]
    pub a: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub b: usize,
}

#[derive(Debug, Args)]
pub struct CompileArgs {
    #[arg(long, default_value = DEFAULT_MODULUS)]
    pub modulus: String,
    #[command(flatten)]
    pub dims: DimArgs,
    #[arg(long, default_value = "crpc-psq")]
    pub encoding: String,
    /// Bytes hashed into the challenge; required by crpc and crpc-psq.
    #[arg(long)]
    pub challenge_seed: Option<String>,
    /// Comma-separated list of public matrices.
    #[arg(long, default_value = "x,y")]
    pub public: String,
    /// Instance output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct WitnessArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub w: PathBuf,
    /// Assignment output path.
    #[arg(long)]
    pub assignment: PathBuf,
    /// Output path for Y.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub assignment: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value = DEFAULT_MODULUS)]
    pub modulus: String,
    /// Comma-separated `a x n x b` triples, e.g. `1x3x1,3x2x2`.
    #[arg(long, default_value = "1x3x1,3x2x2")]
    pub sweep: String,
    /// Comma-separated encodings; all four by default.
    #[arg(long)]
    pub encodings: Option<String>,
    #[arg(long, default_value = "bench")]
    pub challenge_seed: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct SoundnessArgs {
    #[arg(long, default_value = DEFAULT_MODULUS)]
    pub modulus: String,
    #[command(flatten)]
    pub dims: DimArgs,
    #[arg(long, default_value = "crpc-psq")]
    pub encoding: String,
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    /// Try every nonzero challenge (p ≤ 65536 only).
    #[arg(long)]
    pub exhaustive: bool,
    /// Tampered output entry `r,c`; repeatable.
    #[arg(long = "tamper-entry")]
    pub tamper_entries: Vec<String>,
    /// Signed delta per tampered entry; one value applies to all.
    #[arg(long = "tamper-delta", allow_hyphen_values = true)]
    pub tamper_deltas: Vec<i64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Matrices for the exhaustive scan; random from `--seed` otherwise.
    #[arg(long)]
    pub x: Option<PathBuf>,
    #[arg(long)]
    pub w: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct FixedPointArgs {
    #[arg(long, default_value_t = 8)]
    pub scale_bits: u32,
    #[arg(long, default_value_t = 24)]
    pub bit_width: u32,
    /// Exponential clipping bound in real units.
    #[arg(long, default_value_t = -16.0, allow_hyphen_values = true)]
    pub threshold: f64,
    #[arg(long, default_value_t = 6)]
    pub exp_iters: u32,
}

impl FixedPointArgs {
    fn params(&self) -> Result<FixedPointParams, CliError> {
        if self.scale_bits == 0 || self.scale_bits > 30 || !self.threshold.is_finite() {
            return Err(CliError::Usage("invalid fixed-point flags".into()));
        }
        let scaled = (self.threshold * (1u64 << self.scale_bits) as f64).round();
        if scaled.abs() > i64::MAX as f64 / 2.0 {
            return Err(CliError::Usage(format!(
                "threshold {} out of range",
                self.threshold
            )));
        }
        Ok(FixedPointParams {
            scale_bits: self.scale_bits,
            bit_width: self.bit_width,
            threshold: scaled as i64,
            exp_iters: self.exp_iters,
        })
    }
}

#[derive(Debug, Args)]
pub struct ApproxArgs {
    #[arg(long, default_value = DEFAULT_MODULUS)]
    pub modulus: String,
    #[arg(long)]
    pub function: String,
    /// `lo:hi:step`.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Comma-separated input vector for softmax and max.
    #[arg(long, allow_hyphen_values = true)]
    pub inputs: Option<String>,
    #[command(flatten)]
    pub fixed: FixedPointArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: OutputFormat,
}

fn parse_modulus(s: &str) -> Result<PrimeModulus, CliError> {
    s.parse()
        .map_err(|e: FieldError| CliError::Usage(format!("--modulus: {e}")))
}

fn parse_encoding(s: &str) -> Result<Encoding, CliError> {
    s.parse().map_err(CliError::Usage)
}

fn parse_function(s: &str) -> Result<Function, CliError> {
    s.parse().map_err(CliError::Usage)
}

/// Parses arguments and runs one command. Returns the process exit code;
/// messages go to `stdout` and `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK {
                stdout.write_all(rendered.as_bytes())
            } else {
                stderr.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match commands::dispatch(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
