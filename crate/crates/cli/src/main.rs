//! `symsub`: batch verification of symmetric-subspace identities.
//!
//! Each subcommand prints one JSON report (or CSV with `--format csv`) and
//! exits 0 if every check passed, 1 if any failed, 2 on usage errors and 3
//! when a dimension guard refuses the request.

mod commands;
mod report;

use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use symsub::randomness::BLOCK_SIZE;
use symsub::{Limits, SymsubError};

use crate::report::Report;

#[derive(Parser, Debug)]
#[command(name = "symsub", version, about = "Numerical and exact checks of symmetric-subspace identities")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Root seed for every random stream.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Monte Carlo sample count (each command has its own default).
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Sample count in blocks of 1024; overrides --samples.
    #[arg(long, global = true)]
    pub blocks: Option<usize>,
    /// Multiplies every default tolerance.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub tol_scale: f64,
    /// Largest dense Hilbert-space dimension allowed.
    #[arg(long, global = true, env = "SYMSUB_MAX_DIM")]
    pub max_dim: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

impl Global {
    pub fn limits(&self) -> Limits {
        self.max_dim.map_or_else(Limits::default, Limits::with_max_dim)
    }

    pub fn samples_or(&self, default: usize) -> usize {
        match (self.blocks, self.samples) {
            (Some(b), _) => b * BLOCK_SIZE,
            (None, Some(s)) => s,
            (None, None) => default,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dimension of the symmetric subspace of (C^d)^⊗n, binom(d+n−1, n),
    /// checked against an enumeration of types.
    Dims(DN),
    /// Table of the coefficients M_{k,s} in the expansion of the optimal
    /// measure-and-prepare channel as a mixture of clone-after-trace
    /// channels; checks that they sum to one and match the rearranged
    /// product-of-dimensions form.
    Coeffs(DNK),
    /// Identity checks.
    #[command(subcommand)]
    Verify(Verify),
    /// Finite de Finetti quantities.
    #[command(subcommand)]
    Definetti(Definetti),
    /// Moment-method bounds on product-state overlaps.
    #[command(subcommand)]
    Bound(Bound),
    /// Monte Carlo experiments.
    #[command(subcommand)]
    Mc(Mc),
}

#[derive(Subcommand, Debug)]
enum Verify {
    /// The symmetric projector: trace binom(d+n−1, n), idempotence,
    /// Hermiticity, and agreement of the group average with the type-basis
    /// construction.
    Psym(DN),
    /// The span of {(φφ†)^⊗n} over unit φ has dimension binom(d+n−1, n)^2.
    Spans(DN),
    /// Operators on (C^d)^⊗n fixed by conjugation with every permutation
    /// operator form a space of dimension binom(d^2+n−1, n).
    #[command(name = "commutant-dim")]
    CommutantDim(DN),
    /// The measure-and-prepare channel from n to k copies equals
    /// Σ_s M_{k,s} (optimal s→k cloning) ∘ (partial trace n→s) on
    /// symmetric inputs.
    Chiribella(DNK),
    /// The polynomial Σ_s M_{k,s} x^s equals its Jacobi-polynomial form at
    /// rational points.
    Jacobi(JacobiArgs),
    /// Wick moments: E (gg†)^⊗n for complex Gaussian g is n!/d^n Π_sym, for
    /// real Gaussian g it is d^−n Σ_M σ_M over perfect matchings.
    Wick(WickArgs),
    /// Exact inversion of the measure-and-prepare expansion: the partial
    /// trace n→k is a signed combination of measure-and-prepare channels.
    Expdefinetti(DNK),
}

#[derive(Subcommand, Debug)]
enum Definetti {
    /// ε = k(d+k)/(n+d) and the split MP_{n→k} = (1−ε') tr_{n−k} + ε' N with
    /// ε' = 1 − M_{k,k} ≤ ε and N a channel on symmetric inputs.
    Eps(DNK),
    /// Coefficients x_s, y_s of the exponential de Finetti recursion after r
    /// steps, with exact checks of the coefficient bounds when
    /// δ = k(d+k)/n < 1.
    Coeffs(DefinettiCoeffs),
}

#[derive(Subcommand, Debug)]
enum Bound {
    /// Per-n table of binom(r+n−1,n) Π_i binom(d_i+n−1,n) / (γ^n
    /// binom(D+n−1,n)), which bounds the probability that a random rank-r
    /// subspace has product overlap at least γ; reports the minimum.
    Tail(TailArgs),
    /// The single-n tail term at r = d²−2(d−1)−x, n = d^{2+2d/x},
    /// γ = 1 − 1/n, checked against d^−d.
    Smoothgap(SmoothGapArgs),
}

#[derive(Subcommand, Debug)]
enum Mc {
    /// E (tr Πφ)^n over Haar rank-r projectors Π on C^D equals
    /// binom(r+n−1,n)/binom(D+n−1,n).
    Moment(MomentArgs),
    /// Fraction of Haar states on C^d⊗C^d whose largest squared Schmidt
    /// coefficient is at least (16/(e d)) e^ε, against the bound e^{−dε}.
    Schmidt(SchmidtArgs),
    /// Largest product overlap of random rank-r subspaces above the
    /// threshold D > r + Σ(d_i − 1), which should stay below 1.
    Productfree(ProductFreeArgs),
    /// E φ^⊗n φ^†⊗n for a chosen vector distribution against its exact
    /// value.
    Meanpower(MeanPowerArgs),
}

#[derive(Args, Debug, Clone, Copy)]
pub struct DN {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub n: usize,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct DNK {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
}

#[derive(Args, Debug, Clone)]
pub struct JacobiArgs {
    #[command(flatten)]
    pub dnk: DNK,
    /// Comma-separated rationals such as `-1,0,1/3,1/2,2`.
    #[arg(long, value_delimiter = ',', default_value = "-1,0,1/3,1/2,2", allow_hyphen_values = true)]
    pub points: Vec<String>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldArg {
    Real,
    Complex,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct WickArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum)]
    pub field: FieldArg,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct DefinettiCoeffs {
    #[arg(long)]
    pub d: u64,
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub k: u64,
    /// Elimination steps; defaults to k.
    #[arg(long)]
    pub r: Option<u64>,
}

#[derive(Args, Debug, Clone)]
pub struct TailArgs {
    /// Comma-separated subsystem dimensions.
    #[arg(long, value_delimiter = ',', required = true)]
    pub dims: Vec<usize>,
    #[arg(long)]
    pub r: usize,
    /// Overlap threshold γ, as a decimal or `p/q`.
    #[arg(long)]
    pub gamma: String,
    #[arg(long, default_value_t = symsub::concentration::DEFAULT_TAIL_NMAX)]
    pub nmax: u64,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct SmoothGapArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub x: usize,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct MomentArgs {
    /// Total dimension D.
    #[arg(long)]
    pub dim: usize,
    #[arg(long)]
    pub r: usize,
    #[arg(long)]
    pub n: u32,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct SchmidtArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub epsilon: f64,
}

#[derive(Args, Debug, Clone)]
pub struct ProductFreeArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub dims: Vec<usize>,
    #[arg(long)]
    pub r: usize,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = symsub::concentration::DEFAULT_RESTARTS)]
    pub restarts: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerArg {
    Haar,
    GaussianReal,
    GaussianComplex,
    RealUnit,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct MeanPowerArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = SamplerArg::Haar)]
    pub sampler: SamplerArg,
}

/// Failure modes that abort a command before a report exists.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Guard(String),
}

impl From<SymsubError> for CliError {
    fn from(e: SymsubError) -> Self {
        match e {
            SymsubError::DimensionGuard { .. } => CliError::Guard(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

fn dispatch(cmd: &Command, g: &Global) -> Result<Report, CliError> {
    use commands as c;
    match cmd {
        Command::Dims(a) => c::dims(a, g),
        Command::Coeffs(a) => c::coeffs(a, g),
        Command::Verify(v) => match v {
            Verify::Psym(a) => c::verify_psym(a, g),
            Verify::Spans(a) => c::verify_spans(a, g),
            Verify::CommutantDim(a) => c::verify_commutant_dim(a, g),
            Verify::Chiribella(a) => c::verify_chiribella(a, g),
            Verify::Jacobi(a) => c::verify_jacobi(a, g),
            Verify::Wick(a) => c::verify_wick(a, g),
            Verify::Expdefinetti(a) => c::verify_expdefinetti(a, g),
        },
        Command::Definetti(v) => match v {
            Definetti::Eps(a) => c::definetti_eps(a, g),
            Definetti::Coeffs(a) => c::definetti_coeffs(a, g),
        },
        Command::Bound(v) => match v {
            Bound::Tail(a) => c::bound_tail(a, g),
            Bound::Smoothgap(a) => c::bound_smoothgap(a, g),
        },
        Command::Mc(v) => match v {
            Mc::Moment(a) => c::mc_moment(a, g),
            Mc::Schmidt(a) => c::mc_schmidt(a, g),
            Mc::Productfree(a) => c::mc_productfree(a, g),
            Mc::Meanpower(a) => c::mc_meanpower(a, g),
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let start = Instant::now();
    match dispatch(&cli.command, &cli.global) {
        Ok(mut report) => {
            report.elapsed_ms = start.elapsed().as_millis();
            match cli.global.format {
                Format::Json => println!("{}", report.to_json()),
                Format::Csv => print!("{}", report.to_csv()),
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Guard(msg)) => {
            eprintln!("error: {msg}\nraise the limit with --max-dim or SYMSUB_MAX_DIM if the machine can hold it");
            ExitCode::from(3)
        }
    }
}
