//! `k3eq`: lattice, binary-form, Lefschetz and action computations.
//!
//! Exit codes: 0 success, 1 verification failed, 2 invalid input,
//! 3 search budget or order limit exhausted.

mod commands;
mod input;

use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use k3eq_core::isometry::{BUDGET_ENV_VAR, DEFAULT_SEARCH_BUDGET};

#[derive(Parser, Debug)]
#[command(name = "k3eq", version, about = "Exact lattice and fixed-point computations for K3 surface actions")]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Node budget for isometry searches.
    #[arg(long, global = true, env = BUDGET_ENV_VAR, default_value_t = DEFAULT_SEARCH_BUDGET)]
    pub budget: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Discriminant forms, complements and isometries.
    #[command(subcommand)]
    Lattice(LatticeCmd),
    /// Even binary lattices.
    #[command(subcommand)]
    Forms(FormsCmd),
    /// Lefschetz fixed-point formulas.
    #[command(subcommand)]
    Lefschetz(LefschetzCmd),
    /// Cyclic actions on the Mukai lattice.
    #[command(subcommand)]
    Action(ActionCmd),
    /// Worked examples with a pass/fail summary.
    #[command(subcommand)]
    Reproduce(ReproduceCmd),
}

#[derive(Subcommand, Debug)]
pub enum LatticeCmd {
    /// Discriminant form report. INPUT is a lattice JSON file, `-`, inline
    /// JSON, or a standard name (U, E8, E8minus, K3, Mukai).
    Disc { input: String },
    /// Orthogonal complement of the span of integer vectors.
    Complement {
        input: String,
        /// Vectors as `1,0,0;0,1,0`.
        #[arg(long)]
        span: String,
    },
    /// Isometry test for definite lattices.
    Isometry { first: String, second: String },
    /// Explicit isometry between `A + U` and `B + U`, or a genus certificate.
    /// Witness columns are the images of the `B + U` basis in `A + U`.
    Stable { first: String, second: String },
}

#[derive(Args, Debug, Clone, Copy)]
pub struct SignArg {
    /// Sign of the forms.
    #[arg(long, value_enum, default_value_t = SignOpt::Positive)]
    pub sign: SignOpt,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SignOpt {
    Positive,
    Negative,
}

#[derive(Subcommand, Debug)]
pub enum FormsCmd {
    /// Reduced forms of a given determinant with genus ids.
    Enumerate {
        #[arg(long)]
        det: u64,
        #[command(flatten)]
        sign: SignArg,
    },
    /// Gauss reduction of a 2x2 Gram matrix (JSON).
    Reduce { gram: String },
    /// Genus partition of the reduced forms of a determinant.
    Genus {
        #[arg(long)]
        det: u64,
        #[command(flatten)]
        sign: SignArg,
    },
    /// Negative definite pairs in one genus, not isometric, without roots.
    Mazur {
        #[arg(long = "det-range")]
        det_range: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum LefschetzCmd {
    /// Check a fixed-point configuration against the holomorphic formula.
    Verify { config: String },
    /// Enumerate point-only configurations.
    Search {
        #[arg(long = "N")]
        order: u64,
        #[arg(long, allow_negative_numbers = true)]
        s: i64,
        #[arg(long = "max-points", default_value_t = 24)]
        max_points: u64,
        /// Only weights with gcd(i, j, N) = 1.
        #[arg(long)]
        faithful: bool,
    },
    /// Whether an action with factorization N = n m must have fixed points.
    Guarantee {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        m: u64,
    },
}

#[derive(Subcommand, Debug)]
pub enum ActionCmd {
    /// Check order, pairing preservation and exponent range.
    Validate { input: String },
    /// Factorization N = n m.
    Factor { input: String },
    /// Trace sequence and the consistency gate. Accepts an action or a
    /// declared-traces file.
    Trace { input: String },
    /// Derived-invariant comparison of two actions or trace files.
    Compare { first: String, second: String },
    /// Admissibility of the orders (n, m).
    Admissible {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        m: u64,
    },
    /// Compare a lattice with the invariant lattice of an Enriques involution.
    Enriques { input: String },
}

#[derive(Subcommand, Debug, Clone, Copy)]
pub enum ReproduceCmd {
    /// Two involutions on a rank-2 Picard lattice whose glue data differ.
    Compatible,
    /// The determinant-47 pair: same genus, not isometric, no roots.
    Mazur,
    /// Symplectic fixed-point counts from the Lefschetz formulas.
    Niktable,
}

/// A command that could not produce a result.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn invalid(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl From<k3eq_core::Error> for Failure {
    fn from(e: k3eq_core::Error) -> Self {
        let code = match e {
            k3eq_core::Error::OrderLimitExceeded { .. } => 3,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

/// Rendered output plus exit code (0, 1 or 3).
pub struct Outcome {
    pub code: u8,
    pub text: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(out) => {
            // A closed pipe (e.g. `| head`) is not an error worth reporting.
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.text.as_bytes());
            if !out.text.ends_with('\n') {
                let _ = stdout.write_all(b"\n");
            }
            ExitCode::from(out.code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
