//! `skewtorsion` command-line front end.

mod report;
mod text;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use skewtorsion::catalog::{self, Params};
use skewtorsion::fuzz::{fuzz_algebraic, FuzzConfig};
use skewtorsion::geometry::Mode;
use skewtorsion::identities::{IdentityId, Mutation};
use skewtorsion::scalar::parse_rational;
use skewtorsion::{Error, Rational};

#[derive(Parser, Debug)]
#[command(
    name = "skewtorsion",
    version,
    about = "Curvature identities for metric connections with skew-symmetric torsion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate identity residuals on one or more geometries.
    Check(CheckArgs),
    /// Run every classifier and print the verdict table.
    Classify(RunArgs),
    /// Search random left-invariant geometries for counterexamples.
    Fuzz(FuzzArgs),
    /// Inspect the built-in geometries.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Subcommand, Debug)]
enum CatalogAction {
    /// List entries with their expected verdicts.
    List {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Print an entry as geometry JSON.
    Export {
        name: String,
        #[arg(long, value_parser = rational, default_value = "1")]
        lambda: Rational,
        #[arg(long, value_parser = rational, default_value = "1")]
        t: Rational,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Auto,
    Exact,
    Float,
}

impl ModeArg {
    fn resolve(self) -> Option<Mode> {
        match self {
            ModeArg::Auto => None,
            ModeArg::Exact => Some(Mode::Exact),
            ModeArg::Float => Some(Mode::Float),
        }
    }
}

#[derive(Args, Debug, Clone)]
#[group(id = "source", required = true, multiple = false)]
pub struct Source {
    /// Catalog entry name, or `all`.
    #[arg(long, group = "source")]
    pub catalog: Option<String>,
    /// Geometry JSON file.
    #[arg(long, group = "source")]
    pub input: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, value_enum, default_value_t = ModeArg::Auto)]
    pub mode: ModeArg,
    /// Residual tolerance in float mode.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Finite-difference step for chart geometries.
    #[arg(long)]
    pub h: Option<f64>,
    /// Replace the chart grid by this many seeded random points.
    #[arg(long)]
    pub grid_points: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long, value_parser = rational, default_value = "1")]
    pub lambda: Rational,
    #[arg(long, value_parser = rational, default_value = "1")]
    pub t: Rational,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    run: RunArgs,
    /// `all`, or a comma-separated list such as `GEN,RB,EIN9`.
    #[arg(long, default_value = "all")]
    identities: String,
}

#[derive(Args, Debug)]
struct FuzzArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    count: usize,
    /// A range `3..7` (inclusive) or a list `3,5,6`.
    #[arg(long, default_value = "3,5,6")]
    dims: String,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, hide = true, value_parser = ["gen-sigma"])]
    inject_mutation: Option<String>,
}

fn rational(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

/// 2: bad input, 3: unsupported request, 1: everything else.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) | Error::InvalidGeometry(_) | Error::Domain(_) | Error::Io(_) => 2,
        Error::Capability(_) => 3,
        _ => 1,
    }
}

pub fn parse_identities(s: &str) -> skewtorsion::Result<Option<Vec<IdentityId>>> {
    if s.trim().eq_ignore_ascii_case("all") {
        return Ok(None);
    }
    s.split(',').map(|x| x.trim().parse()).collect::<skewtorsion::Result<Vec<_>>>().map(Some)
}

fn parse_dims(s: &str) -> skewtorsion::Result<Vec<usize>> {
    let bad = || Error::Parse(format!("--dims expects 'a..b' or a comma list, got '{s}'"));
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        Ok((a..=b).collect())
    } else {
        s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
    }
}

/// Writes to stdout; a closed pipe is not an error.
fn out(s: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(s.as_bytes());
}

fn emit<T: serde::Serialize + ?Sized>(value: &T, format: Format, text: impl FnOnce(&T) -> String) {
    match format {
        Format::Json => out(&(serde_json::to_string_pretty(value).expect("reports serialize") + "\n")),
        Format::Text => out(&text(value)),
    }
}

fn run(cli: Cli) -> skewtorsion::Result<u8> {
    match cli.command {
        Command::Check(args) => {
            let ids = parse_identities(&args.identities)?;
            let rep = report::check(&args.run, ids.as_deref())?;
            emit(&rep, args.run.format, text::check);
            Ok(if rep.passed { 0 } else { 1 })
        }
        Command::Classify(args) => {
            let rep = report::classify(&args)?;
            emit(&rep, args.format, text::classify);
            Ok(if rep.passed { 0 } else { 1 })
        }
        Command::Fuzz(args) => {
            let cfg = FuzzConfig {
                seed: args.seed,
                count: args.count,
                dims: parse_dims(&args.dims)?,
                mutation: if args.inject_mutation.is_some() { Mutation::GenSigmaSign } else { Mutation::None },
            };
            let rep = fuzz_algebraic(&cfg)?;
            emit(&rep, args.format, text::fuzz);
            Ok(if rep.passed { 0 } else { 1 })
        }
        Command::Catalog { action: CatalogAction::List { format } } => {
            let rows = report::catalog_rows(&Params::default())?;
            emit(rows.as_slice(), format, text::catalog);
            Ok(0)
        }
        Command::Catalog { action: CatalogAction::Export { name, lambda, t } } => {
            let e = catalog::build_entry(&name, &Params { lambda, t })?;
            out(&(e.geometry.to_json().to_string_pretty() + "\n"));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
