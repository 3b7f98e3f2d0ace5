use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use contagio::{ModelSettings, Variant};

mod calibrate;
mod dist;
mod fixture;
mod meta;
mod price;
mod sweep;
mod validate;

const EXIT_VALIDATION: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "contagio", version, about = "Contagion loss distributions, CDO tranche pricing and calibration")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Loss distribution and risk summary for one model.
    Dist(dist::DistArgs),
    /// Standard tranche upfronts and index spread for one model.
    Price(price::PriceArgs),
    /// Fit one or more model variants to market quotes.
    Calibrate(calibrate::CalibrateArgs),
    /// Compare the recursion with enumeration and Monte Carlo.
    Validate(validate::ValidateArgs),
    /// Calibration error over a grid of infectivity scales.
    SweepEta(sweep::SweepArgs),
    /// Write a synthetic portfolio, curve and self-generated quotes.
    Fixture(fixture::FixtureArgs),
}

/// Portfolio and discount curve files.
#[derive(Args, Clone)]
pub struct MarketArgs {
    /// CSV with columns name, sector, cds_spread_bps.
    #[arg(long)]
    pub portfolio: PathBuf,
    /// CSV with columns time_years, discount_factor.
    #[arg(long)]
    pub curve: PathBuf,
    #[arg(long, default_value_t = contagio::market::STANDARD_RECOVERY)]
    pub recovery: f64,
}

#[derive(Args, Clone, Copy)]
pub struct ModelArgs {
    /// Gauss-Hermite nodes for the factor integral.
    #[arg(long = "nodes", short = 'm', default_value_t = 10)]
    pub nodes: usize,
    /// Scale applied to the sector infectivity parameters.
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    /// Integrate the factor model with each name's own marginal.
    #[arg(long)]
    pub heterogeneous_factor: bool,
}

impl ModelArgs {
    pub fn settings(&self) -> ModelSettings {
        ModelSettings {
            eta: self.eta,
            nodes: self.nodes,
            heterogeneous_factor: self.heterogeneous_factor,
        }
    }
}

/// Variants named on the command line; `all` expands to every variant.
pub fn parse_variants(labels: &[String]) -> Result<Vec<Variant>> {
    let mut out = Vec::new();
    for label in labels {
        if label.eq_ignore_ascii_case("all") {
            out.extend(Variant::all());
        } else {
            out.push(label.parse().map_err(|e: contagio::Error| anyhow::Error::new(e))?);
        }
    }
    Ok(out)
}

/// Parameter names of `variant` paired with `values`.
pub fn named_parameters(variant: &Variant, values: &[f64]) -> BTreeMap<String, f64> {
    variant
        .parameter_names()
        .iter()
        .map(|n| n.to_string())
        .zip(values.iter().copied())
        .collect()
}

/// `CONTAGIO_SEED` takes precedence over the command-line seed.
pub fn resolve_seed(flag: u64) -> Result<u64> {
    match std::env::var("CONTAGIO_SEED") {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| contagio::Error::InvalidInput(format!("CONTAGIO_SEED = {s:?} is not an unsigned integer")))
            .context("reading CONTAGIO_SEED"),
        Err(_) => Ok(flag),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<contagio::Error>() {
            return match e {
                contagio::Error::Io { .. } => EXIT_IO,
                e if e.is_infeasible() => EXIT_INFEASIBLE,
                _ => EXIT_VALIDATION,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_IO;
        }
    }
    EXIT_VALIDATION
}

/// The error chain joined with ": ", skipping causes whose text the
/// previous message already contains.
fn describe(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(contagio::Error::InvalidInput("--jobs must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match cli.command {
        Command::Dist(args) => dist::run(args),
        Command::Price(args) => price::run(args),
        Command::Calibrate(args) => calibrate::run(args),
        Command::Validate(args) => validate::run(args),
        Command::SweepEta(args) => sweep::run(args),
        Command::Fixture(args) => fixture::run(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", describe(&err));
            ExitCode::from(exit_code(&err))
        }
    }
}
