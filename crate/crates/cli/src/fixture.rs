use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use contagio::calibration::QuoteEngine;
use contagio::market::{write_curve, write_portfolio, write_quotes, Portfolio};
use contagio::{DiscountCurve, Variant};

use crate::{resolve_seed, ModelArgs};

#[derive(Args)]
pub struct FixtureArgs {
    /// Output directory for portfolio.csv, curve.csv and quotes.csv.
    #[arg(long)]
    dir: PathBuf,
    #[arg(long, default_value_t = 125)]
    n: usize,
    /// Mean CDS spread of the pool in bps.
    #[arg(long, default_value_t = 60.0)]
    spread: f64,
    /// Spread scatter seed; CONTAGIO_SEED overrides it.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Flat continuously compounded discount rate.
    #[arg(long, default_value_t = 0.01)]
    rate: f64,
    /// Model and parameters generating the quotes.
    #[arg(long, default_value = "MIX-FLAT")]
    model: Variant,
    #[arg(long, value_delimiter = ',', default_value = "0.8,0.4,0.7")]
    params: Vec<f64>,
    #[command(flatten)]
    model_args: ModelArgs,
}

pub fn run(args: FixtureArgs) -> Result<()> {
    let seed = resolve_seed(args.seed)?;
    let portfolio = Portfolio::synthetic(args.n, args.spread, seed)?;
    let curve = DiscountCurve::flat(args.rate, 6.0)?;
    let engine = QuoteEngine::new(args.model.clone(), portfolio.clone(), curve.clone(), args.model_args.settings())?;
    let quotes = engine.standard_quotes(&args.params)?;
    std::fs::create_dir_all(&args.dir).map_err(|source| contagio::Error::Io {
        path: args.dir.display().to_string(),
        source,
    })?;
    write_portfolio(&args.dir.join("portfolio.csv"), &portfolio)?;
    write_curve(&args.dir.join("curve.csv"), &curve)?;
    write_quotes(&args.dir.join("quotes.csv"), &quotes)?;
    eprintln!(
        "wrote {} names and {} quotes from {} {:?} to {}",
        args.n,
        quotes.len(),
        args.model,
        args.params,
        args.dir.display()
    );
    Ok(())
}
