use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::Args;
use contagio::market::{load_curve, load_portfolio, load_quotes};
use contagio::{calibrate, CalibrationOptions, MarketData, ModelSettings};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::meta::{emit_json, Metadata};
use crate::{parse_variants, MarketArgs};

#[derive(Args)]
pub struct SweepArgs {
    #[command(flatten)]
    market: MarketArgs,
    /// Quotes files, one per date; MAE is averaged across them.
    #[arg(long = "quotes", required = true)]
    quotes: Vec<PathBuf>,
    #[arg(long = "model", required = true)]
    models: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.75,1,1.25,1.5")]
    eta: Vec<f64>,
    #[arg(long, short = 'm', default_value_t = 10)]
    nodes: usize,
    #[arg(long, default_value_t = 500)]
    max_iterations: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct SweepRow {
    model: String,
    /// Average MAE per eta, in the order of `eta`.
    mae: Vec<f64>,
}

#[derive(Serialize)]
struct SweepOutput {
    metadata: Metadata,
    eta: Vec<f64>,
    rows: Vec<SweepRow>,
}

pub fn run(args: SweepArgs) -> Result<()> {
    let variants = parse_variants(&args.models)?;
    let portfolio = load_portfolio(&args.market.portfolio, args.market.recovery)?;
    let curve = load_curve(&args.market.curve)?;
    let dates = args
        .quotes
        .iter()
        .map(|q| {
            Ok(MarketData {
                portfolio: portfolio.clone(),
                curve: curve.clone(),
                quotes: load_quotes(q)?,
            })
        })
        .collect::<contagio::Result<Vec<_>>>()?;

    let cells: Vec<(usize, usize)> = (0..variants.len())
        .flat_map(|v| (0..args.eta.len()).map(move |e| (v, e)))
        .collect();
    let maes = cells
        .par_iter()
        .map(|&(v, e)| {
            let options = CalibrationOptions {
                max_iterations: args.max_iterations,
                settings: ModelSettings {
                    eta: args.eta[e],
                    nodes: args.nodes,
                    heterogeneous_factor: false,
                },
                ..CalibrationOptions::default()
            };
            let mut total = 0.0;
            for market in &dates {
                total += calibrate(&variants[v], market, &options)?.mae;
            }
            Ok(total / dates.len() as f64)
        })
        .collect::<contagio::Result<Vec<f64>>>()?;

    let rows: Vec<SweepRow> = variants
        .iter()
        .enumerate()
        .map(|(v, variant)| SweepRow {
            model: variant.to_string(),
            mae: maes[v * args.eta.len()..(v + 1) * args.eta.len()].to_vec(),
        })
        .collect();

    let header: Vec<String> = args.eta.iter().map(|e| format!("{:>9}", format!("eta={e}"))).collect();
    eprintln!("{:<10} {}", "model", header.join(" "));
    for row in &rows {
        let cells: Vec<String> = row.mae.iter().map(|m| format!("{m:>9.3}")).collect();
        eprintln!("{:<10} {}", row.model, cells.join(" "));
    }

    let mut inputs: Vec<&Path> = vec![&args.market.portfolio, &args.market.curve];
    inputs.extend(args.quotes.iter().map(PathBuf::as_path));
    let parameters = json!({
        "models": rows.iter().map(|r| r.model.clone()).collect::<Vec<_>>(),
        "eta": args.eta,
        "nodes": args.nodes,
        "max_iterations": args.max_iterations,
        "recovery": args.market.recovery,
    });
    let output = SweepOutput {
        metadata: Metadata::new("sweep-eta", &inputs, parameters)?,
        eta: args.eta,
        rows,
    };
    emit_json(&output, args.out.as_ref())
}
