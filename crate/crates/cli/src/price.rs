use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use contagio::calibration::QuoteEngine;
use contagio::market::{load_curve, load_portfolio, write_quotes};
use contagio::{Quote, Variant};
use serde::Serialize;
use serde_json::json;

use crate::meta::{emit_json, Metadata};
use crate::{named_parameters, MarketArgs, ModelArgs};

#[derive(Args)]
pub struct PriceArgs {
    #[command(flatten)]
    market: MarketArgs,
    #[arg(long)]
    model: Variant,
    #[arg(long, value_delimiter = ',', required = true)]
    params: Vec<f64>,
    /// Also write the quotes in the quotes.csv input format.
    #[arg(long)]
    quotes_csv: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    model_args: ModelArgs,
}

#[derive(Serialize)]
struct PriceOutput {
    metadata: Metadata,
    model: String,
    parameters: BTreeMap<String, f64>,
    quotes: Vec<Quote>,
}

pub fn run(args: PriceArgs) -> Result<()> {
    let portfolio = load_portfolio(&args.market.portfolio, args.market.recovery)?;
    let curve = load_curve(&args.market.curve)?;
    let settings = args.model_args.settings();
    let engine = QuoteEngine::new(args.model.clone(), portfolio, curve, settings)?;
    let quotes = engine.standard_quotes(&args.params)?;
    if let Some(path) = &args.quotes_csv {
        write_quotes(path, &quotes)?;
    }
    let parameters = json!({
        "model": args.model.to_string(),
        "params": args.params,
        "recovery": args.market.recovery,
        "nodes": settings.nodes,
        "eta": settings.eta,
        "heterogeneous_factor": settings.heterogeneous_factor,
    });
    let output = PriceOutput {
        metadata: Metadata::new("price", &[&args.market.portfolio, &args.market.curve], parameters)?,
        model: args.model.to_string(),
        parameters: named_parameters(&args.model, &args.params),
        quotes,
    };
    emit_json(&output, args.out.as_ref())
}
