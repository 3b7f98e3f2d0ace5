use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use contagio::{calibrate, CalibrationOptions, CalibrationResult, MarketData, Variant};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::meta::{emit_json, Metadata};
use crate::{parse_variants, MarketArgs, ModelArgs};

#[derive(Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    market: MarketArgs,
    /// CSV with columns instrument, quote, quote_type.
    #[arg(long)]
    quotes: PathBuf,
    /// Variants to fit; repeat the flag or pass `all`.
    #[arg(long = "model", required = true)]
    models: Vec<String>,
    #[arg(long, default_value_t = 500)]
    max_iterations: usize,
    /// Also start from two jittered points and keep the best fit.
    #[arg(long)]
    multistart: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    model_args: ModelArgs,
}

#[derive(Serialize)]
struct CalibrateOutput {
    metadata: Metadata,
    results: Vec<CalibrationResult>,
}

pub fn calibrate_all(variants: &[Variant], market: &MarketData, options: &CalibrationOptions) -> Result<Vec<CalibrationResult>> {
    let results = variants
        .par_iter()
        .map(|v| calibrate(v, market, options))
        .collect::<contagio::Result<Vec<_>>>()?;
    Ok(results)
}

pub fn print_table(results: &[CalibrationResult]) {
    eprintln!("{:<10} {:>12} {:>10}  parameters", "model", "objective", "MAE");
    for r in results {
        let params: Vec<String> = r
            .parameters
            .iter()
            .map(|(k, v)| {
                let flag = if r.on_bound.contains(k) { "*" } else { "" };
                format!("{k}={v:.4}{flag}")
            })
            .collect();
        eprintln!("{:<10} {:>12.4e} {:>10.4}  {}", r.variant, r.objective_value, r.mae, params.join(" "));
    }
}

pub fn run(args: CalibrateArgs) -> Result<()> {
    let variants = parse_variants(&args.models)?;
    let market = MarketData::load(
        &args.market.portfolio,
        &args.market.curve,
        Some(&args.quotes),
        args.market.recovery,
    )?;
    let options = CalibrationOptions {
        max_iterations: args.max_iterations,
        multistart: args.multistart,
        settings: args.model_args.settings(),
        ..CalibrationOptions::default()
    };
    let results = calibrate_all(&variants, &market, &options)?;
    print_table(&results);
    let parameters = json!({
        "models": variants.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
        "recovery": args.market.recovery,
        "options": options,
    });
    let output = CalibrateOutput {
        metadata: Metadata::new(
            "calibrate",
            &[&args.market.portfolio, &args.market.curve, &args.quotes],
            parameters,
        )?,
        results,
    };
    emit_json(&output, args.out.as_ref())
}
