use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::Args;
use contagio::analytics::{pairwise_default_correlation, risk_summary, CorrelationModel, RiskSummary};
use contagio::market::load_portfolio;
use contagio::{map_parameters, LossDistribution, Model, Variant};
use serde::Serialize;
use serde_json::json;

use crate::meta::{emit_json, write_file, Metadata};
use crate::{named_parameters, ModelArgs};

#[derive(Args)]
pub struct DistArgs {
    /// Model variant, e.g. CON-FLAT, OFG, COND-BNK, MIX-FIN.
    #[arg(long)]
    model: Variant,
    /// Model parameters in the variant's order (omega, rho, pi).
    #[arg(long, value_delimiter = ',', required = true)]
    params: Vec<f64>,
    /// Portfolio CSV; without it a homogeneous pool is used.
    #[arg(long)]
    portfolio: Option<PathBuf>,
    #[arg(long, default_value_t = contagio::market::STANDARD_RECOVERY)]
    recovery: f64,
    /// Horizon in years for portfolio marginals.
    #[arg(long, default_value_t = 5.0)]
    horizon: f64,
    /// Homogeneous pool size.
    #[arg(long, default_value_t = 125)]
    n: usize,
    /// Homogeneous marginal default probability.
    #[arg(long, default_value_t = 0.05)]
    p_tilde: f64,
    /// Homogeneous infectivity scale.
    #[arg(long, default_value_t = 0.1)]
    mu: f64,
    /// Homogeneous loss given default.
    #[arg(long, default_value_t = 1.0)]
    lgd: f64,
    /// Credit VaR confidence level.
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
    /// PMF CSV with columns defaults, loss_fraction, probability.
    #[arg(long)]
    pmf: Option<PathBuf>,
    /// Summary JSON (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    model_args: ModelArgs,
}

#[derive(Serialize)]
struct DistOutput {
    metadata: Metadata,
    model: String,
    parameters: BTreeMap<String, f64>,
    loss_units: usize,
    unit_loss_fraction: f64,
    summary: RiskSummary,
    /// Closed form, only for homogeneous pools.
    default_correlation: Option<f64>,
    total_probability: f64,
}

pub fn pmf_csv(dist: &LossDistribution) -> String {
    let mut out = String::from("defaults,loss_fraction,probability\n");
    for (h, p) in dist.pmf.iter().enumerate() {
        writeln!(out, "{h},{},{p}", h as f64 * dist.unit_loss_fraction).unwrap();
    }
    out
}

fn homogeneous_correlation(model: &Model, args: &DistArgs) -> Result<f64> {
    let n = args.n;
    let p = vec![args.p_tilde; n];
    let mu = vec![args.mu * args.model_args.eta; n];
    let corr = match *model {
        Model::Ofg { rho } => CorrelationModel::Factor { p_tilde: args.p_tilde, rho },
        Model::Con { omega } => CorrelationModel::Contagion(map_parameters(&p, omega, &mu)?),
        Model::Cond { omega, rho } => CorrelationModel::Conditional {
            p_tilde: args.p_tilde,
            omega,
            mu: mu[0],
            rho,
            n,
            nodes: args.model_args.nodes,
        },
        Model::Mix { omega, rho, pi } => CorrelationModel::Mixture {
            contagion: map_parameters(&p, omega, &mu)?,
            p_tilde: args.p_tilde,
            rho,
            pi,
        },
    };
    Ok(pairwise_default_correlation(&corr)?)
}

pub fn run(args: DistArgs) -> Result<()> {
    let model = args.model.model(&args.params)?;
    let settings = args.model_args.settings();
    let mut inputs: Vec<&Path> = Vec::new();
    let (dist, correlation) = match &args.portfolio {
        Some(path) => {
            inputs.push(path);
            let portfolio = load_portfolio(path, args.recovery)?;
            let spec = &portfolio.spec;
            let mu_star = args.model.mu_star(&spec.sectors, settings.eta)?;
            let dist = model.distribution(
                &portfolio.marginals(args.horizon),
                &mu_star,
                &spec.loss_units,
                spec.unit_loss_fraction(),
                &settings,
            )?;
            (dist, None)
        }
        None => {
            if args.n == 0 {
                return Err(contagio::Error::EmptyPortfolio.into());
            }
            let mu_star = vec![args.mu * settings.eta; args.n];
            let dist = model.distribution(
                &vec![args.p_tilde; args.n],
                &mu_star,
                &vec![1; args.n],
                args.lgd / args.n as f64,
                &settings,
            )?;
            let corr = if args.n >= 2 && args.p_tilde > 0.0 && args.p_tilde < 1.0 {
                Some(homogeneous_correlation(&model, &args)?)
            } else {
                None
            };
            (dist, corr)
        }
    };
    let summary = risk_summary(&dist, args.confidence)?;
    if let Some(path) = &args.pmf {
        write_file(path, pmf_csv(&dist).as_bytes())?;
    }
    let parameters = json!({
        "model": args.model.to_string(),
        "params": args.params,
        "portfolio": args.portfolio.as_ref().map(|p| p.display().to_string()),
        "recovery": args.recovery,
        "horizon": args.horizon,
        "n": args.n,
        "p_tilde": args.p_tilde,
        "mu": args.mu,
        "lgd": args.lgd,
        "confidence": args.confidence,
        "nodes": settings.nodes,
        "eta": settings.eta,
        "heterogeneous_factor": settings.heterogeneous_factor,
    });
    let output = DistOutput {
        metadata: Metadata::new("dist", &inputs, parameters)?,
        model: args.model.to_string(),
        parameters: named_parameters(&args.model, &args.params),
        loss_units: dist.ell_bar(),
        unit_loss_fraction: dist.unit_loss_fraction,
        summary,
        default_correlation: correlation,
        total_probability: dist.total_mass(),
    };
    emit_json(&output, args.out.as_ref())
}
