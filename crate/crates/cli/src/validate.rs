use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Result};
use clap::Args;
use contagio::analytics::kl_divergence;
use contagio::loss::{contagion_loss_distribution, no_loss_probability};
use contagio::oracle::MAX_ENUMERATION_NAMES;
use contagio::{enumerate_losses, map_parameters, simulate_losses, ContagionParams, SimulationConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::meta::{emit_json, Metadata};
use crate::resolve_seed;

/// Largest recursion/enumeration gap accepted before validation fails.
const ORACLE_TOLERANCE: f64 = 1e-12;

#[derive(Args)]
pub struct ValidateArgs {
    /// Homogeneous pool for the Monte Carlo comparison.
    #[arg(long, default_value_t = 125)]
    n: usize,
    #[arg(long, default_value_t = 0.05)]
    p_tilde: f64,
    #[arg(long, default_value_t = 0.5)]
    omega: f64,
    #[arg(long, default_value_t = 0.1)]
    mu: f64,
    /// Monte Carlo sample sizes.
    #[arg(long, value_delimiter = ',', default_value = "1000,2500,5000,10000,20000,50000")]
    sims: Vec<usize>,
    /// Independent Monte Carlo runs per sample size.
    #[arg(long, default_value_t = 20)]
    runs: u64,
    /// Base seed; run k uses seed + k. CONTAGIO_SEED overrides it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Pool size of the random enumeration checks.
    #[arg(long, default_value_t = 4)]
    enum_names: usize,
    /// Number of random enumeration checks.
    #[arg(long, default_value_t = 200)]
    instances: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct KlRow {
    n_sims: usize,
    mean: f64,
    median: f64,
}

#[derive(Serialize)]
struct OracleCheck {
    names: usize,
    instances: usize,
    max_abs_diff: f64,
    max_no_loss_diff: f64,
}

#[derive(Serialize)]
struct ValidateOutput {
    metadata: Metadata,
    kl: Vec<KlRow>,
    enumeration: OracleCheck,
    passed: bool,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 0 {
        0.5 * (xs[m - 1] + xs[m])
    } else {
        xs[m]
    }
}

fn enumeration_check(names: usize, instances: usize, seed: u64) -> Result<OracleCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut max_abs_diff, mut max_no_loss_diff) = (0.0f64, 0.0f64);
    for _ in 0..instances {
        let mut draw = || (0..names).map(|_| rng.random::<f64>()).collect::<Vec<_>>();
        let (p, u, v) = (draw(), draw(), draw());
        let params = ContagionParams::new(p, u, v)?;
        let units = vec![1; names];
        let rec = contagion_loss_distribution(&params, &units, 1.0 / names as f64)?;
        let exact = enumerate_losses(&params, &units, 1.0 / names as f64)?;
        for (a, b) in rec.pmf.iter().zip(&exact.distribution.pmf) {
            max_abs_diff = max_abs_diff.max((a - b).abs());
        }
        max_no_loss_diff = max_no_loss_diff.max((rec.pmf[0] - no_loss_probability(&params)).abs());
    }
    Ok(OracleCheck {
        names,
        instances,
        max_abs_diff,
        max_no_loss_diff,
    })
}

pub fn run(args: ValidateArgs) -> Result<()> {
    if args.enum_names == 0 || args.enum_names > MAX_ENUMERATION_NAMES {
        return Err(contagio::Error::InvalidInput(format!(
            "--enum-names must lie in 1..={MAX_ENUMERATION_NAMES}"
        ))
        .into());
    }
    if args.runs == 0 || args.sims.is_empty() {
        return Err(contagio::Error::InvalidInput("--runs and --sims must be non-empty".into()).into());
    }
    let seed = resolve_seed(args.seed)?;
    let n = args.n;
    let params = map_parameters(&vec![args.p_tilde; n], args.omega, &vec![args.mu; n])?;
    let unit = 1.0 / n as f64;

    let timer = Instant::now();
    let exact = contagion_loss_distribution(&params, &vec![1; n], unit)?;
    let recursion_ms = timer.elapsed().as_secs_f64() * 1e3;

    println!("Monte Carlo vs recursion, n = {n}, {} runs per size", args.runs);
    println!("{:>8} {:>12} {:>12} {:>14}", "n_sims", "mean KL", "median KL", "MC time (ms)");
    let mut rows = Vec::new();
    for &sims in &args.sims {
        let timer = Instant::now();
        let kls = (0..args.runs)
            .map(|k| {
                let cfg = SimulationConfig {
                    n_sims: sims,
                    seed: seed.wrapping_add(k),
                    params: params.clone(),
                    loss_units: vec![1; n],
                    unit_loss_fraction: unit,
                };
                kl_divergence(&exact.pmf, &simulate_losses(&cfg)?.pmf)
            })
            .collect::<contagio::Result<Vec<f64>>>()?;
        let per_run_ms = timer.elapsed().as_secs_f64() * 1e3 / args.runs as f64;
        let mean = kls.iter().sum::<f64>() / kls.len() as f64;
        let median = median(kls);
        println!("{sims:>8} {mean:>12.4e} {median:>12.4e} {per_run_ms:>14.2}");
        rows.push(KlRow { n_sims: sims, mean, median });
    }
    println!("recursion time: {recursion_ms:.2} ms");

    let check = enumeration_check(args.enum_names, args.instances, seed)?;
    let passed = check.max_abs_diff < ORACLE_TOLERANCE;
    println!(
        "enumeration, {} names x {} instances: max |recursion - enumeration| = {:.2e}, max |pmf[0] - prod(1 - p)| = {:.2e} [{}]",
        check.names,
        check.instances,
        check.max_abs_diff,
        check.max_no_loss_diff,
        if passed { "ok" } else { "FAIL" }
    );

    let parameters = json!({
        "n": n,
        "p_tilde": args.p_tilde,
        "omega": args.omega,
        "mu": args.mu,
        "sims": args.sims,
        "runs": args.runs,
        "seed": seed,
        "enum_names": args.enum_names,
        "instances": args.instances,
    });
    let output = ValidateOutput {
        metadata: Metadata::new("validate", &[], parameters)?,
        kl: rows,
        enumeration: check,
        passed,
    };
    if let Some(path) = &args.out {
        emit_json(&output, Some(path))?;
    }
    if !passed {
        bail!("recursion and enumeration differ by more than {ORACLE_TOLERANCE:e}");
    }
    Ok(())
}
