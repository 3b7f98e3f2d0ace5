//! Reference loss distributions that bypass the recursion: exhaustive
//! enumeration of every `(X, V, U)` outcome for small pools and Monte Carlo
//! simulation for any pool.
//!
//! Simulation `k` draws from a ChaCha8 generator seeded with the run seed
//! and switched to stream `k`, so the histogram does not depend on how
//! simulations are spread over threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{ContagionParams, LossDistribution};

/// Largest pool accepted by [`enumerate_losses`].
pub const MAX_ENUMERATION_NAMES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n_sims: usize,
    pub seed: u64,
    pub params: ContagionParams,
    pub loss_units: Vec<u32>,
    pub unit_loss_fraction: f64,
}

impl SimulationConfig {
    fn validate(&self) -> Result<()> {
        if self.n_sims == 0 {
            return Err(Error::invalid("n_sims must be at least 1"));
        }
        if self.loss_units.len() != self.params.len() {
            return Err(Error::LengthMismatch {
                what: "loss units vs names",
                left: self.loss_units.len(),
                right: self.params.len(),
            });
        }
        if self.loss_units.contains(&0) {
            return Err(Error::invalid("loss units must be >= 1"));
        }
        Ok(())
    }
}

/// Loss in units of one simulated scenario. `scratch` receives each name's
/// `(X_i, U_i)`.
fn simulate_one(
    rng: &mut ChaCha8Rng,
    params: &ContagionParams,
    units: &[u32],
    scratch: &mut [(bool, bool)],
) -> usize {
    let mut infectors = 0usize;
    for (i, slot) in scratch.iter_mut().enumerate() {
        let x = rng.random::<f64>() < params.p[i];
        let v = rng.random::<f64>() < params.v[i];
        let u = rng.random::<f64>() < params.u[i];
        *slot = (x, u);
        infectors += usize::from(x && v);
    }
    // A name that did not default on its own is not an infector, so every
    // infector counts as "another" name for it.
    scratch
        .iter()
        .zip(units)
        .filter(|(&(x, u), _)| x || (!u && infectors > 0))
        .map(|(_, &d)| d as usize)
        .sum()
}

/// Empirical loss distribution from `n_sims` scenarios of the model.
pub fn simulate_losses(config: &SimulationConfig) -> Result<LossDistribution> {
    config.validate()?;
    let total: usize = config.loss_units.iter().map(|&d| d as usize).sum();
    let n = config.params.len();
    let counts = (0..config.n_sims)
        .into_par_iter()
        .fold(
            || (vec![0u64; total + 1], vec![(false, false); n]),
            |(mut hist, mut scratch), k| {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(k as u64);
                let loss = simulate_one(&mut rng, &config.params, &config.loss_units, &mut scratch);
                hist[loss] += 1;
                (hist, scratch)
            },
        )
        .map(|(hist, _)| hist)
        .reduce(
            || vec![0u64; total + 1],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    let pmf = counts
        .iter()
        .map(|&c| c as f64 / config.n_sims as f64)
        .collect();
    LossDistribution::new(pmf, config.unit_loss_fraction)
}

/// Exact results of [`enumerate_losses`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Enumeration {
    pub distribution: LossDistribution,
    /// `joint_default[i][j] = P(Z_i = 1, Z_j = 1)`; the diagonal holds the
    /// marginals.
    pub joint_default: Vec<Vec<f64>>,
    pub marginals: Vec<f64>,
    /// Sum of all enumerated state probabilities.
    pub total_probability: f64,
}

/// Probability of every bit pattern of `n` independent Bernoulli draws.
fn pattern_probabilities(q: &[f64]) -> Vec<f64> {
    let n = q.len();
    (0..1usize << n)
        .map(|mask| {
            (0..n)
                .map(|i| if mask >> i & 1 == 1 { q[i] } else { 1.0 - q[i] })
                .product()
        })
        .collect()
}

/// Sums the probabilities of all `2^{3n}` outcomes of `(X, V, U)`.
#[allow(clippy::needless_range_loop)]
pub fn enumerate_losses(
    params: &ContagionParams,
    loss_units: &[u32],
    unit_loss_fraction: f64,
) -> Result<Enumeration> {
    let n = params.len();
    if n == 0 {
        return Err(Error::EmptyPortfolio);
    }
    if n > MAX_ENUMERATION_NAMES {
        return Err(Error::invalid(format!(
            "enumeration supports at most {MAX_ENUMERATION_NAMES} names, got {n}"
        )));
    }
    if loss_units.len() != n {
        return Err(Error::LengthMismatch {
            what: "loss units vs names",
            left: loss_units.len(),
            right: n,
        });
    }
    let states = 1usize << n;
    let px = pattern_probabilities(&params.p);
    let pv = pattern_probabilities(&params.v);
    let pu = pattern_probabilities(&params.u);

    // Probability of each default pattern Z.
    let mut by_default = vec![0.0; states];
    for x in 0..states {
        for v in 0..states {
            let w = px[x] * pv[v];
            if w == 0.0 {
                continue;
            }
            let infectors = x & v;
            // Names with at least one infector other than themselves.
            let exposed = match infectors.count_ones() {
                0 => 0,
                1 => (states - 1) & !infectors,
                _ => states - 1,
            };
            for u in 0..states {
                let z = x | (exposed & !u);
                by_default[z] += w * pu[u];
            }
        }
    }

    let total_units: usize = loss_units.iter().map(|&d| d as usize).sum();
    let mut pmf = vec![0.0; total_units + 1];
    let mut joint = vec![vec![0.0; n]; n];
    for (z, &prob) in by_default.iter().enumerate() {
        let loss: usize = (0..n)
            .filter(|&i| z >> i & 1 == 1)
            .map(|i| loss_units[i] as usize)
            .sum();
        pmf[loss] += prob;
        for i in 0..n {
            if z >> i & 1 == 1 {
                for j in 0..n {
                    if z >> j & 1 == 1 {
                        joint[i][j] += prob;
                    }
                }
            }
        }
    }
    let total_probability = by_default.iter().sum();
    let marginals = (0..n).map(|i| joint[i][i]).collect();
    Ok(Enumeration {
        distribution: LossDistribution::new(pmf, unit_loss_fraction)?,
        joint_default: joint,
        marginals,
        total_probability,
    })
}
