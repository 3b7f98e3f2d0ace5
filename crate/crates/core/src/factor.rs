//! Gaussian common factor extensions.
//!
//! Latent credit quality is `sqrt(rho) Y + sqrt(1 - rho) eps_i`; conditional
//! on `Y = y` names are independent with default probability
//! `Phi((Phi^-1(p~) - sqrt(rho) y) / sqrt(1 - rho))`. The factor is
//! integrated out with an `m`-point Gauss-Hermite rule.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{contagion_loss_distribution, ContagionParams, LossDistribution};
use crate::mapping::map_allowing_zero;
use crate::normal;

pub const MAX_NODES: usize = 64;
pub const DEFAULT_NODES: usize = 10;

/// Nodes and weights for `E[f(Y)]`, `Y ~ N(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&y, &w)| w * f(y))
            .sum()
    }
}

/// `m`-point Gauss-Hermite rule rescaled to the standard normal measure.
///
/// Roots of the physicists' Hermite polynomial are found by Newton iteration
/// on the orthonormal three-term recurrence, seeded with the usual
/// asymptotic guesses; nodes become `sqrt(2) x_j` and weights `w_j / sqrt(pi)`.
pub fn gauss_hermite_rule(m: usize) -> Result<QuadratureRule> {
    if m == 0 {
        return Err(Error::invalid("quadrature needs at least one node"));
    }
    if m > MAX_NODES {
        return Err(Error::invalid(format!(
            "{m} quadrature nodes requested, at most {MAX_NODES} supported"
        )));
    }
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let mf = m as f64;
    let half = m.div_ceil(2);
    let mut roots = vec![0.0; half];
    let mut raw_weights = vec![0.0; half];
    let mut z = 0.0_f64;
    for i in 0..half {
        z = match i {
            0 => (2.0 * mf + 1.0).sqrt() - 1.855_75 * (2.0 * mf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * mf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * roots[0],
            3 => 1.91 * z - 0.91 * roots[1],
            _ => 2.0 * z - roots[i - 2],
        };
        let mut derivative = 0.0;
        let mut converged = false;
        for _ in 0..200 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..m {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            derivative = (2.0 * mf).sqrt() * p2;
            let step = p1 / derivative;
            z -= step;
            if step.abs() <= 1e-15 * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Numerical(format!(
                "Hermite root {i} of {m} did not converge"
            )));
        }
        roots[i] = z;
        raw_weights[i] = 2.0 / (derivative * derivative);
    }
    // Mirror into ascending order.
    let mut nodes = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for i in 0..half {
        nodes.push(-roots[i]);
        weights.push(raw_weights[i]);
    }
    let mirrored = if m % 2 == 1 { half - 1 } else { half };
    for i in (0..mirrored).rev() {
        nodes.push(roots[i]);
        weights.push(raw_weights[i]);
    }
    if m % 2 == 1 {
        nodes[half - 1] = 0.0;
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    let sqrt_pi = std::f64::consts::PI.sqrt();
    for x in nodes.iter_mut() {
        *x *= sqrt2;
    }
    for w in weights.iter_mut() {
        *w /= sqrt_pi;
    }
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    Ok(QuadratureRule { nodes, weights })
}

fn check_rho(rho: f64) -> Result<()> {
    if (0.0..1.0).contains(&rho) {
        Ok(())
    } else {
        Err(Error::invalid(format!("factor correlation {rho} outside [0, 1)")))
    }
}

/// Default probability conditional on the factor value `y`.
pub fn conditional_default_prob(p_tilde: f64, rho: f64, y: f64) -> Result<f64> {
    if !(p_tilde > 0.0 && p_tilde < 1.0) {
        return Err(Error::invalid(format!(
            "marginal default probability {p_tilde} outside (0, 1)"
        )));
    }
    check_rho(rho)?;
    Ok(conditional_from_threshold(normal::inv_cdf(p_tilde), p_tilde, rho, y))
}

#[inline]
fn conditional_from_threshold(theta: f64, p_tilde: f64, rho: f64, y: f64) -> f64 {
    if rho == 0.0 {
        return p_tilde;
    }
    normal::cdf((theta - rho.sqrt() * y) / (1.0 - rho).sqrt())
}

fn conditional_marginals(p_tilde: &[f64], thresholds: &[f64], rho: f64, y: f64) -> Vec<f64> {
    p_tilde
        .iter()
        .zip(thresholds)
        .map(|(&p, &t)| conditional_from_threshold(t, p, rho, y))
        .collect()
}

fn thresholds(p_tilde: &[f64]) -> Result<Vec<f64>> {
    if p_tilde.is_empty() {
        return Err(Error::EmptyPortfolio);
    }
    p_tilde
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            if p == 0.0 {
                Ok(f64::NEG_INFINITY)
            } else if p > 0.0 && p < 1.0 {
                Ok(normal::inv_cdf(p))
            } else {
                Err(Error::invalid(format!(
                    "marginal default probability of name {i} is {p}, must lie in [0, 1)"
                )))
            }
        })
        .collect()
}

fn mix_nodes(
    rule: &QuadratureRule,
    conditional: Vec<LossDistribution>,
    unit_loss_fraction: f64,
) -> Result<LossDistribution> {
    let len = conditional[0].pmf.len();
    let mut pmf = vec![0.0; len];
    for (dist, &w) in conditional.iter().zip(&rule.weights) {
        for (acc, &x) in pmf.iter_mut().zip(&dist.pmf) {
            *acc += w * x;
        }
    }
    LossDistribution::new(pmf, unit_loss_fraction)
}

/// One-factor Gaussian loss distribution.
///
/// Each node runs the contagion recursion with contagion switched off
/// (`v = 0`, `u = 1`), which reduces it to the standard convolution of
/// conditionally independent defaults.
pub fn ofg_loss_distribution(
    p_tilde: &[f64],
    rho: f64,
    m: usize,
    loss_units: &[u32],
    unit_loss_fraction: f64,
) -> Result<LossDistribution> {
    check_rho(rho)?;
    let rule = gauss_hermite_rule(m)?;
    let theta = thresholds(p_tilde)?;
    let conditional = rule
        .nodes
        .par_iter()
        .map(|&y| {
            let params = ContagionParams::independent(conditional_marginals(p_tilde, &theta, rho, y))?;
            contagion_loss_distribution(&params, loss_units, unit_loss_fraction)
        })
        .collect::<Result<Vec<_>>>()?;
    mix_nodes(&rule, conditional, unit_loss_fraction)
}

/// Contagion applied on top of the factor: at every node the conditional
/// marginals are mapped with the same `omega` and `mu*`, the contagion
/// recursion runs, and node distributions are averaged.
pub fn cond_contagion_distribution(
    p_tilde: &[f64],
    omega: f64,
    mu_star: &[f64],
    rho: f64,
    m: usize,
    loss_units: &[u32],
    unit_loss_fraction: f64,
) -> Result<LossDistribution> {
    check_rho(rho)?;
    let rule = gauss_hermite_rule(m)?;
    let conditional = cond_node_params(p_tilde, omega, mu_star, rho, &rule)?
        .par_iter()
        .map(|params| contagion_loss_distribution(params, loss_units, unit_loss_fraction))
        .collect::<Result<Vec<_>>>()?;
    mix_nodes(&rule, conditional, unit_loss_fraction)
}

/// Contagion parameters at each quadrature node.
pub fn cond_node_params(
    p_tilde: &[f64],
    omega: f64,
    mu_star: &[f64],
    rho: f64,
    rule: &QuadratureRule,
) -> Result<Vec<ContagionParams>> {
    check_rho(rho)?;
    let theta = thresholds(p_tilde)?;
    rule.nodes
        .iter()
        .enumerate()
        .map(|(node, &y)| {
            let marginals = conditional_marginals(p_tilde, &theta, rho, y);
            if let Some(i) = marginals.iter().position(|&x| x >= 1.0) {
                return Err(Error::InfeasibleNode {
                    node,
                    y,
                    source: Box::new(Error::Numerical(format!(
                        "conditional default probability of name {i} rounds to 1"
                    ))),
                });
            }
            map_allowing_zero(&marginals, omega, mu_star).map_err(|e| Error::InfeasibleNode {
                node,
                y,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Two-regime mixture: contagion with probability `pi`, factor otherwise.
pub fn mixture_distribution(
    dist_con: &LossDistribution,
    dist_ofg: &LossDistribution,
    pi: f64,
) -> Result<LossDistribution> {
    if !(0.0..=1.0).contains(&pi) {
        return Err(Error::invalid(format!("mixing probability {pi} outside [0, 1]")));
    }
    if dist_con.pmf.len() != dist_ofg.pmf.len() {
        return Err(Error::LengthMismatch {
            what: "mixture supports",
            left: dist_con.pmf.len(),
            right: dist_ofg.pmf.len(),
        });
    }
    let (a, b) = (dist_con.unit_loss_fraction, dist_ofg.unit_loss_fraction);
    if (a - b).abs() > 1e-14 * a.abs().max(b.abs()) {
        return Err(Error::invalid(format!("mixture unit sizes differ: {a} vs {b}")));
    }
    let pmf = dist_con
        .pmf
        .iter()
        .zip(&dist_ofg.pmf)
        .map(|(&c, &o)| pi * c + (1.0 - pi) * o)
        .collect();
    Ok(LossDistribution {
        pmf,
        unit_loss_fraction: a,
    })
}
