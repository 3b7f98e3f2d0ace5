//! Risk statistics of loss distributions and pairwise default correlations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::{cond_node_params, gauss_hermite_rule};
use crate::loss::{marginal_default_probability, ContagionParams, LossDistribution};
use crate::normal;

/// Floor applied to approximating probabilities in [`kl_divergence`].
pub const KL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskSummary {
    /// Mean loss as a fraction of pool notional.
    pub expected_loss: f64,
    /// Standard deviation of the loss fraction.
    pub unexpected_loss: f64,
    /// Loss fraction quantile at `confidence`.
    pub credit_var: f64,
    /// Quantile in loss units.
    pub credit_var_units: usize,
    pub confidence: f64,
}

/// EL, UL and Credit VaR. The quantile is the smallest loss whose CDF
/// reaches the confidence level.
pub fn risk_summary(dist: &LossDistribution, confidence: f64) -> Result<RiskSummary> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::invalid(format!("confidence {confidence} outside (0, 1)")));
    }
    let unit = dist.unit_loss_fraction;
    let (mut m1, mut m2) = (0.0, 0.0);
    for (h, &x) in dist.pmf.iter().enumerate() {
        let loss = h as f64 * unit;
        m1 += loss * x;
        m2 += loss * loss * x;
    }
    let var = (m2 - m1 * m1).max(0.0);
    let mut cum = 0.0;
    let mut var_units = dist.ell_bar();
    for (h, &x) in dist.pmf.iter().enumerate() {
        cum += x;
        if cum >= confidence {
            var_units = h;
            break;
        }
    }
    Ok(RiskSummary {
        expected_loss: m1,
        unexpected_loss: var.sqrt(),
        credit_var: var_units as f64 * unit,
        credit_var_units: var_units,
        confidence,
    })
}

/// `P(Z_i = 1, Z_j = 1)` for a homogeneous contagion pool of `n` names.
pub fn joint_default_probability_homogeneous(p: f64, u: f64, v: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid(format!("joint default needs n >= 2, got {n}")));
    }
    for (name, x) in [("p", p), ("u", u), ("v", v)] {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::invalid(format!("{name} = {x} is not a probability")));
        }
    }
    let others = (1.0 - p * v).powi(n as i32 - 2);
    Ok(p * p
        + 2.0 * p * (1.0 - p) * (1.0 - u) * (1.0 - (1.0 - v) * others)
        + (1.0 - p).powi(2) * (1.0 - u).powi(2) * (1.0 - others))
}

/// Homogeneous model specifications for which a pairwise default
/// correlation is available in closed form (or by quadrature).
#[derive(Debug, Clone, PartialEq)]
pub enum CorrelationModel {
    Contagion(ContagionParams),
    Factor {
        p_tilde: f64,
        rho: f64,
    },
    Conditional {
        p_tilde: f64,
        omega: f64,
        mu: f64,
        rho: f64,
        n: usize,
        nodes: usize,
    },
    Mixture {
        contagion: ContagionParams,
        p_tilde: f64,
        rho: f64,
        pi: f64,
    },
}

/// Joint default probability and marginal.
fn contagion_moments(params: &ContagionParams) -> Result<(f64, f64)> {
    if !params.is_homogeneous() {
        return Err(Error::invalid(
            "closed-form correlation needs homogeneous parameters; use the Monte Carlo oracle",
        ));
    }
    let joint = joint_default_probability_homogeneous(params.p[0], params.u[0], params.v[0], params.len())?;
    let marginal = marginal_default_probability(params, 0)?;
    Ok((joint, marginal))
}

fn factor_moments(p_tilde: f64, rho: f64) -> Result<(f64, f64)> {
    if !(p_tilde > 0.0 && p_tilde < 1.0) {
        return Err(Error::invalid(format!("p~ {p_tilde} outside (0, 1)")));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::invalid(format!("rho {rho} outside [0, 1)")));
    }
    let theta = normal::inv_cdf(p_tilde);
    Ok((normal::bivariate_cdf(theta, theta, rho), p_tilde))
}

fn correlation(joint: f64, mean: f64) -> f64 {
    (joint - mean * mean) / (mean * (1.0 - mean))
}

/// Pairwise default correlation `rho(Z_i, Z_j)`.
///
/// * contagion: closed-form joint default probability;
/// * factor: bivariate normal orthant probability;
/// * conditional: law of total covariance over the quadrature nodes,
///   normalised by `p~ (1 - p~)`;
/// * mixture: law of total covariance over the regime indicator.
pub fn pairwise_default_correlation(model: &CorrelationModel) -> Result<f64> {
    match model {
        CorrelationModel::Contagion(params) => {
            let (joint, marginal) = contagion_moments(params)?;
            Ok(correlation(joint, marginal))
        }
        CorrelationModel::Factor { p_tilde, rho } => {
            let (joint, marginal) = factor_moments(*p_tilde, *rho)?;
            Ok(correlation(joint, marginal))
        }
        CorrelationModel::Conditional {
            p_tilde,
            omega,
            mu,
            rho,
            n,
            nodes,
        } => {
            if *n < 2 {
                return Err(Error::invalid("correlation needs at least two names"));
            }
            let rule = gauss_hermite_rule(*nodes)?;
            let per_node = cond_node_params(&vec![*p_tilde; *n], *omega, &vec![*mu; *n], *rho, &rule)?;
            let (mut within, mut mean, mut second) = (0.0, 0.0, 0.0);
            for (params, &w) in per_node.iter().zip(&rule.weights) {
                let joint = joint_default_probability_homogeneous(params.p[0], params.u[0], params.v[0], *n)?;
                let m = marginal_default_probability(params, 0)?;
                within += w * (joint - m * m);
                mean += w * m;
                second += w * m * m;
            }
            let between = second - mean * mean;
            Ok((within + between) / (p_tilde * (1.0 - p_tilde)))
        }
        CorrelationModel::Mixture {
            contagion,
            p_tilde,
            rho,
            pi,
        } => {
            if !(0.0..=1.0).contains(pi) {
                return Err(Error::invalid(format!("pi {pi} outside [0, 1]")));
            }
            let (jc, mc) = contagion_moments(contagion)?;
            let (jo, mo) = factor_moments(*p_tilde, *rho)?;
            let cov = pi * (jc - mc * mc) + (1.0 - pi) * (jo - mo * mo) + pi * (1.0 - pi) * (mc - mo).powi(2);
            let mean = pi * mc + (1.0 - pi) * mo;
            Ok(cov / (mean * (1.0 - mean)))
        }
    }
}

/// `D(P || Q) = sum_h P(h) ln(P(h) / Q(h))` with `P` the reference.
///
/// Bins with `P(h) = 0` contribute nothing; `Q(h)` is floored at
/// [`KL_FLOOR`] so empty Monte Carlo bins stay finite.
pub fn kl_divergence(p_true: &[f64], p_approx: &[f64]) -> Result<f64> {
    if p_true.len() != p_approx.len() {
        return Err(Error::LengthMismatch {
            what: "KL supports",
            left: p_true.len(),
            right: p_approx.len(),
        });
    }
    Ok(p_true
        .iter()
        .zip(p_approx)
        .filter(|(&p, _)| p > 0.0)
        .map(|(&p, &q)| p * (p / q.max(KL_FLOOR)).ln())
        .sum::<f64>()
        .max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_summary() {
        let dist = LossDistribution::no_loss(10, 0.1);
        let s = risk_summary(&dist, 0.95).unwrap();
        assert_eq!((s.expected_loss, s.unexpected_loss, s.credit_var), (0.0, 0.0, 0.0));
        assert!(risk_summary(&dist, 1.0).is_err());
        assert!(risk_summary(&dist, 0.0).is_err());
    }

    #[test]
    fn binomial_summary() {
        let n = 125;
        let p: f64 = 0.05;
        let mut pmf = vec![0.0; n + 1];
        let mut c = 1.0f64;
        for (h, x) in pmf.iter_mut().enumerate() {
            if h > 0 {
                c *= (n - h + 1) as f64 / h as f64;
            }
            *x = c * p.powi(h as i32) * (1.0 - p).powi((n - h) as i32);
        }
        let dist = LossDistribution::new(pmf, 1.0 / n as f64).unwrap();
        let s = risk_summary(&dist, 0.95).unwrap();
        assert!((s.expected_loss - 0.05).abs() < 1e-14);
        let ul = (n as f64 * p * (1.0 - p)).sqrt() / n as f64;
        assert!((s.unexpected_loss - ul).abs() < 1e-13);
        assert!((ul - 0.0195).abs() < 1e-4);
    }

    #[test]
    fn joint_default_limits() {
        let p = 0.07;
        assert!((joint_default_probability_homogeneous(p, 0.3, 0.0, 50).unwrap() - p * p).abs() < 1e-16);
        assert!((joint_default_probability_homogeneous(p, 1.0, 0.4, 50).unwrap() - p * p).abs() < 1e-16);
        assert!(joint_default_probability_homogeneous(p, 0.3, 0.2, 1).is_err());
    }

    #[test]
    fn contagion_correlation_vanishes_without_infection() {
        let no_v = ContagionParams::homogeneous(20, 0.05, 0.2, 0.0).unwrap();
        let immune = ContagionParams::homogeneous(20, 0.05, 1.0, 0.5).unwrap();
        for params in [no_v, immune] {
            let rho = pairwise_default_correlation(&CorrelationModel::Contagion(params)).unwrap();
            assert!(rho.abs() < 1e-15);
        }
        let hetero = ContagionParams::new(vec![0.1, 0.2], vec![0.5; 2], vec![0.5; 2]).unwrap();
        assert!(pairwise_default_correlation(&CorrelationModel::Contagion(hetero)).is_err());
    }

    #[test]
    fn mixture_of_identical_regimes() {
        // pi = 0 is the factor model alone.
        let con = ContagionParams::homogeneous(10, 0.03, 0.5, 0.2).unwrap();
        let f = pairwise_default_correlation(&CorrelationModel::Factor { p_tilde: 0.05, rho: 0.3 }).unwrap();
        let m = pairwise_default_correlation(&CorrelationModel::Mixture {
            contagion: con,
            p_tilde: 0.05,
            rho: 0.3,
            pi: 0.0,
        })
        .unwrap();
        assert!((f - m).abs() < 1e-15);
    }

    #[test]
    fn kl_values() {
        let p = [0.5, 0.5];
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        let d = kl_divergence(&p, &[0.25, 0.75]).unwrap();
        let expected = 0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        assert!((d - expected).abs() < 1e-15);
        assert!((d - 0.143_841).abs() < 1e-6);
        // Zero reference bins are skipped, zero approximating bins floored.
        assert!(kl_divergence(&[0.0, 1.0], &[0.5, 0.5]).unwrap() > 0.0);
        let floored = kl_divergence(&[0.5, 0.5], &[1.0, 0.0]).unwrap();
        assert!((floored - 0.5 * (0.5 / KL_FLOOR).ln() - 0.5 * 0.5f64.ln()).abs() < 1e-12);
        assert!(kl_divergence(&p, &[1.0]).is_err());
    }
}
