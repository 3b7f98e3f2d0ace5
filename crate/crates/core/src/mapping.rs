//! Restricted parametrisation: market marginals `p~_i` plus a single
//! contagion share `omega` and fixed infectivity scales `mu_i` determine
//! `(p_i, u_i, v_i)` so that every name reproduces its marginal exactly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{infection_probabilities_excluding_each, ContagionParams};

/// Infectivity scale assignment across sectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MuScheme {
    /// 0.1 for every name.
    Flat,
    /// 0.2 for banks, 0.05 otherwise.
    Bnk,
    /// 0.2 for banking, finance and insurance, 0.05 otherwise.
    Fin,
    Explicit(Vec<f64>),
}

impl MuScheme {
    pub const HIGH: f64 = 0.2;
    pub const LOW: f64 = 0.05;
    pub const FLAT: f64 = 0.1;

    pub fn label(&self) -> &'static str {
        match self {
            MuScheme::Flat => "FLAT",
            MuScheme::Bnk => "BNK",
            MuScheme::Fin => "FIN",
            MuScheme::Explicit(_) => "EXPLICIT",
        }
    }
}

impl fmt::Display for MuScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for MuScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "FLAT" => Ok(MuScheme::Flat),
            "BNK" => Ok(MuScheme::Bnk),
            "FIN" => Ok(MuScheme::Fin),
            other => Err(Error::invalid(format!(
                "unknown mu scheme '{other}' (expected FLAT, BNK or FIN)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingConfig {
    pub omega: f64,
    pub mu_scheme: MuScheme,
    pub eta: f64,
}

impl MappingConfig {
    pub fn new(omega: f64, mu_scheme: MuScheme, eta: f64) -> Result<Self> {
        check_omega(omega)?;
        check_eta(eta)?;
        Ok(Self {
            omega,
            mu_scheme,
            eta,
        })
    }

    pub fn mu_star(&self, sectors: &[String]) -> Result<Vec<f64>> {
        assign_mu(sectors, &self.mu_scheme, self.eta)
    }
}

fn check_omega(omega: f64) -> Result<()> {
    if (0.0..1.0).contains(&omega) {
        Ok(())
    } else {
        Err(Error::invalid(format!("omega {omega} outside [0, 1)")))
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("eta {eta} must be positive")))
    }
}

fn is_banking(sector: &str) -> bool {
    sector.trim().eq_ignore_ascii_case("banking")
}

fn is_financial(sector: &str) -> bool {
    let s = sector.trim();
    ["banking", "finance", "insurance"]
        .iter()
        .any(|f| s.eq_ignore_ascii_case(f))
}

/// Per-name `mu*_i = eta * mu_i`. Sector matching is case-insensitive and
/// unlisted sectors take the low value.
pub fn assign_mu(sectors: &[String], scheme: &MuScheme, eta: f64) -> Result<Vec<f64>> {
    check_eta(eta)?;
    let base: Vec<f64> = match scheme {
        MuScheme::Flat => vec![MuScheme::FLAT; sectors.len()],
        MuScheme::Bnk => sectors
            .iter()
            .map(|s| if is_banking(s) { MuScheme::HIGH } else { MuScheme::LOW })
            .collect(),
        MuScheme::Fin => sectors
            .iter()
            .map(|s| if is_financial(s) { MuScheme::HIGH } else { MuScheme::LOW })
            .collect(),
        MuScheme::Explicit(values) => {
            if values.len() != sectors.len() {
                return Err(Error::LengthMismatch {
                    what: "explicit mu vs names",
                    left: values.len(),
                    right: sectors.len(),
                });
            }
            if let Some(&m) = values.iter().find(|&&m| !(m >= 0.0 && m.is_finite())) {
                return Err(Error::invalid(format!("mu {m} must be non-negative")));
            }
            values.clone()
        }
    };
    Ok(base.into_iter().map(|m| eta * m).collect())
}

const U_TOLERANCE: f64 = 1e-12;

/// Maps marginals to `(p, u, v)`:
///
/// * `p_i = (1 - omega) p~_i`
/// * `v_i = mu*_i (1 - sqrt(p~_i))`
/// * `u_i = 1 - (p~_i - p_i) / ((1 - p_i) I_{-i})`
///
/// Fails when some `u_i` leaves `[0, 1]`, i.e. the other names cannot
/// generate enough infection pressure to explain the contagion share.
pub fn map_parameters(p_tilde: &[f64], omega: f64, mu_star: &[f64]) -> Result<ContagionParams> {
    if let Some((i, &x)) = p_tilde
        .iter()
        .enumerate()
        .find(|(_, &x)| !(x > 0.0 && x < 1.0))
    {
        return Err(Error::invalid(format!(
            "marginal default probability of name {i} is {x}, must lie in (0, 1)"
        )));
    }
    map_allowing_zero(p_tilde, omega, mu_star)
}

/// As [`map_parameters`] but a zero marginal is accepted and maps to a name
/// that never defaults (`p = 0`, `u = 1`). Conditional marginals deep in the
/// factor's good tail underflow to zero.
pub(crate) fn map_allowing_zero(
    p_tilde: &[f64],
    omega: f64,
    mu_star: &[f64],
) -> Result<ContagionParams> {
    if p_tilde.is_empty() {
        return Err(Error::EmptyPortfolio);
    }
    if mu_star.len() != p_tilde.len() {
        return Err(Error::LengthMismatch {
            what: "mu vs marginals",
            left: mu_star.len(),
            right: p_tilde.len(),
        });
    }
    check_omega(omega)?;
    if let Some((i, &x)) = p_tilde
        .iter()
        .enumerate()
        .find(|(_, &x)| !(0.0..1.0).contains(&x))
    {
        return Err(Error::invalid(format!(
            "marginal default probability of name {i} is {x}, must lie in [0, 1)"
        )));
    }
    let p: Vec<f64> = p_tilde.iter().map(|&pt| (1.0 - omega) * pt).collect();
    let mut v = Vec::with_capacity(p.len());
    for (i, (&pt, &mu)) in p_tilde.iter().zip(mu_star).enumerate() {
        if !(mu >= 0.0) {
            return Err(Error::invalid(format!("mu* of name {i} is {mu}")));
        }
        let vi = mu * (1.0 - pt.sqrt());
        if vi > 1.0 {
            return Err(Error::invalid(format!(
                "infectivity of name {i} is {vi} > 1 (mu* = {mu} too large)"
            )));
        }
        v.push(vi);
    }
    let partial = ContagionParams {
        p,
        u: vec![1.0; p_tilde.len()],
        v,
    };
    let infection = infection_probabilities_excluding_each(&partial);
    let mut u = Vec::with_capacity(p_tilde.len());
    for i in 0..p_tilde.len() {
        let excess = p_tilde[i] - partial.p[i];
        let ui = if excess == 0.0 {
            1.0
        } else {
            let denom = (1.0 - partial.p[i]) * infection[i];
            if denom <= 0.0 {
                return Err(Error::InfeasibleMapping {
                    name: i,
                    u: f64::NEG_INFINITY,
                });
            }
            1.0 - excess / denom
        };
        if !(-U_TOLERANCE..=1.0 + U_TOLERANCE).contains(&ui) {
            return Err(Error::InfeasibleMapping { name: i, u: ui });
        }
        u.push(ui.clamp(0.0, 1.0));
    }
    Ok(ContagionParams {
        p: partial.p,
        u,
        v: partial.v,
    })
}
