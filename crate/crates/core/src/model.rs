//! The four model families and the loss surfaces they produce.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factor::{
    cond_contagion_distribution, mixture_distribution, ofg_loss_distribution, DEFAULT_NODES,
};
use crate::loss::{contagion_loss_distribution, LossDistribution};
use crate::mapping::{assign_mu, map_allowing_zero, MuScheme};
use crate::market::Portfolio;
use crate::pricing::LossSurface;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VariantFamily {
    /// One-factor Gaussian.
    Ofg,
    /// Contagion alone.
    Con,
    /// Contagion conditional on the factor.
    Cond,
    /// Mixture of contagion and factor regimes.
    Mix,
}

impl VariantFamily {
    pub fn label(self) -> &'static str {
        match self {
            VariantFamily::Ofg => "OFG",
            VariantFamily::Con => "CON",
            VariantFamily::Cond => "COND",
            VariantFamily::Mix => "MIX",
        }
    }

    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            VariantFamily::Ofg => &["rho"],
            VariantFamily::Con => &["omega"],
            VariantFamily::Cond => &["omega", "rho"],
            VariantFamily::Mix => &["omega", "rho", "pi"],
        }
    }

    pub fn uses_mu(self) -> bool {
        self != VariantFamily::Ofg
    }
}

/// A model family together with its infectivity scheme, e.g. `MIX-BNK`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub family: VariantFamily,
    /// Ignored by OFG.
    pub mu_scheme: MuScheme,
}

impl Variant {
    pub fn new(family: VariantFamily, mu_scheme: MuScheme) -> Self {
        Self { family, mu_scheme }
    }

    pub fn ofg() -> Self {
        Self::new(VariantFamily::Ofg, MuScheme::Flat)
    }

    pub fn parameter_names(&self) -> &'static [&'static str] {
        self.family.parameter_names()
    }

    /// Binds parameter values, ordered as [`parameter_names`](Self::parameter_names).
    pub fn model(&self, params: &[f64]) -> Result<Model> {
        let names = self.parameter_names();
        if params.len() != names.len() {
            return Err(Error::LengthMismatch {
                what: "parameters",
                left: params.len(),
                right: names.len(),
            });
        }
        let model = match self.family {
            VariantFamily::Ofg => Model::Ofg { rho: params[0] },
            VariantFamily::Con => Model::Con { omega: params[0] },
            VariantFamily::Cond => Model::Cond {
                omega: params[0],
                rho: params[1],
            },
            VariantFamily::Mix => Model::Mix {
                omega: params[0],
                rho: params[1],
                pi: params[2],
            },
        };
        model.validate()?;
        Ok(model)
    }

    pub fn mu_star(&self, sectors: &[String], eta: f64) -> Result<Vec<f64>> {
        assign_mu(sectors, &self.mu_scheme, eta)
    }

    /// All variants: OFG plus every contagion family under FLAT, BNK, FIN.
    pub fn all() -> Vec<Variant> {
        let mut out = vec![Variant::ofg()];
        for family in [VariantFamily::Con, VariantFamily::Cond, VariantFamily::Mix] {
            for scheme in [MuScheme::Flat, MuScheme::Bnk, MuScheme::Fin] {
                out.push(Variant::new(family, scheme));
            }
        }
        out
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.family.uses_mu() {
            write!(f, "{}-{}", self.family.label(), self.mu_scheme.label())
        } else {
            f.write_str(self.family.label())
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    /// `OFG`, `CON-FLAT`, `COND-BNK`, `MIX-FIN`, ... A contagion family
    /// without a scheme defaults to FLAT.
    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        let (family, scheme) = match upper.split_once('-') {
            Some((f, sch)) => (f.to_string(), Some(sch.to_string())),
            None => (upper.clone(), None),
        };
        let family = match family.as_str() {
            "OFG" => VariantFamily::Ofg,
            "CON" => VariantFamily::Con,
            "COND" => VariantFamily::Cond,
            "MIX" => VariantFamily::Mix,
            _ => return Err(Error::invalid(format!("unknown model variant '{s}'"))),
        };
        let mu_scheme = match (family, scheme) {
            (VariantFamily::Ofg, Some(_)) => {
                return Err(Error::invalid("OFG takes no infectivity scheme"))
            }
            (_, Some(sch)) => sch.parse()?,
            (_, None) => MuScheme::Flat,
        };
        Ok(Self { family, mu_scheme })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Model {
    Ofg { rho: f64 },
    Con { omega: f64 },
    Cond { omega: f64, rho: f64 },
    Mix { omega: f64, rho: f64, pi: f64 },
}

fn unit_interval(name: &str, x: f64, closed_top: bool) -> Result<()> {
    let ok = if closed_top {
        (0.0..=1.0).contains(&x)
    } else {
        (0.0..1.0).contains(&x)
    };
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} = {x} out of range")))
    }
}

impl Model {
    pub fn family(&self) -> VariantFamily {
        match self {
            Model::Ofg { .. } => VariantFamily::Ofg,
            Model::Con { .. } => VariantFamily::Con,
            Model::Cond { .. } => VariantFamily::Cond,
            Model::Mix { .. } => VariantFamily::Mix,
        }
    }

    pub fn parameters(&self) -> Vec<f64> {
        match *self {
            Model::Ofg { rho } => vec![rho],
            Model::Con { omega } => vec![omega],
            Model::Cond { omega, rho } => vec![omega, rho],
            Model::Mix { omega, rho, pi } => vec![omega, rho, pi],
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Model::Ofg { rho } => unit_interval("rho", rho, false),
            Model::Con { omega } => unit_interval("omega", omega, false),
            Model::Cond { omega, rho } => {
                unit_interval("omega", omega, false)?;
                unit_interval("rho", rho, false)
            }
            Model::Mix { omega, rho, pi } => {
                unit_interval("omega", omega, false)?;
                unit_interval("rho", rho, false)?;
                unit_interval("pi", pi, true)
            }
        }
    }

    /// Loss distribution for marginals `p_tilde` on one horizon.
    pub fn distribution(
        &self,
        p_tilde: &[f64],
        mu_star: &[f64],
        loss_units: &[u32],
        unit_loss_fraction: f64,
        settings: &ModelSettings,
    ) -> Result<LossDistribution> {
        if p_tilde.len() != loss_units.len() {
            return Err(Error::LengthMismatch {
                what: "marginals vs loss units",
                left: p_tilde.len(),
                right: loss_units.len(),
            });
        }
        let total_units: usize = loss_units.iter().map(|&d| d as usize).sum();
        if p_tilde.iter().all(|&p| p == 0.0) {
            return Ok(LossDistribution::no_loss(total_units, unit_loss_fraction));
        }
        let factor_marginals = || -> Vec<f64> {
            if settings.heterogeneous_factor {
                p_tilde.to_vec()
            } else {
                let mean = p_tilde.iter().sum::<f64>() / p_tilde.len() as f64;
                vec![mean; p_tilde.len()]
            }
        };
        let contagion = |omega: f64| -> Result<LossDistribution> {
            let params = map_allowing_zero(p_tilde, omega, mu_star)?;
            contagion_loss_distribution(&params, loss_units, unit_loss_fraction)
        };
        match *self {
            Model::Ofg { rho } => ofg_loss_distribution(
                &factor_marginals(),
                rho,
                settings.nodes,
                loss_units,
                unit_loss_fraction,
            ),
            Model::Con { omega } => contagion(omega),
            Model::Cond { omega, rho } => cond_contagion_distribution(
                p_tilde,
                omega,
                mu_star,
                rho,
                settings.nodes,
                loss_units,
                unit_loss_fraction,
            ),
            Model::Mix { omega, rho, pi } => {
                let con = contagion(omega)?;
                let ofg = ofg_loss_distribution(
                    &factor_marginals(),
                    rho,
                    settings.nodes,
                    loss_units,
                    unit_loss_fraction,
                )?;
                mixture_distribution(&con, &ofg, pi)
            }
        }
    }

    /// Loss distributions of `portfolio` at each date, all mass at zero
    /// loss at `t = 0`.
    pub fn loss_surface(
        &self,
        portfolio: &Portfolio,
        mu_star: &[f64],
        dates: &[f64],
        settings: &ModelSettings,
    ) -> Result<LossSurface> {
        let spec = &portfolio.spec;
        let unit = spec.unit_loss_fraction();
        let distributions = dates
            .par_iter()
            .map(|&t| {
                self.distribution(&portfolio.marginals(t), mu_star, &spec.loss_units, unit, settings)
            })
            .collect::<Result<Vec<_>>>()?;
        LossSurface::new(dates.to_vec(), distributions)
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::Ofg { rho } => write!(f, "OFG(rho={rho})"),
            Model::Con { omega } => write!(f, "CON(omega={omega})"),
            Model::Cond { omega, rho } => write!(f, "COND(omega={omega}, rho={rho})"),
            Model::Mix { omega, rho, pi } => write!(f, "MIX(omega={omega}, rho={rho}, pi={pi})"),
        }
    }
}

/// Numerical settings shared by every family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSettings {
    /// Scale applied to every infectivity scale.
    pub eta: f64,
    /// Gauss-Hermite nodes for the factor integral.
    pub nodes: usize,
    /// Use each name's own marginal in the factor model instead of the
    /// pool average.
    pub heterogeneous_factor: bool,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self {
            eta: 1.0,
            nodes: DEFAULT_NODES,
            heterogeneous_factor: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::PortfolioSpec;

    #[test]
    fn variant_labels_round_trip() {
        for v in Variant::all() {
            assert_eq!(v.to_string().parse::<Variant>().unwrap(), v);
        }
        assert_eq!(Variant::all().len(), 10);
        assert_eq!("mix-bnk".parse::<Variant>().unwrap().to_string(), "MIX-BNK");
        assert_eq!("CON".parse::<Variant>().unwrap().mu_scheme, MuScheme::Flat);
        assert!("OFG-BNK".parse::<Variant>().is_err());
        assert!("NIG".parse::<Variant>().is_err());
    }

    #[test]
    fn binding_parameters() {
        let v: Variant = "MIX-FLAT".parse().unwrap();
        let m = v.model(&[0.6, 0.28, 0.5]).unwrap();
        assert_eq!(m, Model::Mix { omega: 0.6, rho: 0.28, pi: 0.5 });
        assert_eq!(m.parameters(), vec![0.6, 0.28, 0.5]);
        assert!(v.model(&[0.6, 0.28]).is_err());
        assert!(Variant::ofg().model(&[1.0]).is_err());
    }

    #[test]
    fn mixture_endpoints_match_components() {
        let p = vec![0.05; 20];
        let mu = vec![0.1; 20];
        let units = vec![1; 20];
        let s = ModelSettings::default();
        let con = Model::Con { omega: 0.5 }.distribution(&p, &mu, &units, 0.05, &s).unwrap();
        let ofg = Model::Ofg { rho: 0.3 }.distribution(&p, &mu, &units, 0.05, &s).unwrap();
        let m1 = Model::Mix { omega: 0.5, rho: 0.3, pi: 1.0 }.distribution(&p, &mu, &units, 0.05, &s).unwrap();
        let m0 = Model::Mix { omega: 0.5, rho: 0.3, pi: 0.0 }.distribution(&p, &mu, &units, 0.05, &s).unwrap();
        assert_eq!(m1.pmf, con.pmf);
        assert_eq!(m0.pmf, ofg.pmf);
    }

    #[test]
    fn surface_starts_without_losses() {
        let spec = PortfolioSpec::equally_weighted(
            (0..10).map(|i| format!("N{i}")).collect(),
            vec!["Energy".into(); 10],
            0.4,
            1.0,
        )
        .unwrap();
        let portfolio = Portfolio::new(spec, vec![80.0; 10]).unwrap();
        let surface = Model::Con { omega: 0.3 }
            .loss_surface(&portfolio, &[0.1; 10], &[0.0, 1.0, 2.0], &ModelSettings::default())
            .unwrap();
        assert_eq!(surface.distributions[0].pmf[0], 1.0);
        let el: Vec<f64> = surface.distributions.iter().map(|d| d.mean_units()).collect();
        assert!(el[0] < el[1] && el[1] < el[2]);
    }
}
