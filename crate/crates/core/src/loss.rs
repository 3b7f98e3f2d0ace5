//! Exact loss distribution of the infectious-default model.
//!
//! Losses split into idiosyncratic units `L^I`, contagion units `L^C` and,
//! while no infection is active, potential units `L^P` held by names that
//! neither defaulted nor immunized. Two tables track the joint law:
//!
//! * `alpha(h, k) = P{L^I = h, L^C = 0, L^P = k, uncontaminated}`
//! * `beta(h, k)  = P{L^I = h, L^C = k, L^P = 0, contaminated}`
//!
//! Names are added one at a time; the final loss PMF is
//! `P{L = h} = sum_k alpha(h, k) + sum_k beta(k, h - k)`.

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};

/// Per-name Bernoulli probabilities for a single horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContagionParams {
    /// Idiosyncratic default probability.
    pub p: Vec<f64>,
    /// Immunization probability.
    pub u: Vec<f64>,
    /// Infectivity probability.
    pub v: Vec<f64>,
}

impl ContagionParams {
    pub fn new(p: Vec<f64>, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::EmptyPortfolio);
        }
        if u.len() != p.len() {
            return Err(Error::LengthMismatch {
                what: "u vs p",
                left: u.len(),
                right: p.len(),
            });
        }
        if v.len() != p.len() {
            return Err(Error::LengthMismatch {
                what: "v vs p",
                left: v.len(),
                right: p.len(),
            });
        }
        for i in 0..p.len() {
            check_probability("p", p[i])?;
            check_probability("u", u[i])?;
            check_probability("v", v[i])?;
        }
        Ok(Self { p, u, v })
    }

    pub fn homogeneous(n: usize, p: f64, u: f64, v: f64) -> Result<Self> {
        Self::new(vec![p; n], vec![u; n], vec![v; n])
    }

    /// Conditionally independent defaults: no infectivity, full immunity.
    pub fn independent(p: Vec<f64>) -> Result<Self> {
        let n = p.len();
        Self::new(p, vec![1.0; n], vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn is_homogeneous(&self) -> bool {
        let same = |xs: &[f64]| xs.iter().all(|&x| x == xs[0]);
        same(&self.p) && same(&self.u) && same(&self.v)
    }

    /// Reorders names; `order[k]` is the original index placed at position `k`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let pick = |xs: &[f64]| order.iter().map(|&i| xs[i]).collect::<Vec<_>>();
        Self {
            p: pick(&self.p),
            u: pick(&self.u),
            v: pick(&self.v),
        }
    }
}

/// Static description of a credit pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioSpec {
    pub names: Vec<String>,
    pub sectors: Vec<String>,
    /// Units of loss each name contributes on default.
    pub loss_units: Vec<u32>,
    pub recovery: f64,
    pub notional: f64,
}

impl PortfolioSpec {
    pub fn new(
        names: Vec<String>,
        sectors: Vec<String>,
        loss_units: Vec<u32>,
        recovery: f64,
        notional: f64,
    ) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::EmptyPortfolio);
        }
        if sectors.len() != names.len() {
            return Err(Error::LengthMismatch {
                what: "sectors vs names",
                left: sectors.len(),
                right: names.len(),
            });
        }
        if loss_units.len() != names.len() {
            return Err(Error::LengthMismatch {
                what: "loss units vs names",
                left: loss_units.len(),
                right: names.len(),
            });
        }
        if let Some(i) = loss_units.iter().position(|&d| d == 0) {
            return Err(Error::invalid(format!("loss unit of name {i} must be >= 1")));
        }
        if !(0.0..1.0).contains(&recovery) {
            return Err(Error::invalid(format!("recovery {recovery} outside [0, 1)")));
        }
        if !(notional > 0.0 && notional.is_finite()) {
            return Err(Error::invalid(format!("notional {notional} must be positive")));
        }
        Ok(Self {
            names,
            sectors,
            loss_units,
            recovery,
            notional,
        })
    }

    /// Equally weighted pool with one loss unit per name.
    pub fn equally_weighted(
        names: Vec<String>,
        sectors: Vec<String>,
        recovery: f64,
        notional: f64,
    ) -> Result<Self> {
        let n = names.len();
        Self::new(names, sectors, vec![1; n], recovery, notional)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn total_units(&self) -> usize {
        self.loss_units.iter().map(|&d| d as usize).sum()
    }

    /// Fraction of pool notional lost per loss unit.
    pub fn unit_loss_fraction(&self) -> f64 {
        (1.0 - self.recovery) / self.total_units() as f64
    }

    /// Currency amount lost per loss unit.
    pub fn unit_amount(&self) -> f64 {
        self.notional * self.unit_loss_fraction()
    }
}

/// Recursion state after all names have been added.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaBetaTables {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    ell_bar: usize,
}

impl AlphaBetaTables {
    fn boundary(ell_bar: usize) -> Self {
        let size = (ell_bar + 1) * (ell_bar + 1);
        let mut alpha = vec![0.0; size];
        alpha[0] = 1.0;
        Self {
            alpha,
            beta: vec![0.0; size],
            ell_bar,
        }
    }

    #[inline]
    fn idx(&self, h: usize, k: usize) -> usize {
        h * (self.ell_bar + 1) + k
    }

    /// Total loss units `sum d_i`.
    pub fn ell_bar(&self) -> usize {
        self.ell_bar
    }

    pub fn alpha(&self, h: usize, k: usize) -> f64 {
        if h > self.ell_bar || k > self.ell_bar {
            0.0
        } else {
            self.alpha[self.idx(h, k)]
        }
    }

    pub fn beta(&self, h: usize, k: usize) -> f64 {
        if h > self.ell_bar || k > self.ell_bar {
            0.0
        } else {
            self.beta[self.idx(h, k)]
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.alpha.iter().sum::<f64>() + self.beta.iter().sum::<f64>()
    }

    /// Adds one name in place.
    ///
    /// Sweeping `h` and `k` downwards means every cell still holds the
    /// previous-stage value when it is read, since each update only reads
    /// cells at smaller `h` or smaller `k`. `filled` is the cumulative loss
    /// units after this name; cells with `h + k > filled` stay zero. `k`
    /// only grows through names that can be exposed (`u < 1`), so cells with
    /// `k > k_max` stay zero as well.
    fn add_name(&mut self, p: f64, u: f64, v: f64, d: usize, filled: usize, k_max: usize) {
        let w = self.ell_bar + 1;
        let survive_immune = (1.0 - p) * u;
        let survive_exposed = (1.0 - p) * (1.0 - u);
        let default_quiet = p * (1.0 - v);
        let default_infect = p * v;
        for h in (0..=filled).rev() {
            let row = h * w;
            for k in (0..=(filled - h).min(k_max)).rev() {
                let at = row + k;
                let mut a = survive_immune * self.alpha[at];
                let mut b = survive_immune * self.beta[at];
                if k >= d {
                    a += survive_exposed * self.alpha[at - d];
                    b += survive_exposed * self.beta[at - d];
                }
                if h >= d {
                    let below = at - d * w;
                    a += default_quiet * self.alpha[below];
                    b += p * self.beta[below] + default_infect * self.alpha[below];
                }
                self.alpha[at] = a;
                self.beta[at] = b;
            }
        }
    }
}

fn check_units(params: &ContagionParams, loss_units: &[u32]) -> Result<usize> {
    if params.is_empty() {
        return Err(Error::EmptyPortfolio);
    }
    if loss_units.len() != params.len() {
        return Err(Error::LengthMismatch {
            what: "loss units vs names",
            left: loss_units.len(),
            right: params.len(),
        });
    }
    if let Some(i) = loss_units.iter().position(|&d| d == 0) {
        return Err(Error::invalid(format!("loss unit of name {i} must be >= 1")));
    }
    Ok(loss_units.iter().map(|&d| d as usize).sum())
}

/// Runs the recursion over all names in the given order.
pub fn compute_alpha_beta(params: &ContagionParams, loss_units: &[u32]) -> Result<AlphaBetaTables> {
    let ell_bar = check_units(params, loss_units)?;
    let mut tables = AlphaBetaTables::boundary(ell_bar);
    let (mut filled, mut k_max) = (0usize, 0usize);
    for (j, &units) in loss_units.iter().enumerate() {
        let d = units as usize;
        filled += d;
        if params.u[j] < 1.0 {
            k_max += d;
        }
        tables.add_name(params.p[j], params.u[j], params.v[j], d, filled, k_max);
    }
    Ok(tables)
}

/// Same recursion, keeping a snapshot after every stage (stage 0 is the
/// boundary condition). Memory grows as `O(n * ell_bar^2)`; meant for tracing
/// and tests on small pools.
pub fn compute_alpha_beta_stages(
    params: &ContagionParams,
    loss_units: &[u32],
) -> Result<Vec<AlphaBetaTables>> {
    let ell_bar = check_units(params, loss_units)?;
    let mut tables = AlphaBetaTables::boundary(ell_bar);
    let mut stages = Vec::with_capacity(params.len() + 1);
    stages.push(tables.clone());
    let (mut filled, mut k_max) = (0usize, 0usize);
    for (j, &units) in loss_units.iter().enumerate() {
        let d = units as usize;
        filled += d;
        if params.u[j] < 1.0 {
            k_max += d;
        }
        tables.add_name(params.p[j], params.u[j], params.v[j], d, filled, k_max);
        stages.push(tables.clone());
    }
    Ok(stages)
}

/// Discrete distribution of portfolio losses in integer units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossDistribution {
    /// `pmf[h] = P{L = h units}`.
    pub pmf: Vec<f64>,
    /// Fraction of pool notional lost per unit.
    pub unit_loss_fraction: f64,
}

impl LossDistribution {
    pub fn new(pmf: Vec<f64>, unit_loss_fraction: f64) -> Result<Self> {
        if pmf.is_empty() {
            return Err(Error::invalid("empty pmf"));
        }
        if !(unit_loss_fraction > 0.0 && unit_loss_fraction.is_finite()) {
            return Err(Error::invalid(format!(
                "unit loss fraction {unit_loss_fraction} must be positive"
            )));
        }
        if let Some((h, &x)) = pmf.iter().enumerate().find(|(_, &x)| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::invalid(format!("pmf[{h}] = {x} is not a probability")));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("pmf sums to {total}, not 1")));
        }
        Ok(Self {
            pmf,
            unit_loss_fraction,
        })
    }

    /// All mass at zero loss.
    pub fn no_loss(ell_bar: usize, unit_loss_fraction: f64) -> Self {
        let mut pmf = vec![0.0; ell_bar + 1];
        pmf[0] = 1.0;
        Self {
            pmf,
            unit_loss_fraction,
        }
    }

    /// Largest representable loss in units.
    pub fn ell_bar(&self) -> usize {
        self.pmf.len() - 1
    }

    pub fn total_mass(&self) -> f64 {
        self.pmf.iter().sum()
    }

    pub fn cdf(&self) -> Vec<f64> {
        self.pmf
            .iter()
            .scan(0.0, |acc, &x| {
                *acc += x;
                Some(*acc)
            })
            .collect()
    }

    /// Expected loss in units.
    pub fn mean_units(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(h, &x)| h as f64 * x).sum()
    }
}

/// Collapses the tables into the loss PMF.
pub fn assemble_loss_distribution(
    tables: &AlphaBetaTables,
    unit_loss_fraction: f64,
) -> Result<LossDistribution> {
    let l = tables.ell_bar;
    if tables.alpha.len() != (l + 1) * (l + 1) || tables.beta.len() != tables.alpha.len() {
        return Err(Error::invalid("malformed alpha/beta tables"));
    }
    let pmf = (0..=l)
        .map(|h| {
            let uncontaminated: f64 = (0..=l - h).map(|k| tables.alpha(h, k)).sum();
            let contaminated: f64 = (0..=h).map(|k| tables.beta(k, h - k)).sum();
            uncontaminated + contaminated
        })
        .collect();
    LossDistribution::new(pmf, unit_loss_fraction)
}

/// Recursion and assembly in one step.
pub fn contagion_loss_distribution(
    params: &ContagionParams,
    loss_units: &[u32],
    unit_loss_fraction: f64,
) -> Result<LossDistribution> {
    let tables = compute_alpha_beta(params, loss_units)?;
    assemble_loss_distribution(&tables, unit_loss_fraction)
}

/// Probability that at least one name, other than `excluded`, defaults
/// idiosyncratically and is infective: `1 - prod_j (1 - p_j v_j)`.
pub fn infection_probability(params: &ContagionParams, excluded: Option<usize>) -> Result<f64> {
    if let Some(i) = excluded {
        if i >= params.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: params.len(),
            });
        }
    }
    let mut certain = 0usize;
    let mut log_survival = 0.0;
    for j in 0..params.len() {
        if Some(j) == excluded {
            continue;
        }
        let x = params.p[j] * params.v[j];
        if x >= 1.0 {
            certain += 1;
        } else {
            log_survival += (-x).ln_1p();
        }
    }
    Ok(if certain > 0 {
        1.0
    } else {
        -log_survival.exp_m1()
    })
}

/// `I` excluding each name in turn, in `O(n)`.
pub fn infection_probabilities_excluding_each(params: &ContagionParams) -> Vec<f64> {
    let n = params.len();
    let mut terms = Vec::with_capacity(n);
    let mut certain = 0usize;
    let mut total = 0.0;
    for j in 0..n {
        let x = params.p[j] * params.v[j];
        if x >= 1.0 {
            certain += 1;
            terms.push(None);
        } else {
            let t = (-x).ln_1p();
            total += t;
            terms.push(Some(t));
        }
    }
    terms
        .into_iter()
        .map(|t| match t {
            None if certain > 1 => 1.0,
            None => -total.exp_m1(),
            Some(_) if certain > 0 => 1.0,
            Some(t) => -(total - t).exp_m1(),
        })
        .collect()
}

/// Unconditional default probability of name `i`:
/// `p_i + (1 - p_i)(1 - u_i) I_{-i}`.
pub fn marginal_default_probability(params: &ContagionParams, i: usize) -> Result<f64> {
    let infection = infection_probability(params, Some(i))?;
    Ok(params.p[i] + (1.0 - params.p[i]) * (1.0 - params.u[i]) * infection)
}

/// Probability of no loss at all: every name must survive idiosyncratically.
pub fn no_loss_probability(params: &ContagionParams) -> f64 {
    params.p.iter().map(|&p| 1.0 - p).product()
}
