//! Synthetic CDO tranche legs from a term structure of loss distributions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::LossDistribution;
use crate::market::{DefaultCurve, DiscountCurve};

/// Running coupon of quoted tranches, 100 bps.
pub const STANDARD_RUNNING_COUPON: f64 = 0.01;

const DATE_TOLERANCE: f64 = 1e-9;
const MONOTONE_TOLERANCE: f64 = 1e-12;

/// Loss slice `(a, b]` of the pool, as fractions of pool notional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tranche {
    pub attachment: f64,
    pub detachment: f64,
}

impl Tranche {
    pub fn new(attachment: f64, detachment: f64) -> Result<Self> {
        if !(0.0 <= attachment && attachment < detachment && detachment <= 1.0) {
            return Err(Error::invalid(format!(
                "tranche ({attachment}, {detachment}) needs 0 <= a < b <= 1"
            )));
        }
        Ok(Self {
            attachment,
            detachment,
        })
    }

    pub fn equity_to_senior() -> Self {
        Self {
            attachment: 0.0,
            detachment: 1.0,
        }
    }

    pub fn width(&self) -> f64 {
        self.detachment - self.attachment
    }

    /// 0-3%, 3-6%, 6-12%, 12-100%.
    pub fn standard_set() -> Vec<Tranche> {
        [(0.0, 0.03), (0.03, 0.06), (0.06, 0.12), (0.12, 1.0)]
            .iter()
            .map(|&(a, b)| Tranche::new(a, b).expect("static tranche"))
            .collect()
    }
}

impl fmt::Display for Tranche {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.attachment * 100.0, self.detachment * 100.0)
    }
}

impl FromStr for Tranche {
    type Err = Error;

    /// Parses `"a-b"` with both ends in percent, e.g. `"3-6"`.
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once('-')
            .ok_or_else(|| Error::invalid(format!("tranche label '{s}' is not of the form a-b")))?;
        let parse = |x: &str| {
            x.trim()
                .trim_end_matches('%')
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("tranche label '{s}' has a bad bound '{x}'")))
        };
        Tranche::new(parse(a)? / 100.0, parse(b)? / 100.0)
    }
}

/// Outstanding tranche notional `S(a, b, t)` for a loss distribution at `t`.
///
/// Losses at or below `a` leave the whole width, losses above `b` leave
/// nothing, and losses in between leave `b - loss`.
pub fn outstanding_notional(dist: &LossDistribution, tranche: &Tranche) -> f64 {
    let (a, b) = (tranche.attachment, tranche.detachment);
    let width = b - a;
    dist.pmf
        .iter()
        .enumerate()
        .map(|(h, &x)| {
            let loss = h as f64 * dist.unit_loss_fraction;
            x * (b - loss).clamp(0.0, width)
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DayCount {
    /// Actual/360 on a 365-day year.
    Act360,
    Act365F,
}

impl DayCount {
    pub fn fraction(self, start: f64, end: f64) -> f64 {
        match self {
            DayCount::Act360 => (end - start) * 365.0 / 360.0,
            DayCount::Act365F => end - start,
        }
    }
}

/// Coupon payment times in years from valuation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub payment_times: Vec<f64>,
    pub day_count: DayCount,
}

impl Schedule {
    /// Regular schedule with `frequency` payments per year up to `maturity`.
    pub fn regular(maturity: f64, frequency: u32, day_count: DayCount) -> Result<Self> {
        if !(maturity > 0.0) || frequency == 0 {
            return Err(Error::invalid("schedule needs positive maturity and frequency"));
        }
        let periods = (maturity * frequency as f64).round() as usize;
        if periods == 0 || ((periods as f64 / frequency as f64) - maturity).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "maturity {maturity} is not a whole number of periods at frequency {frequency}"
            )));
        }
        let payment_times = (1..=periods).map(|i| i as f64 / frequency as f64).collect();
        Ok(Self {
            payment_times,
            day_count,
        })
    }

    /// Five years, quarterly, ACT/360.
    pub fn standard_5y() -> Self {
        Self::regular(5.0, 4, DayCount::Act360).expect("static schedule")
    }

    pub fn maturity(&self) -> f64 {
        *self.payment_times.last().expect("non-empty schedule")
    }

    /// Valuation date plus every payment date.
    pub fn grid(&self) -> Vec<f64> {
        std::iter::once(0.0).chain(self.payment_times.iter().copied()).collect()
    }

    /// [`grid`](Self::grid) with every period split into `sub` steps.
    pub fn refined_grid(&self, sub: usize) -> Vec<f64> {
        let sub = sub.max(1);
        let mut out = vec![0.0];
        let mut prev = 0.0;
        for &t in &self.payment_times {
            for s in 1..=sub {
                out.push(if s == sub {
                    t
                } else {
                    prev + (t - prev) * s as f64 / sub as f64
                });
            }
            prev = t;
        }
        out
    }
}

/// Loss distributions on an increasing date grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossSurface {
    pub dates: Vec<f64>,
    pub distributions: Vec<LossDistribution>,
}

impl LossSurface {
    pub fn new(dates: Vec<f64>, distributions: Vec<LossDistribution>) -> Result<Self> {
        if dates.is_empty() || dates.len() != distributions.len() {
            return Err(Error::invalid("surface needs one distribution per date"));
        }
        if dates[0] < 0.0 || dates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("surface dates must be non-negative and increasing"));
        }
        Ok(Self {
            dates,
            distributions,
        })
    }

    pub fn at(&self, t: f64) -> Option<&LossDistribution> {
        self.dates
            .iter()
            .position(|&d| (d - t).abs() <= DATE_TOLERANCE)
            .map(|i| &self.distributions[i])
    }

    fn outstanding_at(&self, t: f64, tranche: &Tranche) -> Result<f64> {
        self.at(t)
            .map(|d| outstanding_notional(d, tranche))
            .ok_or_else(|| Error::invalid(format!("no loss distribution at coupon date {t}")))
    }
}

/// `cpn * sum_i dcf(t_i, t_{i+1}) D(t_{i+1}) S(a, b, t_{i+1})`.
pub fn coupon_leg(
    surface: &LossSurface,
    curve: &DiscountCurve,
    schedule: &Schedule,
    tranche: &Tranche,
    cpn: f64,
) -> Result<f64> {
    let mut prev = 0.0;
    let mut annuity = 0.0;
    for &t in &schedule.payment_times {
        let s = surface.outstanding_at(t, tranche)?;
        annuity += schedule.day_count.fraction(prev, t) * curve.discount_factor(t)? * s;
        prev = t;
    }
    Ok(cpn * annuity)
}

/// Protection leg: tranche losses over each surface interval discounted at
/// the interval midpoint.
pub fn default_leg(surface: &LossSurface, curve: &DiscountCurve, tranche: &Tranche) -> Result<f64> {
    if surface.dates[0].abs() > DATE_TOLERANCE {
        return Err(Error::invalid("surface must start at the valuation date"));
    }
    let outstanding: Vec<f64> = surface
        .distributions
        .iter()
        .map(|d| outstanding_notional(d, tranche))
        .collect();
    let mut pv = 0.0;
    for i in 0..surface.dates.len() - 1 {
        let loss = outstanding[i] - outstanding[i + 1];
        if loss < -MONOTONE_TOLERANCE {
            return Err(Error::Numerical(format!(
                "outstanding notional of tranche {tranche} increases between t = {} and t = {}",
                surface.dates[i],
                surface.dates[i + 1]
            )));
        }
        let mid = 0.5 * (surface.dates[i] + surface.dates[i + 1]);
        pv += curve.discount_factor(mid)? * loss.max(0.0);
    }
    Ok(pv)
}

/// Premium and protection legs of one tranche.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrancheLegs {
    /// Coupon leg per unit coupon.
    pub risky_annuity: f64,
    pub default_leg: f64,
    pub width: f64,
}

impl TrancheLegs {
    pub fn compute(
        surface: &LossSurface,
        curve: &DiscountCurve,
        schedule: &Schedule,
        tranche: &Tranche,
    ) -> Result<Self> {
        Ok(Self {
            risky_annuity: coupon_leg(surface, curve, schedule, tranche, 1.0)?,
            default_leg: default_leg(surface, curve, tranche)?,
            width: tranche.width(),
        })
    }

    /// `CpnLeg - DfltLeg` at coupon `cpn`.
    pub fn value(&self, cpn: f64) -> f64 {
        cpn * self.risky_annuity - self.default_leg
    }

    pub fn par_spread(&self) -> Result<f64> {
        if !(self.risky_annuity > 0.0) {
            return Err(Error::Numerical("risky annuity is zero".into()));
        }
        Ok(self.default_leg / self.risky_annuity)
    }

    /// Upfront as a fraction of tranche notional.
    pub fn upfront(&self, running_coupon: f64) -> f64 {
        (self.default_leg - running_coupon * self.risky_annuity) / self.width
    }
}

pub fn par_spread(
    surface: &LossSurface,
    curve: &DiscountCurve,
    schedule: &Schedule,
    tranche: &Tranche,
) -> Result<f64> {
    TrancheLegs::compute(surface, curve, schedule, tranche)?.par_spread()
}

pub fn upfront(
    surface: &LossSurface,
    curve: &DiscountCurve,
    schedule: &Schedule,
    tranche: &Tranche,
    running_coupon: f64,
) -> Result<f64> {
    let legs = TrancheLegs::compute(surface, curve, schedule, tranche)?;
    if !(legs.risky_annuity > 0.0) {
        return Err(Error::Numerical("risky annuity is zero".into()));
    }
    Ok(legs.upfront(running_coupon))
}

/// Par spread of a single-name CDS on a flat-hazard curve, with the tranche
/// leg conventions: premium on the surviving notional at each payment date,
/// protection of `1 - recovery` discounted at mid-period.
pub fn cds_par_spread(
    default_curve: &DefaultCurve,
    recovery: f64,
    discount: &DiscountCurve,
    schedule: &Schedule,
) -> Result<f64> {
    if !(0.0..1.0).contains(&recovery) {
        return Err(Error::invalid(format!("recovery {recovery} must lie in [0, 1)")));
    }
    let mut prev = 0.0;
    let mut annuity = 0.0;
    let mut protection = 0.0;
    for &t in &schedule.payment_times {
        let survival = 1.0 - default_curve.default_probability(t);
        annuity += schedule.day_count.fraction(prev, t) * discount.discount_factor(t)? * survival;
        let defaulted = default_curve.default_probability(t) - default_curve.default_probability(prev);
        protection += (1.0 - recovery) * discount.discount_factor(0.5 * (prev + t))? * defaulted;
        prev = t;
    }
    if !(annuity > 0.0) {
        return Err(Error::Numerical("risky annuity is zero".into()));
    }
    Ok(protection / annuity)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_curve() -> DiscountCurve {
        DiscountCurve::new(vec![(0.0, 1.0), (10.0, 1.0)]).unwrap()
    }

    fn static_surface(dist: LossDistribution, schedule: &Schedule) -> LossSurface {
        let dates = schedule.grid();
        let mut dists = vec![dist.clone(); dates.len()];
        dists[0] = LossDistribution::no_loss(dist.ell_bar(), dist.unit_loss_fraction);
        LossSurface::new(dates, dists).unwrap()
    }

    #[test]
    fn tranche_parsing() {
        let t: Tranche = "3-6".parse().unwrap();
        assert!((t.attachment - 0.03).abs() < 1e-15 && (t.detachment - 0.06).abs() < 1e-15);
        assert_eq!("12-100".parse::<Tranche>().unwrap().detachment, 1.0);
        assert!("6".parse::<Tranche>().is_err());
        assert!("6-3".parse::<Tranche>().is_err());
        assert_eq!(Tranche::new(0.12, 1.0).unwrap().to_string(), "12-100");
    }

    #[test]
    fn outstanding_cases() {
        let tranche = Tranche::new(0.0, 0.006).unwrap();
        let none = LossDistribution::no_loss(125, 0.6 / 125.0);
        assert!((outstanding_notional(&none, &tranche) - 0.006).abs() < 1e-18);

        let mut pmf = vec![0.0; 126];
        pmf[10] = 1.0;
        let wiped = LossDistribution::new(pmf, 0.6 / 125.0).unwrap();
        assert_eq!(outstanding_notional(&wiped, &tranche), 0.0);

        let mut pmf = vec![0.0; 126];
        pmf[..3].copy_from_slice(&[1.0 / 3.0; 3]);
        let dist = LossDistribution::new(pmf, 0.6 / 125.0).unwrap();
        assert!((outstanding_notional(&dist, &tranche) - 0.0024).abs() < 1e-15);
    }

    #[test]
    fn schedule_shapes() {
        let s = Schedule::standard_5y();
        assert_eq!(s.payment_times.len(), 20);
        assert_eq!(s.maturity(), 5.0);
        assert_eq!(s.grid().len(), 21);
        let fine = s.refined_grid(2);
        assert_eq!(fine.len(), 41);
        assert!((fine[1] - 0.125).abs() < 1e-15);
        assert!(Schedule::regular(5.1, 4, DayCount::Act360).is_err());
        assert!((DayCount::Act360.fraction(0.0, 0.25) - 91.25 / 360.0).abs() < 1e-15);
    }

    #[test]
    fn no_default_legs() {
        let schedule = Schedule::standard_5y();
        let surface = static_surface(LossDistribution::no_loss(125, 0.6 / 125.0), &schedule);
        let tranche = Tranche::new(0.03, 0.06).unwrap();
        let legs = TrancheLegs::compute(&surface, &flat_curve(), &schedule, &tranche).unwrap();
        assert_eq!(legs.default_leg, 0.0);
        let annuity = 5.0 * 365.0 / 360.0;
        assert!((legs.value(0.01) - 0.01 * annuity * 0.03).abs() < 1e-15);
        assert!((legs.value(0.01) - 0.01 * 5.0 * 0.03).abs() < 0.01 * 0.1 * 0.03);
        assert_eq!(coupon_leg(&surface, &flat_curve(), &schedule, &tranche, 0.0).unwrap(), 0.0);
        assert_eq!(legs.par_spread().unwrap(), 0.0);
        assert!((legs.upfront(0.01) + 0.01 * annuity).abs() < 1e-15);
    }

    #[test]
    fn wipeout_pays_full_width() {
        let schedule = Schedule::standard_5y();
        let mut pmf = vec![0.0; 126];
        pmf[125] = 1.0;
        let surface = static_surface(LossDistribution::new(pmf, 1.0 / 125.0).unwrap(), &schedule);
        let tranche = Tranche::new(0.03, 0.06).unwrap();
        let legs = TrancheLegs::compute(&surface, &flat_curve(), &schedule, &tranche).unwrap();
        assert!((legs.default_leg - 0.03).abs() < 1e-15);
        assert_eq!(legs.risky_annuity, 0.0);
        assert!(legs.par_spread().is_err());
    }

    #[test]
    fn missing_coupon_date_is_an_error() {
        let schedule = Schedule::standard_5y();
        let surface = LossSurface::new(
            vec![0.0, 1.0],
            vec![LossDistribution::no_loss(4, 0.25), LossDistribution::no_loss(4, 0.25)],
        )
        .unwrap();
        let tranche = Tranche::equity_to_senior();
        assert!(coupon_leg(&surface, &flat_curve(), &schedule, &tranche, 0.01).is_err());
    }

    #[test]
    fn increasing_outstanding_is_rejected() {
        let mut pmf = vec![0.0; 5];
        pmf[4] = 1.0;
        let surface = LossSurface::new(
            vec![0.0, 1.0],
            vec![LossDistribution::new(pmf, 0.25).unwrap(), LossDistribution::no_loss(4, 0.25)],
        )
        .unwrap();
        assert!(default_leg(&surface, &flat_curve(), &Tranche::equity_to_senior()).is_err());
    }
}
