use contagio::calibration::QuoteEngine;
use contagio::market::{hazard_from_spread, DefaultCurve, Instrument, Portfolio, QuoteType};
use contagio::pricing::{cds_par_spread, coupon_leg, default_leg, TrancheLegs, STANDARD_RUNNING_COUPON};
use contagio::{
    contagion_loss_distribution, map_parameters, DiscountCurve, LossDistribution, LossSurface,
    ModelSettings, PortfolioSpec, Schedule, Tranche, Variant,
};

fn homogeneous_surface(n: usize, hazard: f64, omega: f64, dates: &[f64]) -> LossSurface {
    let unit = 0.6 / n as f64;
    let curve = DefaultCurve::new(hazard).unwrap();
    let dists = dates
        .iter()
        .map(|&t| {
            if t == 0.0 {
                return LossDistribution::no_loss(n, unit);
            }
            let pt = vec![curve.default_probability(t); n];
            let params = map_parameters(&pt, omega, &vec![0.1; n]).unwrap();
            contagion_loss_distribution(&params, &vec![1; n], unit).unwrap()
        })
        .collect();
    LossSurface::new(dates.to_vec(), dists).unwrap()
}

fn single_name_tranche_spread(spread_bps: f64) -> f64 {
    let schedule = Schedule::standard_5y();
    let curve = DefaultCurve::from_spread(spread_bps, 0.4).unwrap();
    let dists = schedule
        .grid()
        .iter()
        .map(|&t| {
            let p = curve.default_probability(t);
            LossDistribution::new(vec![1.0 - p, p], 0.6).unwrap()
        })
        .collect();
    let surface = LossSurface::new(schedule.grid(), dists).unwrap();
    let flat = DiscountCurve::flat(0.0, 5.0).unwrap();
    10_000.0
        * TrancheLegs::compute(&surface, &flat, &schedule, &Tranche::equity_to_senior())
            .unwrap()
            .par_spread()
            .unwrap()
}

fn cds_spread(spread_bps: f64) -> f64 {
    let curve = DefaultCurve::from_spread(spread_bps, 0.4).unwrap();
    let flat = DiscountCurve::flat(0.0, 5.0).unwrap();
    10_000.0 * cds_par_spread(&curve, 0.4, &flat, &Schedule::standard_5y()).unwrap()
}

#[test]
fn single_name_credit_triangle() {
    assert!((hazard_from_spread(60.0, 0.4).unwrap() - 0.01).abs() < 1e-17);
    let s = cds_spread(60.0);
    assert!((s - 60.0).abs() < 1.0, "{s}");
}

#[test]
fn single_name_tranche_keeps_paying_on_recovered_notional() {
    // The 0-100% tranche pays coupon on 1 - L, so the recovered 40% keeps
    // earning after default and the par spread sits below the CDS spread.
    let tranche = single_name_tranche_spread(60.0);
    let cds = cds_spread(60.0);
    assert!(tranche < cds);
    assert!((tranche - 58.63).abs() < 0.01, "{tranche}");
}

#[test]
fn credit_triangle_round_trip_range() {
    // Premiums at period end on ACT/360 without accrual on default bias the
    // repriced spread low. The bias stays under 1 bp up to about 85 bps and
    // peaks near 2.3 bps around 300 bps.
    for s in [1.0, 10.0, 25.0, 60.0, 80.0] {
        assert!((cds_spread(s) - s).abs() < 1.0, "{s}");
    }
    for s in [100.0, 200.0, 300.0, 400.0, 500.0] {
        let err = cds_spread(s) - s;
        assert!(err < 0.0 && err > -2.5, "{s}: {err}");
    }
}

#[test]
fn par_and_upfront_identities() {
    let schedule = Schedule::standard_5y();
    let surface = homogeneous_surface(125, 0.01, 0.6, &schedule.grid());
    let curve = DiscountCurve::flat(0.015, 6.0).unwrap();
    for tranche in Tranche::standard_set().into_iter().chain([Tranche::equity_to_senior()]) {
        let legs = TrancheLegs::compute(&surface, &curve, &schedule, &tranche).unwrap();
        let par = legs.par_spread().unwrap();
        let value = coupon_leg(&surface, &curve, &schedule, &tranche, par).unwrap()
            - default_leg(&surface, &curve, &tranche).unwrap();
        assert!(value.abs() < 1e-12, "{tranche}: {value}");
        assert!(legs.value(par).abs() < 1e-12);
        assert!(legs.upfront(par).abs() < 1e-12);
    }
}

#[test]
fn partition_legs_add_up() {
    let schedule = Schedule::standard_5y();
    let surface = homogeneous_surface(125, 0.012, 0.5, &schedule.grid());
    let curve = DiscountCurve::new(vec![(1.0, 0.99), (3.0, 0.96), (6.0, 0.9)]).unwrap();
    let whole = TrancheLegs::compute(&surface, &curve, &schedule, &Tranche::equity_to_senior()).unwrap();
    let parts: Vec<TrancheLegs> = Tranche::standard_set()
        .iter()
        .map(|t| TrancheLegs::compute(&surface, &curve, &schedule, t).unwrap())
        .collect();
    let annuity: f64 = parts.iter().map(|l| l.risky_annuity).sum();
    let protection: f64 = parts.iter().map(|l| l.default_leg).sum();
    assert!((annuity - whole.risky_annuity).abs() < 1e-10);
    assert!((protection - whole.default_leg).abs() < 1e-10);
}

#[test]
fn zero_defaults_pay_only_the_running_coupon() {
    let schedule = Schedule::standard_5y();
    let dists = schedule.grid().iter().map(|_| LossDistribution::no_loss(10, 0.06)).collect();
    let surface = LossSurface::new(schedule.grid(), dists).unwrap();
    let flat = DiscountCurve::flat(0.0, 5.0).unwrap();
    let tranche = Tranche::new(0.03, 0.06).unwrap();
    let legs = TrancheLegs::compute(&surface, &flat, &schedule, &tranche).unwrap();
    let upfront = legs.upfront(STANDARD_RUNNING_COUPON);
    assert!((upfront + 0.01 * 5.0 * 365.0 / 360.0).abs() < 1e-15);
    assert!((upfront + 0.05).abs() < 1e-3);
    assert_eq!(legs.par_spread().unwrap(), 0.0);
}

#[test]
fn doubling_the_grid_barely_moves_the_default_leg() {
    // Homogeneous pool with a 5% five-year marginal.
    let hazard = -(0.95f64).ln() / 5.0;
    let schedule = Schedule::standard_5y();
    let curve = DiscountCurve::flat(0.02, 5.0).unwrap();
    let coarse = homogeneous_surface(125, hazard, 0.6, &schedule.grid());
    let fine = homogeneous_surface(125, hazard, 0.6, &schedule.refined_grid(2));
    for tranche in Tranche::standard_set() {
        let a = default_leg(&coarse, &curve, &tranche).unwrap();
        let b = default_leg(&fine, &curve, &tranche).unwrap();
        assert!((a - b).abs() < 1e-4, "{tranche}: {a} vs {b}");
        let ca = coupon_leg(&coarse, &curve, &schedule, &tranche, 0.01).unwrap();
        let cb = coupon_leg(&fine, &curve, &schedule, &tranche, 0.01).unwrap();
        assert_eq!(ca, cb);
    }
}

#[test]
fn zero_spread_pool_prices_to_the_annuity() {
    let n = 20;
    let spec = PortfolioSpec::equally_weighted(
        (0..n).map(|i| format!("N{i}")).collect(),
        vec!["Banking".into(); n],
        0.4,
        1.0,
    )
    .unwrap();
    let portfolio = Portfolio::new(spec, vec![0.0; n]).unwrap();
    let curve = DiscountCurve::flat(0.0, 5.0).unwrap();
    for variant in Variant::all() {
        let engine = QuoteEngine::new(variant.clone(), portfolio.clone(), curve.clone(), ModelSettings::default()).unwrap();
        let params = vec![0.5; variant.parameter_names().len()];
        let quotes = engine.standard_quotes(&params).unwrap();
        for q in &quotes {
            match q.quote_type {
                QuoteType::UpfrontPct => {
                    assert!((q.quote + 100.0 * 0.01 * 5.0 * 365.0 / 360.0).abs() < 1e-12, "{variant}")
                }
                QuoteType::ParSpreadBps => assert_eq!(q.quote, 0.0),
            }
        }
    }
}

#[test]
fn senior_upfront_is_negative_and_index_consistent() {
    let portfolio = Portfolio::synthetic(125, 60.0, 3).unwrap();
    let curve = DiscountCurve::flat(0.01, 6.0).unwrap();
    let mut index = Vec::new();
    for (label, params) in [("OFG", vec![0.3]), ("CON-BNK", vec![0.5]), ("MIX-FIN", vec![0.7, 0.3, 0.6])] {
        let engine = QuoteEngine::new(label.parse().unwrap(), portfolio.clone(), curve.clone(), ModelSettings::default())
            .unwrap();
        let quotes = engine.standard_quotes(&params).unwrap();
        let senior = quotes.iter().find(|q| q.instrument.to_string() == "12-100").unwrap();
        assert!(senior.quote < 0.0);
        let idx = quotes.iter().find(|q| q.instrument == Instrument::Index).unwrap();
        index.push(idx.quote);
    }
    // The index only sees expected losses, which every model matches.
    let spread = index.iter().cloned().fold(f64::NAN, f64::max) - index.iter().cloned().fold(f64::NAN, f64::min);
    assert!(spread < 0.05, "{index:?}");
}
