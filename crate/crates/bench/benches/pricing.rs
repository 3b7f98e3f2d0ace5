use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use contagio::calibration::QuoteEngine;
use contagio::market::Portfolio;
use contagio::{DiscountCurve, ModelSettings, Variant};

fn standard_quotes(c: &mut Criterion) {
    let portfolio = Portfolio::synthetic(125, 60.0, 1).unwrap();
    let curve = DiscountCurve::flat(0.01, 6.0).unwrap();
    for (label, params) in [("OFG", vec![0.3]), ("CON-FLAT", vec![0.6]), ("MIX-FLAT", vec![0.8, 0.4, 0.7])] {
        let variant: Variant = label.parse().unwrap();
        let engine = QuoteEngine::new(variant, portfolio.clone(), curve.clone(), ModelSettings::default()).unwrap();
        c.bench_function(&format!("quotes_{label}"), |b| {
            b.iter(|| engine.standard_quotes(black_box(&params)).unwrap())
        });
    }
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = standard_quotes
}
criterion_main!(benches);
