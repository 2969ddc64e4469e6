use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use infoval_core::estimators::{estimate_days, DayInput, EstimateConfig};
use infoval_core::microdata::synthetic::tape_trades;
use infoval_core::microdata::{sign_tick, SigningConfig, TickEvent};
use infoval_core::panel::{fe_regression, FixedEffects, RegressionInput};
use infoval_core::sim::tape::tape_rows;
use infoval_core::sim::{kyle_summary, simulate_kyle};
use infoval_core::SimParams;

fn simulate(c: &mut Criterion) {
    let p = SimParams::kyle(1.0, 1.0).with_paths(1_000);
    c.bench_function("kyle_summary_1000x390", |b| b.iter(|| kyle_summary(black_box(&p)).unwrap()));
}

fn days(n: usize) -> Vec<DayInput> {
    let p = SimParams::kyle(1.0, 1.0).with_sigma_w(0.2);
    (0..n)
        .map(|i| {
            let rows = tape_rows(&simulate_kyle(&p, i).unwrap());
            let (trades, bounds) = tape_trades(&rows).unwrap();
            DayInput {
                symbol: format!("S{i:04}"),
                date: chrono::NaiveDate::from_ymd_opt(2024, 1, 2).unwrap(),
                ticks: trades.iter().map(|t| TickEvent::new(t.timestamp_ns, t.price, t.size).unwrap()).collect(),
                quotes: Vec::new(),
                sides: None,
                p_prev_close: rows[0].p,
                open_price: bounds.open_price,
            }
        })
        .collect()
}

fn estimate(c: &mut Criterion) {
    let input = days(200);
    let ticks = input[0].ticks.clone();
    c.bench_function("sign_tick_390", |b| b.iter(|| sign_tick(black_box(&ticks), &SigningConfig::default())));
    let cfg = EstimateConfig::default();
    c.bench_function("estimate_200_days", |b| b.iter(|| estimate_days(black_box(&input), &cfg).unwrap()));
}

fn panel(stocks: usize, days: usize) -> RegressionInput {
    // Deterministic pseudo-noise keeps the bench free of an RNG dependency.
    let noise = |i: usize, k: usize| ((i * 7919 + k * 104_729) as f64 * 0.618_033_988_749).fract() - 0.5;
    let n = stocks * days;
    let (mut y, mut x1, mut x2, mut stock, mut day) = (vec![], vec![], vec![], vec![], vec![]);
    for i in 0..n {
        let (s, d) = (i / days, i % days);
        let a = noise(i, 1);
        let b = noise(i, 2) + 0.01 * s as f64;
        y.push(0.5 * a - 0.2 * b + 0.05 * s as f64 + 0.02 * d as f64 + noise(i, 3));
        x1.push(a);
        x2.push(b);
        stock.push(s);
        day.push(d);
    }
    RegressionInput { y, regressors: vec![("a".into(), x1), ("b".into(), x2)], stock, day }
}

fn regression(c: &mut Criterion) {
    let input = panel(200, 250);
    c.bench_function("fe_two_way_200x250", |b| {
        b.iter_batched(
            || input.clone(),
            |inp| fe_regression(&inp, FixedEffects::BOTH, FixedEffects::BOTH).unwrap(),
            BatchSize::LargeInput,
        )
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = simulate, estimate, regression
}
criterion_main!(benches);
