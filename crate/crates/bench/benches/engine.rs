use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use monosparse::{
    feature_reorder, generate, simulate, EnergyParams, SparsitySpec, Strategy, TileConfig,
};
use monosparse_bench::sweep_fixture;

fn strategies(c: &mut Criterion) {
    let params = EnergyParams::default_calibration();
    let tile = TileConfig::new(24, 48).unwrap();
    let mut group = c.benchmark_group("simulate_240x320");
    for lambda in [0.3, 0.7] {
        let (array, queries) = sweep_fixture(240, 320, lambda, 1);
        for s in Strategy::ALL {
            group.bench_with_input(BenchmarkId::new(s.as_str(), lambda), &lambda, |b, _| {
                b.iter(|| simulate(black_box(&array), tile, &queries, s, &params).unwrap())
            });
        }
    }
    group.finish();
}

fn preprocessing(c: &mut Criterion) {
    let spec = SparsitySpec::new(640, 480, 0.7, 0.0, 1);
    c.bench_function("generate_640x480", |b| {
        b.iter(|| generate(black_box(&spec)).unwrap())
    });
    let array = generate(&spec).unwrap();
    c.bench_function("feature_reorder_640x480", |b| {
        b.iter(|| feature_reorder(black_box(&array)))
    });
}

criterion_group!(benches, strategies, preprocessing);
criterion_main!(benches);
