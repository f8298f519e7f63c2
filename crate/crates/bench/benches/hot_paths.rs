//! Hot-path benchmarks: metric sampling under each derivative engine, the
//! per-point curvature assembly, the 4D oracle, and geodesic stepping.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use worldline_core::geodesic::GeodesicState;
use worldline_core::metric::DerivMode;
use worldline_core::{catalog, curvature, eval_sample, geodesic, oracle};

fn kn_point() -> [f64; 4] {
    [0.0, 3.0, std::f64::consts::FRAC_PI_3, 0.7]
}

fn bench_sampling(c: &mut Criterion) {
    let spec = catalog::kerr_newman(1.0, 0.5, 0.3);
    let x = kn_point();
    let mut group = c.benchmark_group("eval_sample");
    for (name, mode) in [
        ("analytic", DerivMode::Analytic),
        ("dual", DerivMode::Dual),
        ("fd", DerivMode::Fd),
    ] {
        group.bench_function(name, |b| {
            b.iter(|| eval_sample(black_box(&spec), black_box(&x), mode).unwrap())
        });
    }
    group.finish();
}

fn bench_curvature(c: &mut Criterion) {
    let spec = catalog::kerr_newman(1.0, 0.5, 0.3);
    let x = kn_point();
    c.bench_function("curvature_bundle", |b| {
        b.iter(|| curvature::curvature_bundle(black_box(&spec), black_box(&x), DerivMode::Analytic))
    });
}

fn bench_oracle(c: &mut Criterion) {
    let spec = catalog::kerr_newman(1.0, 0.5, 0.3);
    let x = kn_point();
    c.bench_function("oracle_ricci", |b| {
        b.iter(|| oracle::ricci4(black_box(&spec), black_box(&x), DerivMode::Analytic))
    });
}

fn bench_geodesic(c: &mut Criterion) {
    let spec = catalog::kerr(1.0, 0.5);
    let init = GeodesicState::from_coordinate_velocity(
        &spec,
        [0.0, 8.0, std::f64::consts::FRAC_PI_2, 0.0],
        [1.0, 0.01, 0.005, 0.043],
        DerivMode::Analytic,
    )
    .unwrap();
    c.bench_function("geodesic_lambda_10", |b| {
        b.iter(|| geodesic::integrate(black_box(&spec), &init, 10.0, 1e-10, DerivMode::Analytic))
    });
}

criterion_group!(
    benches,
    bench_sampling,
    bench_curvature,
    bench_oracle,
    bench_geodesic
);
criterion_main!(benches);
