use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use normlab_core::norm_lab::{
    extremal_ratio, power_method_lower_bound, random_upper_bound_check, LogGrid,
};
use normlab_core::sharp_constant::mc_constant;
use normlab_core::{
    factor_constant, FactorKernel, LebesgueExponent, ProductKernel, QuadratureSpec,
};

fn quadrature(c: &mut Criterion) {
    let spec = QuadratureSpec::default();
    let p = LebesgueExponent::new(2.0).unwrap();
    let mut group = c.benchmark_group("factor_constant");
    for n in [1, 3] {
        let k = FactorKernel::hilbert(n).unwrap();
        group.bench_with_input(BenchmarkId::new("hilbert", n), &k, |b, k| {
            b.iter(|| factor_constant(black_box(k), p, &spec).unwrap())
        });
    }
    let angular = FactorKernel::custom(3, "1/(s^3 + r^3 + s*r*(1 + c))").unwrap();
    group.bench_function("custom_angular_n3", |b| {
        b.iter(|| factor_constant(black_box(&angular), p, &spec).unwrap())
    });
    group.finish();
}

fn norm_lab(c: &mut Criterion) {
    let p = LebesgueExponent::new(2.0).unwrap();
    let kernel = ProductKernel::hilbert(&[1]).unwrap();
    let grid = LogGrid::default();
    let mut group = c.benchmark_group("norm_lab");
    group.sample_size(10);
    group.bench_function("extremal_ratio_eps_0.5", |b| {
        b.iter(|| extremal_ratio(&kernel, p, black_box(0.5), &grid).unwrap())
    });
    group.bench_function("power_method_100", |b| {
        b.iter(|| power_method_lower_bound(&kernel, p, &grid, 100, 0).unwrap())
    });
    group.bench_function("upper_bound_10", |b| {
        b.iter(|| random_upper_bound_check(&kernel, p, &grid, black_box(7), 10).unwrap())
    });
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let p = LebesgueExponent::new(2.0).unwrap();
    let k = FactorKernel::hilbert(2).unwrap();
    let mut group = c.benchmark_group("monte_carlo");
    group.sample_size(10);
    group.bench_function("hilbert2_1e5", |b| {
        b.iter(|| mc_constant(&k, p, &[1.0, 0.0], black_box(1), 100_000).unwrap())
    });
    group.finish();
}

criterion_group!(benches, quadrature, norm_lab, monte_carlo);
criterion_main!(benches);
