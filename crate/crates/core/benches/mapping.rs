//! Sequential against rayon-parallel evaluation of a heptagon grid.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use heptamap::curve::Norm;
use heptamap::exec::Execution;
use heptamap::mapper::{params_from, ConformalMap, MapConfig};
use heptamap::theta::ThetaConfig;
use heptamap::{Mat2, C64};

fn reference_map() -> ConformalMap {
    let (params, _) = params_from(&Mat2::new(2.0, 0.5, 0.5, 1.5), 0.2, 2, 5, ThetaConfig::default()).expect("reference parameters");
    ConformalMap::new(&params, MapConfig::default()).expect("reference map")
}

fn grid(c: &mut Criterion) {
    let map = reference_map();
    let ws = map.vertices().interior_mesh(12, 8, 2.0);
    let xs: Vec<C64> = map
        .to_halfplane_many(&ws, Norm::STANDARD, Execution::Sequential)
        .into_iter()
        .map(|r| r.expect("interior point maps").x)
        .collect();

    let mut group = c.benchmark_group("grid");
    group.sample_size(10);
    for mode in [Execution::Sequential, Execution::Parallel] {
        let label = format!("{mode:?}");
        group.bench_with_input(BenchmarkId::new("to_halfplane", &label), &mode, |b, &m| {
            b.iter(|| black_box(map.to_halfplane_many(black_box(&ws), Norm::STANDARD, m)))
        });
        group.bench_with_input(BenchmarkId::new("to_heptagon", &label), &mode, |b, &m| {
            b.iter(|| black_box(map.to_heptagon_many(black_box(&xs), Norm::STANDARD, m)))
        });
    }
    group.finish();
}

criterion_group!(benches, grid);
criterion_main!(benches);
