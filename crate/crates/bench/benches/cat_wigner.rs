use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use phasespace_core::cat::cat_wigner_grid;
use phasespace_core::{CatState, Complex64, EpsilonPoint, Parity, PhaseGrid};
use std::hint::black_box;

fn wigner(c: &mut Criterion) {
    let mut group = c.benchmark_group("cat_wigner_grid");
    group.sample_size(10);
    let cat = CatState::new(Parity::Even, Complex64::new(2.0, 0.0), EpsilonPoint::initial()).unwrap();
    for n in [64, 128, 256] {
        let grid = PhaseGrid::square(7.0, n).unwrap();
        group.bench_with_input(BenchmarkId::new("points", n), &grid, |b, &grid| {
            b.iter(|| cat_wigner_grid(black_box(&cat), grid).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, wigner);
criterion_main!(benches);
