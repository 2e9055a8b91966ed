//! Hot-path benchmarks: Monte Carlo volume, cover validation, support
//! evaluation, and similarity composition chains.

use criterion::{criterion_group, criterion_main, Criterion};
use simtile_core::fixtures::cone_spindle_tiling;
use simtile_core::geom::vector;
use simtile_core::rng::SampleStream;
use simtile_core::tiling::{validate_tiling, Thresholds};
use simtile_core::{Body, Halfspace, Similarity};
use std::hint::black_box;

fn random_cut_polytope(dim: usize, seed: u64) -> Body {
    let mut stream = SampleStream::at(seed, 0);
    let mut halfspaces = Vec::new();
    for i in 0..dim {
        let mut lo = vec![0.0; dim];
        lo[i] = -1.0;
        halfspaces.push(Halfspace::new(vector(&lo), 1.0).unwrap());
        let mut hi = vec![0.0; dim];
        hi[i] = 1.0;
        halfspaces.push(Halfspace::new(vector(&hi), 1.0).unwrap());
    }
    for _ in 0..dim {
        let u = stream.unit_direction(dim);
        let c = 0.7 + 0.4 * stream.next_f64();
        halfspaces.push(Halfspace::new(u, c).unwrap());
    }
    Body::polytope(halfspaces).unwrap()
}

fn bench_volume(c: &mut Criterion) {
    let spindle = Body::cone_spindle(4).unwrap();
    c.bench_function("volume cone_spindle(4) 100k", |b| {
        b.iter(|| spindle.volume(black_box(100_000), black_box(7)))
    });
}

fn bench_validate(c: &mut Criterion) {
    let tiling = cone_spindle_tiling(4).unwrap();
    let thresholds = Thresholds {
        volume_gap: 0.01,
        overlap: 0.01,
    };
    c.bench_function("validate cone_spindle_tiling(4) 50k", |b| {
        b.iter(|| validate_tiling(&tiling, black_box(50_000), black_box(7), &thresholds))
    });
}

fn bench_support(c: &mut Criterion) {
    let spindle = Body::cone_spindle(6).unwrap();
    let polytope = random_cut_polytope(3, 5);
    let mut stream = SampleStream::at(11, 0);
    let spindle_dirs: Vec<_> = (0..256).map(|_| stream.unit_direction(6)).collect();
    let polytope_dirs: Vec<_> = (0..256).map(|_| stream.unit_direction(3)).collect();

    c.bench_function("support cone_spindle(6) x256", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for d in &spindle_dirs {
                acc += spindle.support(black_box(d)).0;
            }
            acc
        })
    });
    c.bench_function("support cut polytope dim 3 x256", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for d in &polytope_dirs {
                acc += polytope.support(black_box(d)).0;
            }
            acc
        })
    });
}

fn bench_compose(c: &mut Criterion) {
    let g = Similarity::homothety(0.5, &vector(&[0.0, 0.0, 1.0, 0.0])).unwrap();
    let h = Similarity::homothety(0.5, &vector(&[0.0, 0.0, 0.0, 1.0])).unwrap();
    c.bench_function("compose 64 homotheties + fixed point", |b| {
        b.iter(|| {
            let mut word = g.clone();
            for i in 0..64u32 {
                let letter = if i % 2 == 0 { &h } else { &g };
                word = word.compose(black_box(letter)).unwrap();
            }
            word.fixed_point()
        })
    });
}

fn bench_extremal(c: &mut Criterion) {
    let disk = Body::cone_spindle(2).unwrap();
    c.bench_function("extremal disk m=256 delta=1e-3", |b| {
        b.iter(|| disk.estimate_extremal_points(black_box(256), black_box(1e-3), 13))
    });
}

criterion_group!(
    kernels,
    bench_volume,
    bench_validate,
    bench_support,
    bench_compose,
    bench_extremal
);
criterion_main!(kernels);
