use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use maxint_core::body::presets::{cube3, hexagon, square};
use maxint_core::landmarks::mvee;
use maxint_core::linalg::{sym_exp, Matrix, Vector};
use maxint_core::measure::intersection_volume;
use maxint_core::solver::{gradient, solve, SolveOptions};
use maxint_core::{Ellipsoid, Method};

fn tilted(r: f64) -> Ellipsoid {
    let a = Matrix::from_row_slice(2, 2, &[0.2, 0.1, 0.1, -0.2]);
    Ellipsoid::new(sym_exp(&a), r).unwrap()
}

fn exact(c: &mut Criterion) {
    let e = tilted(1.2);
    let sq = square();
    let hex = hexagon();
    c.bench_function("exact_volume_square", |b| {
        b.iter(|| intersection_volume(black_box(&sq), &e, Method::Exact2d).unwrap())
    });
    c.bench_function("exact_gradient_hexagon", |b| {
        b.iter(|| gradient(black_box(&hex), &e, Method::Exact2d).unwrap())
    });
    c.bench_function("solve_hexagon_r1.1", |b| {
        b.iter(|| solve(black_box(&hex), 1.1, &SolveOptions::default()).unwrap())
    });
}

fn monte_carlo(c: &mut Criterion) {
    let cube = cube3();
    let e = Ellipsoid::ball(3, 1.2);
    let method = Method::MonteCarlo {
        samples: 100_000,
        seed: 1,
    };
    let mut g = c.benchmark_group("mc");
    g.sample_size(20);
    g.bench_function("volume_cube3_1e5", |b| {
        b.iter(|| intersection_volume(black_box(&cube), &e, method).unwrap())
    });
    g.bench_function("gradient_cube3_1e5", |b| {
        b.iter(|| gradient(black_box(&cube), &e, method).unwrap())
    });
    g.finish();
}

fn landmarks(c: &mut Criterion) {
    let points: Vec<Vector> = (0..64)
        .map(|k| {
            let t = k as f64 * 0.7;
            let s = k as f64 * 1.3;
            Vector::from_column_slice(&[t.cos() * s.sin(), 0.5 * t.sin() * s.sin(), 2.0 * s.cos()])
        })
        .collect();
    c.bench_function("mvee_64_points_3d", |b| b.iter(|| mvee(black_box(&points)).unwrap()));
}

criterion_group!(benches, exact, monte_carlo, landmarks);
criterion_main!(benches);
