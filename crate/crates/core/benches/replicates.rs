// SPDX-License-Identifier: Apache-2.0

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hullwalk::geom2d::{perimeter, Mat2, Vec2};
use hullwalk::par::{map_replicates, map_replicates_sequential};
use hullwalk::walks::{joint_hull, sample_path, IncrementLaw, WalkSpec};

fn replicate(specs: &[WalkSpec], n: usize, r: u64) -> f64 {
    let paths: Vec<_> = specs.iter().map(|s| sample_path(s, 1, n, r)).collect();
    let refs: Vec<&[Vec2]> = paths.iter().map(|p| p.positions()).collect();
    perimeter(&joint_hull(&refs).unwrap())
}

fn bench(c: &mut Criterion) {
    let specs = [
        WalkSpec::new(Vec2::new(0.0, 1.0), Mat2::IDENTITY, IncrementLaw::Gaussian, 0).unwrap(),
        WalkSpec::new(Vec2::new(0.0, 1.0), Mat2::IDENTITY, IncrementLaw::Gaussian, 1).unwrap(),
    ];
    let mut g = c.benchmark_group("perimeter_replicates");
    g.sample_size(10);
    for n in [1_000usize, 10_000] {
        let reps = 64;
        g.bench_with_input(BenchmarkId::new("parallel", n), &n, |b, &n| {
            b.iter(|| map_replicates(reps, |r| replicate(&specs, n, r)))
        });
        g.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, &n| {
            b.iter(|| map_replicates_sequential(reps, |r| replicate(&specs, n, r)))
        });
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
