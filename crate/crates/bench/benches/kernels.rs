use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use morrey_sparse::grid::{ball_lp_bruteforce, sliding_ball_lp};
use morrey_sparse::morrey::{gm_norm, MorreyParams, WeightSpec};
use morrey_sparse::nse::{simulate, InitialCondition, SolverConfig};
use morrey_sparse_bench::field;
use std::hint::black_box;

fn sliding(c: &mut Criterion) {
    let mut g = c.benchmark_group("ball_lp");
    g.sample_size(10);
    for n in [16, 32] {
        let f = field(n);
        g.bench_with_input(BenchmarkId::new("fft", n), &f, |b, f| {
            b.iter(|| sliding_ball_lp(black_box(f), 2.0, 0.8).unwrap())
        });
    }
    let f = field(16);
    let grid = f.grid();
    g.bench_function("bruteforce/16", |b| {
        b.iter(|| {
            (0..grid.len())
                .map(|i| ball_lp_bruteforce(&f, 2.0, grid.voxel(i), 0.8).unwrap())
                .fold(0.0, f64::max)
        })
    });
    g.finish();
}

fn global_norm(c: &mut Criterion) {
    let mut g = c.benchmark_group("gm_norm");
    g.sample_size(10);
    for n in [16, 32] {
        let f = field(n);
        for theta in [2.0, f64::INFINITY] {
            let w = WeightSpec::new(0.5, 0.25, theta).unwrap();
            let params = MorreyParams::with_default_scales(f.grid(), 2.0, w).unwrap();
            g.bench_with_input(BenchmarkId::new(format!("theta={theta}"), n), &f, |b, f| {
                b.iter(|| gm_norm(black_box(f), &params).unwrap())
            });
        }
    }
    g.finish();
}

fn solver(c: &mut Criterion) {
    let mut g = c.benchmark_group("nse");
    g.sample_size(10);
    for n in [16, 32] {
        // ten steps per iteration
        let cfg = SolverConfig::new(n, 1e-3, 1e-2, InitialCondition::TaylorGreen, 10);
        g.bench_with_input(BenchmarkId::new("ten_steps", n), &cfg, |b, cfg| {
            b.iter(|| simulate(black_box(cfg)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, sliding, global_norm, solver);
criterion_main!(benches);
