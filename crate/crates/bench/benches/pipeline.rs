use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use paircorr_bench::{laguerre_poly, z_certificate, z_problem};
use paircorr_core::functionals::eval_z;
use paircorr_core::gausspoly::segment_moments;
use paircorr_core::rigor::gaussian_moments;
use paircorr_core::sdp::solve;
use paircorr_core::{verify, Candidate, SeriesTruncation, SolverOptions};
use rug::{Float, Rational};

fn fourier(c: &mut Criterion) {
    let mut g = c.benchmark_group("fourier");
    for d in [10, 40] {
        let f = laguerre_poly(d, 256);
        g.bench_with_input(BenchmarkId::from_parameter(d), &f, |b, f| b.iter(|| f.fourier()));
    }
    g.finish();
}

fn moments(c: &mut Criterion) {
    let a = Float::with_val(256, 1.05);
    c.bench_function("segment_moments/80", |b| b.iter(|| segment_moments(80, &a, None, 256).unwrap()));
    let (lo, hi) = (Rational::from((1, 2)), Rational::from((21, 20)));
    c.bench_function("interval_moments/80", |b| b.iter(|| gaussian_moments(80, &lo, &hi, 256)));
}

fn functional(c: &mut Criterion) {
    let f = laguerre_poly(12, 256);
    let cand = Candidate::poly(f, Float::with_val(256, 1.05)).unwrap();
    c.bench_function("eval_z/d12", |b| b.iter(|| eval_z(&cand, 256).unwrap()));
}

fn sdp(c: &mut Criterion) {
    let mut g = c.benchmark_group("sdp_solve");
    g.sample_size(10);
    for d in [4, 8] {
        let problem = z_problem(d, 256);
        let opts = SolverOptions::default();
        g.bench_with_input(BenchmarkId::from_parameter(d), &problem, |b, p| b.iter(|| solve(p, &opts).unwrap()));
    }
    g.finish();
}

fn rigor(c: &mut Criterion) {
    let mut g = c.benchmark_group("verify");
    g.sample_size(10);
    let trunc = SeriesTruncation::default();
    for d in [4, 8] {
        let cert = z_certificate(d);
        g.bench_with_input(BenchmarkId::from_parameter(d), &cert, |b, cert| {
            b.iter(|| verify(cert, &trunc, 256).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, fourier, moments, functional, sdp, rigor);
criterion_main!(benches);
