use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use peellab::{calibrate, Engine, KernelSampler, NuSampler, RngStream};

fn samplers(c: &mut Criterion) {
    let law = calibrate(0.5, 10_000, 1e-8).expect("calibration");
    let nu = NuSampler::new(&law).unwrap();
    let ks = KernelSampler::new(&law).unwrap();
    let mut rng = RngStream::new(1, 0);

    c.bench_function("nu", |b| b.iter(|| nu.sample(&mut rng).unwrap()));

    let mut g = c.benchmark_group("conditioned");
    for l in [1i64, 10, 1000, 1_000_000] {
        g.bench_with_input(BenchmarkId::from_parameter(l), &l, |b, &l| b.iter(|| ks.conditioned(black_box(l), &mut rng).unwrap()));
    }
    g.finish();

    let mut g = c.benchmark_group("finite");
    for m in [1i64, 100, 5000] {
        g.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, &m| b.iter(|| ks.finite(black_box(m), &mut rng).unwrap()));
    }
    g.finish();

    let engine = Engine::new(&law).unwrap();
    let mut g = c.benchmark_group("fill");
    for l in [10u64, 1000] {
        g.bench_with_input(BenchmarkId::from_parameter(l), &l, |b, &l| b.iter(|| engine.fill_hole(black_box(l), &mut rng).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, samplers);
criterion_main!(benches);
