use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qrwald_bench::model1_sample;
use qrwald_core::wald::test_at;
use qrwald_core::{compute_h, estimate_g, fit_rq, EgConfig, GMethod};

fn bench_fit(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit_rq");
    for n in [100usize, 300, 1000] {
        let (data, _) = model1_sample(n, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &data, |b, data| {
            b.iter(|| fit_rq(data, 0.5).unwrap())
        });
    }
    group.finish();
}

fn bench_g(c: &mut Criterion) {
    let cfg = EgConfig::default();
    let mut group = c.benchmark_group("estimate_g");
    group.sample_size(20);
    for n in [100usize, 300] {
        let (data, _) = model1_sample(n, 2);
        let fit = fit_rq(&data, 0.5).unwrap();
        for method in GMethod::ALL {
            group.bench_with_input(BenchmarkId::new(method.tag(), n), &data, |b, data| {
                b.iter(|| estimate_g(data, &fit, method, &cfg).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_wald(c: &mut Criterion) {
    let (data, restr) = model1_sample(300, 3);
    let cfg = EgConfig::default();
    c.bench_function("wald_test/weg/300", |b| {
        b.iter(|| test_at(&data, &restr, 0.5, GMethod::Eg, &cfg).unwrap())
    });
    c.bench_function("compute_h/300", |b| b.iter(|| compute_h(&data)));
}

criterion_group!(benches, bench_fit, bench_g, bench_wald);
criterion_main!(benches);
