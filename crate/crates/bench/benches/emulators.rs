use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

use demu_bench::{banana_half, training_set};
use demu_core::classifiers::{fit_rf, fit_svm, label, RfParams, SvmParams};
use demu_core::design::maximin_lhd;
use demu_core::double_emulator::PredictiveMixture;
use demu_core::gpe::{fit_gp, BasisSpec, Method};
use demu_core::kernels::KernelFamily;
use demu_core::scoring::{crps_exact, crps_numeric};

fn gp_fit(c: &mut Criterion) {
    let sim = banana_half();
    let mut group = c.benchmark_group("gp_fit");
    group.sample_size(10);
    for n in [30, 60] {
        let (x, y) = training_set(&sim, n, 1).unwrap();
        let ylog: Vec<f64> = y.iter().map(|v| (v + 1e-6).ln()).collect();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| {
                fit_gp(&x, &ylog, BasisSpec::ConstantLinear, KernelFamily::Matern52, Method::Reml).unwrap()
            })
        });
    }
    group.finish();
}

fn gp_predict(c: &mut Criterion) {
    let sim = banana_half();
    let (x, y) = training_set(&sim, 60, 2).unwrap();
    let model = fit_gp(&x, &y, BasisSpec::ConstantLinear, KernelFamily::Matern52, Method::Reml).unwrap();
    c.bench_function("gp_predict_n60", |b| b.iter(|| model.predict(black_box(&[0.3, 0.7])).unwrap()));
}

fn crps(c: &mut Criterion) {
    let pm = PredictiveMixture::new(0.7, 0.2, 0.5, 0.0, 1e-6).unwrap();
    c.bench_function("crps_exact", |b| b.iter(|| crps_exact(black_box(&pm), black_box(1.3)).unwrap()));
    c.bench_function("crps_numeric", |b| b.iter(|| crps_numeric(black_box(&pm), black_box(1.3)).unwrap()));
}

fn classifiers(c: &mut Criterion) {
    let sim = banana_half();
    let (x, y) = training_set(&sim, 200, 3).unwrap();
    let labels: Vec<bool> = y.iter().map(|&v| label(v, 0.0)).collect();
    let mut group = c.benchmark_group("classifier_fit_n200");
    group.sample_size(10);
    group.bench_function("random_forest", |b| {
        b.iter(|| fit_rf(&x, &labels, RfParams::default(), &mut ChaCha8Rng::seed_from_u64(4)).unwrap())
    });
    group.bench_function("svm", |b| {
        b.iter(|| fit_svm(&x, &labels, SvmParams::default(), &mut ChaCha8Rng::seed_from_u64(5)).unwrap())
    });
    group.finish();
}

fn design(c: &mut Criterion) {
    c.bench_function("maximin_lhd_500x2_30", |b| b.iter(|| maximin_lhd(500, 2, 30, black_box(6)).unwrap()));
}

criterion_group!(benches, gp_fit, gp_predict, crps, classifiers, design);
criterion_main!(benches);
