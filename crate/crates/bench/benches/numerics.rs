use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use recipkit::dynamics::{simulate_hessian_pseudo_gradient, StepControl};
use recipkit::legendre::{make_legendre_pair, InitPolicy};
use recipkit::linalg::expm;
use recipkit::linear::{check_linear_reciprocity, default_past_inputs, recover_metric_hankel};
use recipkit::models::{swing_as_hessian_pseudo_gradient, SwingModel};
use recipkit::{Signal, Vector};
use recipkit_bench::relaxation_chain;

fn matrix_exponential(c: &mut Criterion) {
    let mut group = c.benchmark_group("expm");
    for n in [4, 8, 16] {
        let (sys, _, _) = relaxation_chain(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &sys.a, |b, a| b.iter(|| expm(black_box(a))));
    }
    group.finish();
}

fn linear_checks(c: &mut Criterion) {
    let (sys, g, sigma) = relaxation_chain(8);
    c.bench_function("reciprocity n=8", |b| {
        b.iter(|| check_linear_reciprocity(black_box(&sys), &g, &sigma, 1e-9).unwrap())
    });
    let (sys, _, sigma) = relaxation_chain(3);
    let inputs = default_past_inputs(3, 1);
    c.bench_function("hankel n=3", |b| {
        b.iter(|| recover_metric_hankel(black_box(&sys), &sigma, 10.0, &inputs).unwrap())
    });
}

fn legendre(c: &mut Criterion) {
    let model = SwingModel::two_node(1.0);
    let k = model.metric_generator();
    let pair = make_legendre_pair(&k, InitPolicy::ColdStart).unwrap();
    let points = k.domain().shrink(0.9).low_discrepancy(64);
    let images: Vec<Vector> = points.iter().map(|x| pair.forward(x)).collect();
    c.bench_function("legendre inverse swing (64 points)", |b| {
        b.iter(|| images.iter().map(|z| pair.inverse(black_box(z)).unwrap()).count())
    });
}

fn simulation(c: &mut Criterion) {
    let model = SwingModel::two_node(1.0);
    let sys = swing_as_hessian_pseudo_gradient(&model).unwrap();
    let x0 = Vector::from_column_slice(&[0.3, -0.2, 0.4]);
    let u = Signal::new(2, |t| Vector::from_column_slice(&[0.2 * t.sin(), -0.1]));
    let mut group = c.benchmark_group("simulate swing");
    group.sample_size(10);
    group.bench_function("horizon 10, step 1e-2", |b| {
        b.iter(|| simulate_hessian_pseudo_gradient(&sys, black_box(&x0), &u, (0.0, 10.0), &StepControl::new(1e-2)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, matrix_exponential, linear_checks, legendre, simulation);
criterion_main!(benches);
