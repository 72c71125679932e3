//! Criterion benchmarks for the hot kernels: Cholesky, marginal knockoff
//! sampling, the two linear coordinate sweeps, and greedy selection.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nalgebra::DVector;

use bkf_bench::{fitted_model, synthetic_regression};
use bkf_core::dist::standard_normal;
use bkf_core::gibbs::{
    update_coefficients_flat, update_coefficients_spike_slab, update_knockoff_rows_linear,
    update_sigma2, WeightForm,
};
use bkf_core::knockoff::sample_knockoffs_marginal;
use bkf_core::selection::{estimate_null_bounds, greedy_select};
use bkf_core::{cholesky, RngStream, SymmetricMatrix};

fn bench_cholesky(c: &mut Criterion) {
    for p in [30usize, 100] {
        // equicorrelated at 0.3: positive definite at any size
        let m = SymmetricMatrix::from_fn(p, |i, j| if i == j { 1.0 } else { 0.3 });
        c.bench_function(&format!("cholesky/p={p}"), |b| {
            b.iter(|| cholesky(black_box(&m)).unwrap())
        });
    }
}

fn bench_marginal_knockoffs(c: &mut Criterion) {
    let (n, p) = (500, 30);
    let (x, _) = synthetic_regression(n, p, 1);
    let model = fitted_model(&x);
    let mut rng = RngStream::new(2, 0);
    c.bench_function(&format!("marginal_knockoffs/n={n},p={p}"), |b| {
        b.iter(|| sample_knockoffs_marginal(black_box(&model), black_box(&x), &mut rng).unwrap())
    });
}

fn bench_linear_sweep(c: &mut Criterion) {
    let (n, p) = (500, 30);
    let (x, y) = synthetic_regression(n, p, 3);
    let model = fitted_model(&x);
    let mut rng = RngStream::new(4, 0);
    let mut xk = sample_knockoffs_marginal(&model, &x, &mut rng).unwrap();
    let mut sigma2 = 1.0;
    c.bench_function(&format!("flat_sweep/n={n},p={p}"), |b| {
        b.iter(|| {
            let (beta, betak) = update_coefficients_flat(&x, &xk, &y, sigma2, &mut rng).unwrap();
            sigma2 = update_sigma2(&x, &xk, &y, &beta, &betak, &mut rng).unwrap();
            update_knockoff_rows_linear(&x, &mut xk, &y, &model, &beta, &betak, sigma2, &mut rng)
                .unwrap();
        })
    });

    let order: Vec<usize> = (0..p).collect();
    let mut beta = DVector::zeros(p);
    let mut betak = DVector::zeros(p);
    c.bench_function(&format!("spike_slab_sweep/n={n},p={p}"), |b| {
        b.iter(|| {
            update_coefficients_spike_slab(
                &x,
                &xk,
                &y,
                &mut beta,
                &mut betak,
                1.0,
                0.1,
                1.0,
                WeightForm::Corrected,
                &order,
                &mut rng,
            )
            .unwrap()
        })
    });
}

fn bench_selection(c: &mut Criterion) {
    let (p, t) = (30, 2000);
    let mut rng = RngStream::new(5, 0);
    let draws: Vec<DVector<f64>> = (0..t)
        .map(|_| DVector::from_fn(p, |_, _| standard_normal(&mut rng)))
        .collect();
    c.bench_function(&format!("selection/p={p},T={t}"), |b| {
        b.iter(|| {
            let bounds = estimate_null_bounds(black_box(&draws)).unwrap();
            greedy_select(&bounds, 0.1).unwrap()
        })
    });
}

criterion_group!(
    benches,
    bench_cholesky,
    bench_marginal_knockoffs,
    bench_linear_sweep,
    bench_selection
);
criterion_main!(benches);
