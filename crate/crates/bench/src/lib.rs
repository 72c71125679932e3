//! Shared fixtures for the criterion benchmarks.

use bkf_core::dist::standard_normal;
use bkf_core::knockoff::{
    build_joint_model, construct_s_equicorrelated, estimate_moments, KnockoffJointModel,
    DEFAULT_SLACK,
};
use bkf_core::RngStream;
use nalgebra::{DMatrix, DVector};

/// Standard normal design with a sparse linear signal and unit noise.
pub fn synthetic_regression(n: usize, p: usize, seed: u64) -> (DMatrix<f64>, DVector<f64>) {
    let mut rng = RngStream::new(seed, 0);
    let x = DMatrix::from_fn(n, p, |_, _| standard_normal(&mut rng));
    let y = DVector::from_fn(n, |i, _| {
        2.0 * x[(i, 0)] - 1.5 * x[(i, 1 % p)] + standard_normal(&mut rng)
    });
    (x, y)
}

/// Second-order knockoff model fitted to the design columns.
pub fn fitted_model(x: &DMatrix<f64>) -> KnockoffJointModel {
    let moments = estimate_moments(x, true).expect("benchmark design is well conditioned");
    let s = construct_s_equicorrelated(&moments.sigma, DEFAULT_SLACK)
        .expect("correlation matrix from standardized moments");
    build_joint_model(&moments, &s).expect("equicorrelated s keeps V positive definite")
}
