//! Random draws from the distributions the Gibbs samplers need.
//!
//! Multivariate normals are sampled as `mean + L z` from a Cholesky factor,
//! or as `mean + L^{-T} z` when the factor is of the precision matrix.
//! Truncated normals have unit variance, matching the probit latent model:
//! the near region uses the inverse CDF and far tails (boundary more than 6
//! standard deviations from the mean) switch to exponential rejection, where
//! the inverse CDF runs out of precision.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::linalg::CholeskyFactor;
use crate::rng::RngStream;

/// One standard normal draw.
#[inline]
pub fn standard_normal(rng: &mut RngStream) -> f64 {
    rng.sample(StandardNormal)
}

/// One `N(mean, sd^2)` draw.
#[inline]
pub fn sample_normal(mean: f64, sd: f64, rng: &mut RngStream) -> f64 {
    mean + sd * standard_normal(rng)
}

/// Draws from `MVN(mean, L L^T)` as `mean + L z`.
pub fn sample_mvn(
    mean: &DVector<f64>,
    chol: &CholeskyFactor,
    rng: &mut RngStream,
) -> Result<DVector<f64>> {
    let p = chol.dim();
    if mean.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "mean has length {} but factor is {p}x{p}",
            mean.len()
        )));
    }
    let z = DVector::from_fn(p, |_, _| standard_normal(rng));
    Ok(mean + chol.l() * z)
}

/// Draws from `MVN(mean, M^{-1})` given the factor of the precision `M`,
/// as `mean + L^{-T} z`. Avoids forming the covariance explicitly.
pub fn sample_mvn_precision(
    mean: &DVector<f64>,
    precision_chol: &CholeskyFactor,
    rng: &mut RngStream,
) -> Result<DVector<f64>> {
    let p = precision_chol.dim();
    if mean.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "mean has length {} but factor is {p}x{p}",
            mean.len()
        )));
    }
    let z = DVector::from_fn(p, |_, _| standard_normal(rng));
    Ok(mean + precision_chol.solve_upper(&z))
}

/// Distance from the mean, in standard deviations, beyond which truncation
/// switches from inverse-CDF to exponential rejection.
const TAIL_SWITCH: f64 = 6.0;

/// Draws from `N(mu, 1)` conditioned to `(lower, upper)`.
///
/// Either bound may be infinite. Draws that land exactly on a boundary are
/// resampled, so the result is always strictly interior.
pub fn sample_truncated_normal(
    mu: f64,
    lower: f64,
    upper: f64,
    rng: &mut RngStream,
) -> Result<f64> {
    if !(lower < upper) {
        return Err(Error::EmptyInterval { lower, upper });
    }
    let a = lower - mu;
    let b = upper - mu;
    loop {
        let z = if a > TAIL_SWITCH {
            // Both bounds deep in the right tail.
            let z = right_tail_exponential(a, rng);
            if z >= b {
                continue;
            }
            z
        } else if b < -TAIL_SWITCH {
            // Both bounds deep in the left tail; mirror the right-tail scheme.
            let z = -right_tail_exponential(-b, rng);
            if z <= a {
                continue;
            }
            z
        } else {
            inverse_cdf_region(a, b, rng)
        };
        let x = mu + z;
        if x > lower && x < upper && x.is_finite() {
            return Ok(x);
        }
    }
}

/// Inverse-CDF draw for intervals that overlap the central region.
fn inverse_cdf_region(a: f64, b: f64, rng: &mut RngStream) -> f64 {
    let std = Normal::standard();
    let fa = if a == f64::NEG_INFINITY { 0.0 } else { std.cdf(a) };
    let fb = if b == f64::INFINITY { 1.0 } else { std.cdf(b) };
    let u = fa + rng.random::<f64>() * (fb - fa);
    std.inverse_cdf(u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
}

/// Robert's exponential-rejection sampler for `N(0, 1)` conditioned to
/// `(a, inf)` with `a > 0`. Proposal is `a + Exp(lambda)` with the optimal
/// rate `lambda = (a + sqrt(a^2 + 4)) / 2`.
fn right_tail_exponential(a: f64, rng: &mut RngStream) -> f64 {
    let lambda = 0.5 * (a + (a * a + 4.0).sqrt());
    let exp = Exp::new(lambda).expect("positive rate");
    loop {
        let z = a + exp.sample(rng);
        let log_accept = -0.5 * (z - lambda) * (z - lambda);
        if rng.random::<f64>().ln() <= log_accept {
            return z;
        }
    }
}

/// Draws from `InverseGamma(shape, rate)` as `rate / Gamma(shape, scale=1)`.
pub fn sample_inverse_gamma(shape: f64, rate: f64, rng: &mut RngStream) -> Result<f64> {
    if !(shape > 0.0) || !shape.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "inverse-gamma shape must be positive and finite, got {shape}"
        )));
    }
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "inverse-gamma rate must be positive and finite, got {rate}"
        )));
    }
    let gamma = Gamma::new(shape, 1.0).expect("validated shape");
    // A gamma draw can underflow to zero for small shapes; resample so the
    // returned value stays finite and positive.
    loop {
        let g: f64 = gamma.sample(rng);
        if g > 0.0 {
            return Ok(rate / g);
        }
    }
}
