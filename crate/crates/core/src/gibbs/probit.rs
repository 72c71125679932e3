//! Gibbs sampler for the probit model with knockoff augmentation.
//!
//! The binary response follows P(y_i = 1) = Phi(x_i^T beta + x~_i^T beta~).
//! Latent utilities u_i = x_i^T beta + x~_i^T beta~ + e_i with e_i ~ N(0, 1)
//! turn the model into a unit-variance linear regression on u:
//!
//! ```text
//! u_i | rest ~ TN_(0, inf)(x_i^T beta + x~_i^T beta~, 1)   if y_i = 1
//! u_i | rest ~ TN_(-inf, 0](x_i^T beta + x~_i^T beta~, 1)  if y_i = 0
//! ```
//!
//! Coefficients and knockoff rows then reuse the linear-model conditionals
//! with sigma^2 = 1 and y replaced by u.

use nalgebra::{DMatrix, DVector};

use crate::dist::sample_truncated_normal;
use crate::error::{Error, Result};
use crate::knockoff::{delta_statistic, sample_knockoffs_marginal, KnockoffJointModel};
use crate::rng::RngStream;

use super::{
    draw_coefficients_gram, draw_knockoff_rows, validate_chain_inputs, ChainConfig, ProbitTrace,
};

/// Coefficient norm beyond which the chain flags likely separation.
const SEPARATION_NORM: f64 = 1e3;

/// Draws (beta, beta~) jointly from the probit conditional given the latent
/// utilities: a unit-variance Gram draw, with an optional ridge term when
/// the stacked design is singular by construction (2p >= n).
pub fn update_coefficients_probit(
    x: &DMatrix<f64>,
    xk: &DMatrix<f64>,
    u: &DVector<f64>,
    ridge: Option<f64>,
    rng: &mut RngStream,
) -> Result<(DVector<f64>, DVector<f64>)> {
    draw_coefficients_gram(x, xk, u, 1.0, ridge, rng)
}

/// Redraws every latent utility from its truncated-normal conditional.
pub fn update_latents(
    x: &DMatrix<f64>,
    xk: &DMatrix<f64>,
    beta: &DVector<f64>,
    betak: &DVector<f64>,
    y: &[u8],
    u: &mut DVector<f64>,
    rng: &mut RngStream,
) -> Result<()> {
    let n = x.nrows();
    if y.len() != n || u.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "y has {} entries and u has {}, expected {n}",
            y.len(),
            u.len()
        )));
    }
    let eta = x * beta + xk * betak;
    for i in 0..n {
        u[i] = match y[i] {
            1 => sample_truncated_normal(eta[i], 0.0, f64::INFINITY, rng)?,
            0 => sample_truncated_normal(eta[i], f64::NEG_INFINITY, 0.0, rng)?,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "probit response must be 0 or 1, got {other} at row {i}"
                )))
            }
        };
    }
    Ok(())
}

/// Redraws every knockoff row; identical to the linear-model update with
/// sigma^2 = 1 and y replaced by the latent utilities.
pub fn update_knockoff_rows_probit(
    x: &DMatrix<f64>,
    xk: &mut DMatrix<f64>,
    u: &DVector<f64>,
    model: &KnockoffJointModel,
    beta: &DVector<f64>,
    betak: &DVector<f64>,
    rng: &mut RngStream,
) -> Result<()> {
    draw_knockoff_rows(x, xk, u, model, beta, betak, 1.0, rng)
}

/// Runs the full probit chain: marginal knockoff initialization, latent
/// utilities seeded from a zero linear predictor, then sweeps of
/// coefficients, latents, and knockoff rows.
pub fn run_chain_probit(
    x: &DMatrix<f64>,
    y: &[u8],
    model: &KnockoffJointModel,
    config: &ChainConfig,
) -> Result<ProbitTrace> {
    let n = x.nrows();
    let p = x.ncols();
    let y_f64 = DVector::from_fn(n, |i, _| f64::from(y[i]));
    validate_chain_inputs(x, &y_f64, model, config)?;
    if let Some(bad) = y.iter().find(|v| **v > 1) {
        return Err(Error::InvalidParameter(format!(
            "probit response must be 0 or 1, got {bad}"
        )));
    }
    if config.ridge.is_none() && 2 * p >= n {
        return Err(Error::SingularGram(format!(
            "probit flat conditional requires n > 2p (n = {n}, 2p = {}); pass a ridge to proceed",
            2 * p
        )));
    }
    let mut warnings = Vec::new();
    let ones = y.iter().filter(|v| **v == 1).count();
    if ones == 0 || ones == n {
        warnings.push(format!(
            "degenerate response: all {n} observations are {}",
            if ones == 0 { 0 } else { 1 }
        ));
    }
    let mut rng = RngStream::new(config.seed, config.stream);
    let mut xk = sample_knockoffs_marginal(model, x, &mut rng)?;
    let mut beta = DVector::zeros(p);
    let mut betak = DVector::zeros(p);
    let mut u = DVector::zeros(n);
    update_latents(x, &xk, &beta, &betak, y, &mut u, &mut rng)?;
    let total = config.burn_in + config.samples * config.thin;
    let mut trace = ProbitTrace {
        beta: Vec::with_capacity(config.samples),
        betak: Vec::with_capacity(config.samples),
        delta: Vec::with_capacity(config.samples),
        latent_snapshots: Vec::new(),
        knockoff_snapshots: Vec::new(),
        burn_in: config.burn_in,
        thin: config.thin,
        seed: config.seed,
        warnings,
    };
    let mut separation_flagged = false;
    for t in 1..=total {
        let (b, bk) = update_coefficients_probit(x, &xk, &u, config.ridge, &mut rng)?;
        beta = b;
        betak = bk;
        update_latents(x, &xk, &beta, &betak, y, &mut u, &mut rng)?;
        update_knockoff_rows_probit(x, &mut xk, &u, model, &beta, &betak, &mut rng)?;
        if t > config.burn_in {
            if !separation_flagged && beta.norm() > SEPARATION_NORM {
                trace.warnings.push(format!(
                    "possible separation: |beta| = {:.3e} exceeds {SEPARATION_NORM:.0e} at iteration {t}",
                    beta.norm()
                ));
                separation_flagged = true;
            }
            if (t - config.burn_in) % config.thin == 0 {
                let kept = trace.beta.len();
                trace.beta.push(beta.clone());
                trace.betak.push(betak.clone());
                trace.delta.push(delta_statistic(x, &xk)?);
                if let Some(every) = config.keep_knockoffs_every {
                    if every > 0 && kept % every == 0 {
                        trace.latent_snapshots.push((kept, u.clone()));
                        trace.knockoff_snapshots.push((kept, xk.clone()));
                    }
                }
            }
        }
    }
    Ok(trace)
}
