//! Second-order Gaussian knockoff model.
//!
//! For features with moments (mu, Sigma), originals and knockoffs are modeled
//! jointly as
//!
//! ```text
//! (X, X~) ~ MVN(0, G),   G = [ Sigma            Sigma - diag{s} ]
//!                            [ Sigma - diag{s}  Sigma           ]
//! ```
//!
//! on centered coordinates. Conditioning on X = x gives the knockoff
//! generator used everywhere else:
//!
//! ```text
//! X~ | X = x ~ MVN(C x, V),
//! C = I - diag{s} Sigma^{-1},
//! V = 2 diag{s} - diag{s} Sigma^{-1} diag{s},   A = V^{-1}.
//! ```
//!
//! `s` is chosen equicorrelated, `s_j = slack * min(2 lambda_min(Sigma), 1)`,
//! with slack 0.95 by default so V stays strictly positive definite; at
//! slack = 1 the boundary case s = 2 lambda_min makes V exactly singular.
//!
//! The exchangeability diagnostic is
//!
//! ```text
//! Delta(X~) = (1/n) sum_{j != k} sum_i ( x~_ij x~_ik + 2 x_ij x~_ik - 3 x_ij x_ik ),
//! ```
//!
//! summed over ordered pairs j != k; under a valid joint model every term has
//! expectation Sigma_jk + 2(Sigma_jk) - 3 Sigma_jk = 0, so Delta fluctuates
//! around zero and drifts when the knockoff law is wrong.

use nalgebra::{DMatrix, DVector};

use crate::dist::sample_mvn;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, regularize_to_pd, CholeskyFactor, SymmetricMatrix};
use crate::rng::RngStream;

/// Default slack factor applied to the equicorrelated s value.
pub const DEFAULT_SLACK: f64 = 0.95;

/// Relative threshold under which a column counts as constant.
const DEGENERATE_SD_TOL: f64 = 1e-10;

/// Estimated first and second moments of the feature distribution.
#[derive(Debug, Clone)]
pub struct MomentEstimate {
    /// Mean of the data the model describes (zero when standardized).
    pub mean: DVector<f64>,
    /// Covariance (correlation matrix when standardized), PD after jitter.
    pub sigma: SymmetricMatrix,
    /// Diagonal jitter that was added to reach positive definiteness.
    pub jitter: f64,
    /// Number of rows the estimate used.
    pub n: usize,
}

impl MomentEstimate {
    /// Wraps externally known moments, e.g. the true covariance of a
    /// synthetic design, verifying positive definiteness.
    pub fn from_known(mean: DVector<f64>, sigma: SymmetricMatrix) -> Result<Self> {
        if mean.len() != sigma.dim() {
            return Err(Error::DimensionMismatch(format!(
                "mean has length {} but sigma is {}x{}",
                mean.len(),
                sigma.dim(),
                sigma.dim()
            )));
        }
        cholesky(&sigma)?;
        Ok(MomentEstimate {
            mean,
            sigma,
            jitter: 0.0,
            n: 0,
        })
    }
}

/// Checks every entry for NaN or infinity, reporting the first offender.
fn check_finite(data: &DMatrix<f64>) -> Result<()> {
    for j in 0..data.ncols() {
        for i in 0..data.nrows() {
            if !data[(i, j)].is_finite() {
                return Err(Error::NonFiniteInput { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// Centers and scales each column to mean 0, variance 1 (denominator n-1).
///
/// Returns the standardized matrix together with the column means and
/// standard deviations that were removed.
pub fn standardize_columns(
    data: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DVector<f64>, DVector<f64>)> {
    let (n, p) = data.shape();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 rows to standardize, got {n}"
        )));
    }
    check_finite(data)?;
    let mut out = data.clone();
    let mut means = DVector::zeros(p);
    let mut sds = DVector::zeros(p);
    for j in 0..p {
        let col = data.column(j);
        let mean = col.sum() / n as f64;
        let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
        let sd = (ss / (n as f64 - 1.0)).sqrt();
        if sd <= DEGENERATE_SD_TOL * mean.abs().max(1.0) {
            return Err(Error::DegenerateColumn {
                name: format!("{}", j + 1),
            });
        }
        means[j] = mean;
        sds[j] = sd;
        for i in 0..n {
            out[(i, j)] = (data[(i, j)] - mean) / sd;
        }
    }
    Ok((out, means, sds))
}

/// Estimates feature moments from data, optionally on the standardized scale.
///
/// With `standardize` the reported mean is zero and the covariance is the
/// sample correlation matrix; otherwise plain sample moments (denominator
/// n-1) are used. Either way the covariance is jitter-regularized until its
/// strict Cholesky succeeds, and the jitter is reported.
pub fn estimate_moments(data: &DMatrix<f64>, standardize: bool) -> Result<MomentEstimate> {
    let (n, p) = data.shape();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 rows to estimate moments, got {n}"
        )));
    }
    check_finite(data)?;
    let (mean, centered) = if standardize {
        let (z, _, _) = standardize_columns(data)?;
        (DVector::zeros(p), z)
    } else {
        let means = DVector::from_fn(p, |j, _| data.column(j).sum() / n as f64);
        let centered = DMatrix::from_fn(n, p, |i, j| data[(i, j)] - means[j]);
        (means, centered)
    };
    let cov = centered.tr_mul(&centered) / (n as f64 - 1.0);
    let sigma_raw = SymmetricMatrix::from_fn(p, |i, j| cov[(i, j)]);
    let reg = regularize_to_pd(&sigma_raw, None)?;
    let sigma = if reg.jitter > 0.0 {
        sigma_raw.add_diag(reg.jitter)
    } else {
        sigma_raw
    };
    Ok(MomentEstimate {
        mean,
        sigma,
        jitter: reg.jitter,
        n,
    })
}

/// Equicorrelated knockoff diagonal: `s_j = slack * min(2 lambda_min, 1)`.
///
/// Expects a correlation matrix (unit diagonal). The returned vector is the
/// raw construction value; [`build_joint_model`] performs the strict
/// positive-definiteness check on the implied V, since slack = 1 can land
/// exactly on the singular boundary.
pub fn construct_s_equicorrelated(sigma: &SymmetricMatrix, slack: f64) -> Result<DVector<f64>> {
    if !(slack > 0.0 && slack <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "slack must lie in (0, 1], got {slack}"
        )));
    }
    let p = sigma.dim();
    for i in 0..p {
        if (sigma.get(i, i) - 1.0).abs() > 1e-3 {
            return Err(Error::InvalidParameter(format!(
                "expected a correlation matrix; diagonal entry {} is {}",
                i + 1,
                sigma.get(i, i)
            )));
        }
    }
    let eigen = sigma.to_dense().symmetric_eigen();
    let lambda_min = eigen.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(lambda_min > 0.0) {
        return Err(Error::NotPositiveDefinite(format!(
            "smallest eigenvalue {lambda_min:.3e} is not positive"
        )));
    }
    let s = slack * (2.0 * lambda_min).min(1.0);
    Ok(DVector::from_element(p, s))
}

/// Joint Gaussian knockoff model with its conditional generator cached.
#[derive(Debug, Clone)]
pub struct KnockoffJointModel {
    pub mean: DVector<f64>,
    pub sigma: SymmetricMatrix,
    pub s: DVector<f64>,
    /// Conditional mean map: E[X~ | X = x] = C x on centered coordinates.
    pub c: DMatrix<f64>,
    /// Conditional covariance V = 2 diag{s} - diag{s} Sigma^{-1} diag{s}.
    pub v: SymmetricMatrix,
    /// Cached Cholesky factor of V.
    pub chol_v: CholeskyFactor,
    /// Precision A = V^{-1}, used by the Gibbs knockoff-row updates.
    pub a: SymmetricMatrix,
}

impl KnockoffJointModel {
    pub fn p(&self) -> usize {
        self.s.len()
    }

    /// The implied 2p x 2p joint covariance G, for validation.
    pub fn joint_covariance(&self) -> SymmetricMatrix {
        let p = self.p();
        SymmetricMatrix::from_fn(2 * p, |i, j| {
            let (bi, ii) = (i / p, i % p);
            let (bj, jj) = (j / p, j % p);
            let base = self.sigma.get(ii, jj);
            if bi == bj {
                base
            } else if ii == jj {
                base - self.s[ii]
            } else {
                base
            }
        })
    }
}

/// Assembles the joint model from moments and a knockoff diagonal.
///
/// Fails as [`Error::NotPositiveDefinite`] when V does not pass the strict
/// Cholesky test, which happens for s = 0 or for s on the feasibility
/// boundary.
pub fn build_joint_model(moments: &MomentEstimate, s: &DVector<f64>) -> Result<KnockoffJointModel> {
    let p = moments.sigma.dim();
    if s.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "s has length {} but sigma is {p}x{p}",
            s.len()
        )));
    }
    if s.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "knockoff diagonal entries must be finite and >= 0".into(),
        ));
    }
    let sigma_inv = cholesky(&moments.sigma)?.inverse();
    // C = I - diag{s} Sigma^{-1}.
    let mut c = DMatrix::from_fn(p, p, |i, j| -s[i] * sigma_inv.get(i, j));
    for i in 0..p {
        c[(i, i)] += 1.0;
    }
    // V = 2 diag{s} - diag{s} Sigma^{-1} diag{s}, symmetric by symmetry of
    // Sigma^{-1}.
    let v = SymmetricMatrix::from_fn(p, |i, j| {
        let base = -s[i] * sigma_inv.get(i, j) * s[j];
        if i == j {
            2.0 * s[i] + base
        } else {
            base
        }
    });
    let chol_v = cholesky(&v)?;
    let a = chol_v.inverse();
    Ok(KnockoffJointModel {
        mean: moments.mean.clone(),
        sigma: moments.sigma.clone(),
        s: s.clone(),
        c,
        v,
        chol_v,
        a,
    })
}

/// Draws one knockoff row per input row from the conditional law
/// `MVN(C x_i, V)`. Rows must already be centered by the model mean.
pub fn sample_knockoffs_marginal(
    model: &KnockoffJointModel,
    x_rows: &DMatrix<f64>,
    rng: &mut RngStream,
) -> Result<DMatrix<f64>> {
    let p = model.p();
    if x_rows.ncols() != p {
        return Err(Error::DimensionMismatch(format!(
            "x has {} columns but model has p = {p}",
            x_rows.ncols()
        )));
    }
    let n = x_rows.nrows();
    // Conditional means for all rows at once: row i of X C^T is C x_i.
    let means = x_rows * model.c.transpose();
    let mut out = DMatrix::zeros(n, p);
    for i in 0..n {
        let mean = DVector::from_fn(p, |j, _| means[(i, j)]);
        let draw = sample_mvn(&mean, &model.chol_v, rng)?;
        for j in 0..p {
            out[(i, j)] = draw[j];
        }
    }
    Ok(out)
}

/// Exchangeability diagnostic over ordered pairs j != k.
///
/// Computed per row from row sums: with r = sum_j x_ij, r~ = sum_j x~_ij and
/// the corresponding self/cross products, the three ordered-pair sums reduce
/// to `r~^2 - |x~|^2`, `r r~ - <x, x~>`, and `r^2 - |x|^2`.
pub fn delta_statistic(x_rows: &DMatrix<f64>, xk_rows: &DMatrix<f64>) -> Result<f64> {
    if x_rows.shape() != xk_rows.shape() {
        return Err(Error::DimensionMismatch(format!(
            "x is {:?} but x~ is {:?}",
            x_rows.shape(),
            xk_rows.shape()
        )));
    }
    let (n, p) = x_rows.shape();
    if n == 0 {
        return Err(Error::InvalidParameter("delta requires at least one row".into()));
    }
    let mut total = 0.0;
    for i in 0..n {
        let mut r = 0.0;
        let mut rk = 0.0;
        let mut sxx = 0.0;
        let mut skk = 0.0;
        let mut sxk = 0.0;
        for j in 0..p {
            let xv = x_rows[(i, j)];
            let kv = xk_rows[(i, j)];
            r += xv;
            rk += kv;
            sxx += xv * xv;
            skk += kv * kv;
            sxk += xv * kv;
        }
        total += (rk * rk - skk) + 2.0 * (r * rk - sxk) - 3.0 * (r * r - sxx);
    }
    Ok(total / n as f64)
}
