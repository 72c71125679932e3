//! Gibbs samplers treating knockoffs as missing data.
//!
//! Both response models share the same augmentation scheme: initialize
//! knockoff rows from the prior conditional f(x~ | x), then sweep
//!
//! 1. coefficients (beta, beta~) jointly from the 2p-dimensional Gram draw
//!    (flat prior) or coordinatewise from the spike-and-slab conditional,
//! 2. the response-model scale (sigma^2 for the linear model, the latent
//!    u for probit),
//! 3. every knockoff row x~_i from its full conditional
//!
//! ```text
//! x~_i ~ MVN(mu~_i, Sigma~),    Sigma~ = (A + c b~ b~^T)^{-1},
//! mu~_i = Sigma~ [ (diag{s}^{-1} - A - c b~ b^T) x_i + c b~ t_i ],
//! ```
//!
//! with c = 1/sigma^2 and target t = y for the linear model, c = 1 and
//! t = u for probit. Sigma~ does not depend on i, so its factor is computed
//! once per sweep and each row costs two triangular solves.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::dist::standard_normal;
use crate::error::{Error, Result};
use crate::knockoff::KnockoffJointModel;
use crate::linalg::{cholesky, SymmetricMatrix};
use crate::rng::RngStream;

pub mod linear;
pub mod probit;

pub use linear::{
    run_chain_linear, spike_slab_components, update_coefficients_flat,
    update_coefficients_spike_slab, update_knockoff_rows_linear, update_sigma2, LinearPrior,
    SpikeSlabComponents, WeightForm,
};
pub use probit::{
    run_chain_probit, update_coefficients_probit, update_knockoff_rows_probit, update_latents,
};

/// Coordinate order for the spike-and-slab sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepOrder {
    /// Fixed ascending feature order; the reproducible default.
    #[default]
    Ascending,
    /// Fresh uniform permutation every sweep.
    RandomScan,
}

/// Chain configuration shared by both samplers.
#[derive(Debug, Clone)]
pub struct ChainConfig {
    /// Iterations discarded before retention begins.
    pub burn_in: usize,
    /// Number of retained draws T.
    pub samples: usize,
    /// Keep every `thin`-th post-burn-in iteration.
    pub thin: usize,
    /// RNG seed; together with `stream` keys the chain's generator.
    pub seed: u64,
    /// RNG stream index, used to separate replications and chains.
    pub stream: u64,
    /// Spike-and-slab coordinate order.
    pub sweep: SweepOrder,
    /// Which spike-and-slab weight normalization to use.
    pub weight_form: WeightForm,
    /// Snapshot the knockoff matrix every k-th retained draw when set.
    pub keep_knockoffs_every: Option<usize>,
    /// Probit only: ridge added to the Gram matrix instead of failing when
    /// it is singular. `None` keeps the hard error.
    pub ridge: Option<f64>,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            burn_in: 500,
            samples: 2000,
            thin: 1,
            seed: 0,
            stream: 0,
            sweep: SweepOrder::Ascending,
            weight_form: WeightForm::default(),
            keep_knockoffs_every: None,
            ridge: None,
        }
    }
}

impl ChainConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidParameter(
                "config.samples must be at least 1".into(),
            ));
        }
        if self.thin == 0 {
            return Err(Error::InvalidParameter("config.thin must be at least 1".into()));
        }
        if let Some(l) = self.ridge {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "ridge must be positive and finite, got {l}"
                )));
            }
        }
        Ok(())
    }
}

/// Access to retained coefficient draws, shared by both trace types.
pub trait CoefficientTrace {
    fn beta_draws(&self) -> &[DVector<f64>];
    fn betak_draws(&self) -> &[DVector<f64>];
}

/// Retained draws from a linear-model chain.
#[derive(Debug, Clone)]
pub struct LinearTrace {
    pub beta: Vec<DVector<f64>>,
    pub betak: Vec<DVector<f64>>,
    pub sigma2: Vec<f64>,
    pub delta: Vec<f64>,
    /// (retained index, knockoff matrix) snapshots when enabled.
    pub knockoff_snapshots: Vec<(usize, DMatrix<f64>)>,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub warnings: Vec<String>,
}

impl CoefficientTrace for LinearTrace {
    fn beta_draws(&self) -> &[DVector<f64>] {
        &self.beta
    }
    fn betak_draws(&self) -> &[DVector<f64>] {
        &self.betak
    }
}

/// Retained draws from a probit chain.
#[derive(Debug, Clone)]
pub struct ProbitTrace {
    pub beta: Vec<DVector<f64>>,
    pub betak: Vec<DVector<f64>>,
    pub delta: Vec<f64>,
    /// (retained index, latent vector) snapshots when enabled.
    pub latent_snapshots: Vec<(usize, DVector<f64>)>,
    pub knockoff_snapshots: Vec<(usize, DMatrix<f64>)>,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub warnings: Vec<String>,
}

impl CoefficientTrace for ProbitTrace {
    fn beta_draws(&self) -> &[DVector<f64>] {
        &self.beta
    }
    fn betak_draws(&self) -> &[DVector<f64>] {
        &self.betak
    }
}

impl LinearTrace {
    /// Writes the trace as CSV with columns
    /// `iter, beta_1..beta_p, betak_1..betak_p, sigma2, delta`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_trace_csv(
            path,
            &self.beta,
            &self.betak,
            Some(self.sigma2.as_slice()),
            &self.delta,
            self.burn_in,
            self.thin,
        )
    }
}

impl ProbitTrace {
    /// Writes the trace as CSV with columns
    /// `iter, beta_1..beta_p, betak_1..betak_p, delta`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_trace_csv(
            path,
            &self.beta,
            &self.betak,
            None,
            &self.delta,
            self.burn_in,
            self.thin,
        )
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_trace_csv(
    path: &Path,
    beta: &[DVector<f64>],
    betak: &[DVector<f64>],
    sigma2: Option<&[f64]>,
    delta: &[f64],
    burn_in: usize,
    thin: usize,
) -> Result<()> {
    if beta.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let p = beta[0].len();
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let mut header = String::from("iter");
    for j in 1..=p {
        header.push_str(&format!(",beta_{j}"));
    }
    for j in 1..=p {
        header.push_str(&format!(",betak_{j}"));
    }
    if sigma2.is_some() {
        header.push_str(",sigma2");
    }
    header.push_str(",delta");
    writeln!(w, "{header}").map_err(|e| io_err(path, e))?;
    for t in 0..beta.len() {
        let mut row = String::with_capacity(16 * (2 * p + 2));
        row.push_str(&format!("{}", burn_in + (t + 1) * thin));
        for v in beta[t].iter() {
            row.push_str(&format!(",{v}"));
        }
        for v in betak[t].iter() {
            row.push_str(&format!(",{v}"));
        }
        if let Some(s) = sigma2 {
            row.push_str(&format!(",{}", s[t]));
        }
        row.push_str(&format!(",{}", delta[t]));
        writeln!(w, "{row}").map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// A trace read back from CSV, as written by either sampler.
#[derive(Debug, Clone)]
pub struct TraceData {
    pub iters: Vec<u64>,
    pub beta: Vec<DVector<f64>>,
    pub betak: Vec<DVector<f64>>,
    /// Present for linear traces, absent for probit.
    pub sigma2: Option<Vec<f64>>,
    pub delta: Vec<f64>,
}

impl CoefficientTrace for TraceData {
    fn beta_draws(&self) -> &[DVector<f64>] {
        &self.beta
    }
    fn betak_draws(&self) -> &[DVector<f64>] {
        &self.betak
    }
}

/// Reads a trace CSV produced by [`LinearTrace::write_csv`] or
/// [`ProbitTrace::write_csv`], detecting whether the sigma2 column is
/// present.
pub fn read_trace_csv(path: &Path) -> Result<TraceData> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.display().to_string(),
        line,
        msg,
    };
    let content = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = content.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"iter") {
        return Err(parse_err(1, format!("expected first column 'iter', got {:?}", cols.first())));
    }
    let p = cols.iter().filter(|c| c.starts_with("beta_")).count();
    if p == 0 {
        return Err(parse_err(1, "no beta_ columns found".into()));
    }
    let pk = cols.iter().filter(|c| c.starts_with("betak_")).count();
    if pk != p {
        return Err(parse_err(
            1,
            format!("{p} beta_ columns but {pk} betak_ columns"),
        ));
    }
    let has_sigma2 = cols.contains(&"sigma2");
    let expected = 1 + 2 * p + usize::from(has_sigma2) + 1;
    if cols.len() != expected {
        return Err(parse_err(
            1,
            format!("expected {expected} columns, found {}", cols.len()),
        ));
    }
    if cols.last() != Some(&"delta") {
        return Err(parse_err(1, "expected last column 'delta'".into()));
    }
    let mut out = TraceData {
        iters: Vec::new(),
        beta: Vec::new(),
        betak: Vec::new(),
        sigma2: has_sigma2.then(Vec::new),
        delta: Vec::new(),
    };
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != expected {
            return Err(parse_err(
                lineno,
                format!("expected {expected} fields, found {}", fields.len()),
            ));
        }
        let parse_f64 = |k: usize| -> Result<f64> {
            fields[k]
                .parse::<f64>()
                .map_err(|e| parse_err(lineno, format!("column {}: {e}", cols[k])))
        };
        let mut beta = DVector::zeros(p);
        let mut betak = DVector::zeros(p);
        for j in 0..p {
            beta[j] = parse_f64(1 + j)?;
        }
        for j in 0..p {
            betak[j] = parse_f64(1 + p + j)?;
        }
        if let Some(s) = out.sigma2.as_mut() {
            let v = fields[1 + 2 * p]
                .parse::<f64>()
                .map_err(|e| parse_err(lineno, format!("column sigma2: {e}")))?;
            s.push(v);
        }
        let delta = fields[expected - 1]
            .parse::<f64>()
            .map_err(|e| parse_err(lineno, format!("column delta: {e}")))?;
        let iter = fields[0]
            .parse::<u64>()
            .map_err(|e| parse_err(lineno, format!("column iter: {e}")))?;
        out.iters.push(iter);
        out.beta.push(beta);
        out.betak.push(betak);
        out.delta.push(delta);
    }
    if out.beta.is_empty() {
        return Err(Error::EmptyTrace);
    }
    Ok(out)
}

/// Joint Gaussian draw of (beta, beta~) from the stacked-design conditional:
/// mean `Gram^{-1} W^T t` and covariance `scale2 * Gram^{-1}` where
/// `W = [X X~]` and `Gram = W^T W` (plus optional ridge).
pub(crate) fn draw_coefficients_gram(
    x: &DMatrix<f64>,
    xk: &DMatrix<f64>,
    target: &DVector<f64>,
    scale2: f64,
    ridge: Option<f64>,
    rng: &mut RngStream,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let (n, p) = x.shape();
    debug_assert_eq!(xk.shape(), (n, p));
    debug_assert_eq!(target.len(), n);
    let xx = x.tr_mul(x);
    let xxk = x.tr_mul(xk);
    let xkxk = xk.tr_mul(xk);
    let lambda = ridge.unwrap_or(0.0);
    let gram = SymmetricMatrix::from_fn(2 * p, |i, j| {
        let v = match (i < p, j < p) {
            (true, true) => xx[(i, j)],
            (false, false) => xkxk[(i - p, j - p)],
            (false, true) => xxk[(j, i - p)],
            (true, false) => unreachable!("from_fn visits lower triangle only"),
        };
        if i == j {
            v + lambda
        } else {
            v
        }
    });
    let chol = cholesky(&gram).map_err(|e| {
        Error::SingularGram(format!(
            "stacked design [X X~] with n = {n}, 2p = {}: {e}",
            2 * p
        ))
    })?;
    let bx = x.tr_mul(target);
    let bk = xk.tr_mul(target);
    let mut b = DVector::zeros(2 * p);
    b.rows_mut(0, p).copy_from(&bx);
    b.rows_mut(p, p).copy_from(&bk);
    let mean = chol.solve(&b);
    let z = DVector::from_fn(2 * p, |_, _| standard_normal(rng));
    let draw = &mean + chol.solve_upper(&z) * scale2.sqrt();
    Ok((
        DVector::from_fn(p, |j, _| draw[j]),
        DVector::from_fn(p, |j, _| draw[p + j]),
    ))
}

/// Per-row conditional means and the shared precision factor for the
/// knockoff-row update. Row i of the returned matrix is mu~_i; the factor
/// is the Cholesky of B = A + c b~ b~^T.
pub(crate) fn knockoff_row_conditionals(
    x: &DMatrix<f64>,
    target: &DVector<f64>,
    model: &KnockoffJointModel,
    beta: &DVector<f64>,
    betak: &DVector<f64>,
    c: f64,
) -> Result<(DMatrix<f64>, crate::linalg::CholeskyFactor)> {
    let (n, p) = x.shape();
    // Precision of each row's conditional: B = A + c b~ b~^T.
    let b_mat = SymmetricMatrix::from_fn(p, |i, j| {
        model.a.get(i, j) + c * betak[i] * betak[j]
    });
    let chol_b = cholesky(&b_mat)?;
    // Row i's right-hand side is M x_i + c t_i b~ with
    // M = diag{s}^{-1} - A - c b~ b^T (not symmetric).
    let m = DMatrix::from_fn(p, p, |i, j| {
        let diag = if i == j { 1.0 / model.s[i] } else { 0.0 };
        diag - model.a.get(i, j) - c * betak[i] * beta[j]
    });
    let rhs_all = x * m.transpose() + target * (betak.transpose() * c);
    let mut means = DMatrix::zeros(n, p);
    let mut rhs = DVector::zeros(p);
    for i in 0..n {
        for j in 0..p {
            rhs[j] = rhs_all[(i, j)];
        }
        let mean = chol_b.solve(&rhs);
        for j in 0..p {
            means[(i, j)] = mean[j];
        }
    }
    Ok((means, chol_b))
}

/// Redraws every knockoff row from its full conditional; see module docs.
/// `inv_scale2` is 1/sigma^2 for the linear model and 1 for probit.
pub(crate) fn draw_knockoff_rows(
    x: &DMatrix<f64>,
    xk: &mut DMatrix<f64>,
    target: &DVector<f64>,
    model: &KnockoffJointModel,
    beta: &DVector<f64>,
    betak: &DVector<f64>,
    inv_scale2: f64,
    rng: &mut RngStream,
) -> Result<()> {
    let (n, p) = x.shape();
    let (means, chol_b) = knockoff_row_conditionals(x, target, model, beta, betak, inv_scale2)?;
    for i in 0..n {
        let z = DVector::from_fn(p, |_, _| standard_normal(rng));
        let noise = chol_b.solve_upper(&z);
        for j in 0..p {
            xk[(i, j)] = means[(i, j)] + noise[j];
        }
    }
    Ok(())
}

/// Sample variance of a response vector, used to initialize sigma^2.
pub(crate) fn sample_variance(y: &DVector<f64>) -> f64 {
    let n = y.len();
    if n < 2 {
        return 1.0;
    }
    let mean = y.sum() / n as f64;
    y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0)
}

/// Fisher-Yates permutation of 0..p for the random-scan sweep.
pub(crate) fn sweep_order(order: SweepOrder, p: usize, rng: &mut RngStream) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..p).collect();
    if order == SweepOrder::RandomScan {
        for i in (1..p).rev() {
            let j = rng.random_range(0..=i);
            idx.swap(i, j);
        }
    }
    idx
}

pub(crate) fn validate_chain_inputs(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    model: &KnockoffJointModel,
    config: &ChainConfig,
) -> Result<()> {
    config.validate()?;
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "y has length {} but x has {n} rows",
            y.len()
        )));
    }
    if model.p() != p {
        return Err(Error::DimensionMismatch(format!(
            "model has p = {} but x has {p} columns",
            model.p()
        )));
    }
    if n == 0 || p == 0 {
        return Err(Error::InvalidParameter("empty dataset".into()));
    }
    for j in 0..p {
        for i in 0..n {
            if !x[(i, j)].is_finite() {
                return Err(Error::NonFiniteInput { row: i, col: j });
            }
        }
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput { row: i, col: p });
    }
    if model.mean.amax() > 1e-8 {
        return Err(Error::InvalidParameter(
            "chains expect features centered so the model mean is zero".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knockoff::{build_joint_model, construct_s_equicorrelated, MomentEstimate};

    fn identity_model(p: usize) -> KnockoffJointModel {
        let sigma = SymmetricMatrix::identity(p);
        let moments = MomentEstimate::from_known(DVector::zeros(p), sigma.clone()).unwrap();
        let s = construct_s_equicorrelated(&sigma, 0.95).unwrap();
        build_joint_model(&moments, &s).unwrap()
    }

    #[test]
    fn config_validation_rejects_zero_samples_and_thin() {
        let bad_samples = ChainConfig {
            samples: 0,
            ..ChainConfig::default()
        };
        assert!(matches!(
            bad_samples.validate(),
            Err(Error::InvalidParameter(_))
        ));
        let bad_thin = ChainConfig {
            thin: 0,
            ..ChainConfig::default()
        };
        assert!(matches!(bad_thin.validate(), Err(Error::InvalidParameter(_))));
        let bad_ridge = ChainConfig {
            ridge: Some(-1.0),
            ..ChainConfig::default()
        };
        assert!(matches!(
            bad_ridge.validate(),
            Err(Error::InvalidParameter(_))
        ));
        assert!(ChainConfig::default().validate().is_ok());
    }

    #[test]
    fn knockoff_row_mean_reduces_to_cx_when_betak_is_zero() {
        // With b~ = 0 the likelihood drops out of the row conditional and
        // the mean must equal the prior conditional mean C x_i, for any
        // beta, target, and noise scale.
        let model = identity_model(4);
        let mut rng = RngStream::new(7, 0);
        let n = 6;
        let x = DMatrix::from_fn(n, 4, |_, _| standard_normal(&mut rng));
        let y = DVector::from_fn(n, |_, _| standard_normal(&mut rng));
        let beta = DVector::from_vec(vec![2.0, -1.0, 0.5, 3.0]);
        let betak = DVector::zeros(4);
        let (means, _) =
            knockoff_row_conditionals(&x, &y, &model, &beta, &betak, 4.2).unwrap();
        let expected = &x * model.c.transpose();
        assert!((means - expected).amax() < 1e-10);
    }

    #[test]
    fn knockoff_row_mean_shifts_with_likelihood_when_betak_nonzero() {
        let model = identity_model(3);
        let mut rng = RngStream::new(11, 0);
        let n = 5;
        let x = DMatrix::from_fn(n, 3, |_, _| standard_normal(&mut rng));
        let y = DVector::from_fn(n, |_, _| 3.0 + standard_normal(&mut rng));
        let beta = DVector::zeros(3);
        let betak = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let (means, _) = knockoff_row_conditionals(&x, &y, &model, &beta, &betak, 1.0).unwrap();
        let prior_means = &x * model.c.transpose();
        assert!((means - prior_means).amax() > 0.1);
    }

    #[test]
    fn gram_draw_is_deterministic_per_stream() {
        let mut rng = RngStream::new(3, 0);
        let x = DMatrix::from_fn(30, 2, |_, _| standard_normal(&mut rng));
        let xk = DMatrix::from_fn(30, 2, |_, _| standard_normal(&mut rng));
        let y = DVector::from_fn(30, |_, _| standard_normal(&mut rng));
        let mut r1 = RngStream::new(99, 5);
        let mut r2 = RngStream::new(99, 5);
        let (b1, bk1) = draw_coefficients_gram(&x, &xk, &y, 1.0, None, &mut r1).unwrap();
        let (b2, bk2) = draw_coefficients_gram(&x, &xk, &y, 1.0, None, &mut r2).unwrap();
        assert_eq!(b1, b2);
        assert_eq!(bk1, bk2);
    }

    #[test]
    fn gram_draw_rejects_collinear_stacked_design() {
        let mut rng = RngStream::new(4, 0);
        let x = DMatrix::from_fn(40, 3, |_, _| standard_normal(&mut rng));
        let xk = x.clone();
        let y = DVector::from_fn(40, |_, _| standard_normal(&mut rng));
        let err = draw_coefficients_gram(&x, &xk, &y, 1.0, None, &mut rng).unwrap_err();
        assert!(matches!(err, Error::SingularGram(_)), "got {err:?}");
        // A ridge restores positive definiteness.
        assert!(draw_coefficients_gram(&x, &xk, &y, 1.0, Some(1e-6), &mut rng).is_ok());
    }

    #[test]
    fn trace_csv_round_trips_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let mut rng = RngStream::new(21, 0);
        let t = 25;
        let p = 3;
        let trace = LinearTrace {
            beta: (0..t)
                .map(|_| DVector::from_fn(p, |_, _| standard_normal(&mut rng)))
                .collect(),
            betak: (0..t)
                .map(|_| DVector::from_fn(p, |_, _| standard_normal(&mut rng)))
                .collect(),
            sigma2: (0..t).map(|i| 1.0 + i as f64 * 1e-3).collect(),
            delta: (0..t).map(|_| standard_normal(&mut rng)).collect(),
            knockoff_snapshots: Vec::new(),
            burn_in: 10,
            thin: 2,
            seed: 21,
            warnings: Vec::new(),
        };
        trace.write_csv(&path).unwrap();
        let back = read_trace_csv(&path).unwrap();
        assert_eq!(back.beta.len(), t);
        assert_eq!(back.iters[0], 12);
        assert_eq!(back.iters[1], 14);
        for i in 0..t {
            assert_eq!(back.beta[i], trace.beta[i], "beta row {i}");
            assert_eq!(back.betak[i], trace.betak[i], "betak row {i}");
            assert_eq!(back.delta[i], trace.delta[i], "delta row {i}");
        }
        assert_eq!(back.sigma2.as_ref().unwrap(), &trace.sigma2);
    }

    #[test]
    fn probit_trace_csv_omits_sigma2() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let trace = ProbitTrace {
            beta: vec![DVector::from_vec(vec![0.25, -1.5])],
            betak: vec![DVector::from_vec(vec![0.0, 1e-300])],
            delta: vec![-2.5],
            latent_snapshots: Vec::new(),
            knockoff_snapshots: Vec::new(),
            burn_in: 0,
            thin: 1,
            seed: 0,
            warnings: Vec::new(),
        };
        trace.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "iter,beta_1,beta_2,betak_1,betak_2,delta"
        );
        let back = read_trace_csv(&path).unwrap();
        assert!(back.sigma2.is_none());
        assert_eq!(back.beta[0], trace.beta[0]);
        assert_eq!(back.betak[0][1], 1e-300);
    }

    #[test]
    fn trace_csv_reader_reports_malformed_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "iter,beta_1,betak_1,delta\n1,0.5,oops,0.0\n").unwrap();
        let err = read_trace_csv(&path).unwrap_err();
        match err {
            Error::Parse { line, ref msg, .. } => {
                assert_eq!(line, 2);
                assert!(msg.contains("betak_1"), "msg = {msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        std::fs::write(&path, "iter,beta_1,betak_1,delta\n").unwrap();
        assert!(matches!(read_trace_csv(&path), Err(Error::EmptyTrace)));
    }

    #[test]
    fn sweep_order_random_scan_is_a_permutation() {
        let mut rng = RngStream::new(17, 0);
        for _ in 0..50 {
            let mut order = sweep_order(SweepOrder::RandomScan, 9, &mut rng);
            order.sort_unstable();
            assert_eq!(order, (0..9).collect::<Vec<_>>());
        }
        let asc = sweep_order(SweepOrder::Ascending, 5, &mut rng);
        assert_eq!(asc, vec![0, 1, 2, 3, 4]);
    }
}
