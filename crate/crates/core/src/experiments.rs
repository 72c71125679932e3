//! Synthetic experiment designs and the replication driver.
//!
//! A design fixes the feature covariance (independent, autocorrelated with
//! entries rho^|i-j|, or equicorrelated with off-diagonal rho), plants a
//! uniformly random active set H1 of size v with coefficients drawn from
//! Unif[-a, a], and generates a Gaussian-linear or probit response. Each
//! replication generates data, runs the Gibbs chain, selects features at
//! level alpha, and scores the selection:
//!
//! ```text
//! FDP   = |S_hat \ H1| / max(|S_hat|, 1),
//! power = |S_hat intersect H1| / max(|H1|, 1).
//! ```
//!
//! Replications are independent rayon tasks. Replication r uses the derived
//! seed `derive_seed(master, r)` with stream 0 for data generation and
//! stream 1 for the chain, so runs are reproducible regardless of worker
//! count and any replication can be re-run in isolation.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::dist::standard_normal;
use crate::error::{Error, Result};
use crate::gibbs::linear::{run_chain_linear, LinearPrior};
use crate::gibbs::probit::run_chain_probit;
use crate::gibbs::ChainConfig;
use crate::knockoff::{
    build_joint_model, construct_s_equicorrelated, estimate_moments, standardize_columns,
    KnockoffJointModel, MomentEstimate, DEFAULT_SLACK,
};
use crate::linalg::{cholesky, SymmetricMatrix};
use crate::rng::{derive_seed, RngStream};
use crate::selection::{select_from_trace, FeatureStatisticKind, SelectionResult};

/// Feature covariance family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceCase {
    /// Identity covariance; rho is ignored.
    Independent,
    /// Autocorrelated: sigma_ij = rho^|i-j|.
    AutoCorr,
    /// Equicorrelated: sigma_ij = rho for i != j, 1 on the diagonal.
    EquiCorr,
}

impl CovarianceCase {
    pub fn as_str(&self) -> &'static str {
        match self {
            CovarianceCase::Independent => "independent",
            CovarianceCase::AutoCorr => "autocorr",
            CovarianceCase::EquiCorr => "equicorr",
        }
    }

    pub fn parse(token: &str) -> Result<Self> {
        match token {
            "independent" => Ok(CovarianceCase::Independent),
            "autocorr" => Ok(CovarianceCase::AutoCorr),
            "equicorr" => Ok(CovarianceCase::EquiCorr),
            other => Err(Error::InvalidSpec(format!(
                "unknown covariance case '{other}' (expected independent, autocorr, equicorr)"
            ))),
        }
    }
}

/// Response model of the generated data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseKind {
    /// y = x'beta + eps, eps ~ N(0, sigma2).
    Linear,
    /// y = I[x'beta + eps > 0], eps ~ N(0, 1).
    Probit,
}

impl ResponseKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ResponseKind::Linear => "linear",
            ResponseKind::Probit => "probit",
        }
    }

    pub fn parse(token: &str) -> Result<Self> {
        match token {
            "linear" => Ok(ResponseKind::Linear),
            "probit" => Ok(ResponseKind::Probit),
            other => Err(Error::InvalidSpec(format!(
                "unknown response '{other}' (expected linear or probit)"
            ))),
        }
    }
}

fn statistic_as_str(kind: FeatureStatisticKind) -> &'static str {
    match kind {
        FeatureStatisticKind::AbsDiff => "abs-diff",
        FeatureStatisticKind::SquaredDiff => "squared-diff",
        FeatureStatisticKind::SignedSum => "signed-sum",
    }
}

/// Parses a statistic token as used in spec files and CLI flags.
pub fn parse_statistic(token: &str) -> Result<FeatureStatisticKind> {
    match token {
        "abs-diff" => Ok(FeatureStatisticKind::AbsDiff),
        "squared-diff" => Ok(FeatureStatisticKind::SquaredDiff),
        "signed-sum" => Ok(FeatureStatisticKind::SignedSum),
        other => Err(Error::InvalidSpec(format!(
            "unknown statistic '{other}' (expected abs-diff, squared-diff, signed-sum)"
        ))),
    }
}

fn prior_as_str(prior: LinearPrior) -> String {
    match prior {
        LinearPrior::Flat => "flat".to_string(),
        LinearPrior::SpikeSlab { xi, tau2 } => format!("spike-slab(xi={xi},tau2={tau2})"),
    }
}

/// Complete description of one synthetic experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    /// Sample size.
    pub n: usize,
    /// Number of features.
    pub p: usize,
    /// Signal amplitude: active coefficients are Unif[-a, a].
    pub a: f64,
    /// Noise variance of the linear response (the probit latent noise is
    /// fixed at 1 by convention).
    pub sigma2: f64,
    /// Correlation parameter of the covariance case.
    pub rho: f64,
    /// Covariance family.
    pub case: CovarianceCase,
    /// Number of active features |H1|.
    pub v: usize,
    /// Response model.
    pub response: ResponseKind,
    /// Coefficient prior for the chain.
    pub prior: LinearPrior,
    /// Target FDR level.
    pub alpha: f64,
    /// Chain burn-in.
    pub burn_in: usize,
    /// Retained draws T.
    pub samples: usize,
    /// Number of replications R.
    pub replications: usize,
    /// Master seed; per-replication seeds are derived from it.
    pub seed: u64,
    /// Feature statistic used for selection.
    pub statistic: FeatureStatisticKind,
    /// Build the knockoff model from the true generating covariance
    /// (synthetic default) instead of the second-order estimate.
    pub use_true_sigma: bool,
}

impl ExperimentSpec {
    /// Baseline linear design: n=500, p=30, |H1|=10, amplitude 2, noise
    /// variance 4, independent features, flat prior, alpha 0.1, T=2000
    /// after 500 burn-in, 50 replications.
    pub fn paper_411() -> Self {
        ExperimentSpec {
            n: 500,
            p: 30,
            a: 2.0,
            sigma2: 4.0,
            rho: 0.0,
            case: CovarianceCase::Independent,
            v: 10,
            response: ResponseKind::Linear,
            prior: LinearPrior::Flat,
            alpha: 0.1,
            burn_in: 500,
            samples: 2000,
            replications: 50,
            seed: 411,
            statistic: FeatureStatisticKind::AbsDiff,
            use_true_sigma: true,
        }
    }

    /// Small-|H1| design: n=200, p=100, |H1|=3, amplitude 4, independent
    /// features, spike-and-slab prior (xi=0.1, tau2=1), 30 replications.
    pub fn paper_413() -> Self {
        ExperimentSpec {
            n: 200,
            p: 100,
            a: 4.0,
            sigma2: 4.0,
            rho: 0.0,
            case: CovarianceCase::Independent,
            v: 3,
            response: ResponseKind::Linear,
            prior: LinearPrior::SpikeSlab { xi: 0.1, tau2: 1.0 },
            alpha: 0.1,
            burn_in: 500,
            samples: 2000,
            replications: 30,
            seed: 413,
            statistic: FeatureStatisticKind::AbsDiff,
            use_true_sigma: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p == 0 {
            return Err(Error::InvalidSpec(format!(
                "need n >= 2 and p >= 1, got n = {}, p = {}",
                self.n, self.p
            )));
        }
        if self.v > self.p {
            return Err(Error::InvalidSpec(format!(
                "v = {} exceeds p = {}",
                self.v, self.p
            )));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "sigma2 must be positive, got {}",
                self.sigma2
            )));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::InvalidSpec(format!(
                "rho must lie in [0, 1), got {}",
                self.rho
            )));
        }
        if !(self.a >= 0.0 && self.a.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "amplitude a must be nonnegative, got {}",
                self.a
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidAlpha(self.alpha));
        }
        if self.samples == 0 || self.replications == 0 {
            return Err(Error::InvalidSpec(format!(
                "samples and replications must be positive, got {} and {}",
                self.samples, self.replications
            )));
        }
        if self.response == ResponseKind::Probit && self.prior != LinearPrior::Flat {
            return Err(Error::InvalidSpec(
                "the probit chain supports the flat prior only".to_string(),
            ));
        }
        self.prior.validate()?;
        Ok(())
    }
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec::paper_411()
    }
}

/// Builds the p x p covariance for a case; PD for all rho in [0, 1).
pub fn covariance_matrix(case: CovarianceCase, rho: f64, p: usize) -> Result<SymmetricMatrix> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidSpec(format!(
            "rho must lie in [0, 1), got {rho}"
        )));
    }
    Ok(match case {
        CovarianceCase::Independent => SymmetricMatrix::identity(p),
        CovarianceCase::AutoCorr => {
            SymmetricMatrix::from_fn(p, |i, j| rho.powi((i as i32 - j as i32).abs()))
        }
        CovarianceCase::EquiCorr => {
            SymmetricMatrix::from_fn(p, |i, j| if i == j { 1.0 } else { rho })
        }
    })
}

/// Samples a uniformly random size-v subset of {0, .., p-1}, sorted.
fn sample_subset(p: usize, v: usize, rng: &mut RngStream) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..p).collect();
    for k in 0..v {
        let j = rng.random_range(k..p);
        idx.swap(k, j);
    }
    let mut h1 = idx[..v].to_vec();
    h1.sort_unstable();
    h1
}

/// Generates one synthetic dataset: features MVN(0, Sigma), active set H1
/// of size v, coefficients Unif[-a, a] on H1 and zero elsewhere, response
/// per `spec.response`. Returns the dataset, the true coefficients, and H1.
pub fn generate_dataset(
    spec: &ExperimentSpec,
    rng: &mut RngStream,
) -> Result<(Dataset, DVector<f64>, Vec<usize>)> {
    spec.validate()?;
    let (n, p) = (spec.n, spec.p);
    let sigma = covariance_matrix(spec.case, spec.rho, p)?;
    let chol = cholesky(&sigma)?;
    let z = DMatrix::from_fn(n, p, |_, _| standard_normal(rng));
    let x = &z * chol.l().transpose();

    let h1 = sample_subset(p, spec.v, rng);
    let mut beta = DVector::zeros(p);
    for &j in &h1 {
        beta[j] = if spec.a == 0.0 {
            0.0
        } else {
            rng.random_range(-spec.a..=spec.a)
        };
    }

    let eta = &x * &beta;
    let response = match spec.response {
        ResponseKind::Linear => {
            let sd = spec.sigma2.sqrt();
            DVector::from_fn(n, |i, _| eta[i] + sd * standard_normal(rng))
        }
        ResponseKind::Probit => DVector::from_fn(n, |i, _| {
            if eta[i] + standard_normal(rng) > 0.0 {
                1.0
            } else {
                0.0
            }
        }),
    };

    let names = (1..=p).map(|j| format!("x{j}")).collect();
    let dataset = Dataset::from_parts(x, response, names, "y".to_string())?;
    Ok((dataset, beta, h1))
}

/// FDP and power of a selection against the true active set.
pub fn score(selected: &[usize], h1: &[usize], p: usize) -> Result<(f64, f64)> {
    let mut is_h1 = vec![false; p];
    for &j in h1 {
        if j >= p {
            return Err(Error::IndexOutOfRange { index: j, p });
        }
        is_h1[j] = true;
    }
    let mut tp = 0usize;
    for &j in selected {
        if j >= p {
            return Err(Error::IndexOutOfRange { index: j, p });
        }
        if is_h1[j] {
            tp += 1;
        }
    }
    let fp = selected.len() - tp;
    let fdp = fp as f64 / selected.len().max(1) as f64;
    let power = tp as f64 / h1.len().max(1) as f64;
    Ok((fdp, power))
}

/// Outcome of one replication.
#[derive(Debug, Clone)]
pub struct ReplicationResult {
    pub rep: usize,
    pub seed: u64,
    pub h1: Vec<usize>,
    pub selected: Vec<usize>,
    pub fdp: f64,
    pub power: f64,
    pub runtime_s: f64,
}

/// Aggregated experiment outcome. Means are over successful replications.
#[derive(Debug, Clone)]
pub struct ExperimentAggregate {
    pub rows: Vec<ReplicationResult>,
    pub failures: Vec<(usize, String)>,
    pub mean_fdr: f64,
    pub mean_power: f64,
    pub sd_power: f64,
}

/// Builds the knockoff joint model from the true generating covariance.
pub fn model_from_true_covariance(spec: &ExperimentSpec) -> Result<KnockoffJointModel> {
    let sigma = covariance_matrix(spec.case, spec.rho, spec.p)?;
    let moments = MomentEstimate::from_known(DVector::zeros(spec.p), sigma)?;
    let s = construct_s_equicorrelated(&moments.sigma, DEFAULT_SLACK)?;
    build_joint_model(&moments, &s)
}

/// Runs one replication. Streams: 0 for data generation, 1 for the chain.
fn run_replication(
    spec: &ExperimentSpec,
    shared_model: Option<&KnockoffJointModel>,
    rep: usize,
) -> Result<ReplicationResult> {
    let start = Instant::now();
    let rep_seed = derive_seed(spec.seed, rep as u64);
    let mut gen_rng = RngStream::new(rep_seed, 0);
    let (dataset, _beta, h1) = generate_dataset(spec, &mut gen_rng)?;

    // Second-order fallback standardizes the realized features and
    // estimates the correlation matrix from them.
    let (x, local_model);
    let model = if let Some(m) = shared_model {
        x = dataset.features;
        m
    } else {
        let (z, _, _) = standardize_columns(&dataset.features)?;
        let moments = estimate_moments(&z, false)?;
        let s = construct_s_equicorrelated(&moments.sigma, DEFAULT_SLACK)?;
        local_model = build_joint_model(&moments, &s)?;
        x = z;
        &local_model
    };

    let config = ChainConfig {
        burn_in: spec.burn_in,
        samples: spec.samples,
        seed: rep_seed,
        stream: 1,
        ..ChainConfig::default()
    };
    let selection: SelectionResult = match spec.response {
        ResponseKind::Linear => {
            let trace = run_chain_linear(&x, &dataset.response, model, spec.prior, &config)?;
            select_from_trace(&trace, spec.statistic, spec.alpha)?
        }
        ResponseKind::Probit => {
            let labels: Vec<u8> = dataset.response.iter().map(|&v| v as u8).collect();
            let trace = run_chain_probit(&x, &labels, model, &config)?;
            select_from_trace(&trace, spec.statistic, spec.alpha)?
        }
    };

    let (fdp, power) = score(&selection.selected, &h1, spec.p)?;
    Ok(ReplicationResult {
        rep,
        seed: rep_seed,
        h1,
        selected: selection.selected,
        fdp,
        power,
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

/// Runs all replications of a spec on the current rayon pool and
/// aggregates. A failed replication is recorded, not fatal; the run errors
/// only if every replication fails.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentAggregate> {
    spec.validate()?;
    let shared_model = if spec.use_true_sigma {
        Some(model_from_true_covariance(spec)?)
    } else {
        None
    };
    let results: Vec<(usize, Result<ReplicationResult>)> = (0..spec.replications)
        .into_par_iter()
        .map(|rep| (rep, run_replication(spec, shared_model.as_ref(), rep)))
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (rep, res) in results {
        match res {
            Ok(row) => rows.push(row),
            Err(e) => failures.push((rep, e.to_string())),
        }
    }
    if rows.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "all {} replications failed; first error: {}",
            spec.replications, failures[0].1
        )));
    }
    let k = rows.len() as f64;
    let mean_fdr = rows.iter().map(|r| r.fdp).sum::<f64>() / k;
    let mean_power = rows.iter().map(|r| r.power).sum::<f64>() / k;
    let sd_power = if rows.len() > 1 {
        let var = rows
            .iter()
            .map(|r| (r.power - mean_power).powi(2))
            .sum::<f64>()
            / (k - 1.0);
        var.sqrt()
    } else {
        0.0
    };
    Ok(ExperimentAggregate {
        rows,
        failures,
        mean_fdr,
        mean_power,
        sd_power,
    })
}

/// One grid point and its aggregate.
#[derive(Debug, Clone)]
pub struct GridPointResult {
    pub spec: ExperimentSpec,
    pub aggregate: ExperimentAggregate,
}

/// Parsed spec file: the expanded grid plus which keys varied.
#[derive(Debug, Clone)]
pub struct ParsedGrid {
    pub specs: Vec<ExperimentSpec>,
    pub varying: Vec<String>,
}

/// Keys that accept comma-separated value lists (grid axes).
const LIST_KEYS: [&str; 6] = ["n", "p", "a", "sigma2", "rho", "v"];

fn parse_scalar<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| {
        Error::InvalidSpec(format!("cannot parse value '{value}' for key '{key}'"))
    })
}

/// Parses a plain-text experiment spec: one `key = value` per line, `#`
/// comments, optional `preset` (411 or 413) applied first, comma lists on
/// the grid keys n, p, a, sigma2, rho, v expanded as a cross product in
/// file order. Unlisted keys keep the 411 preset defaults.
pub fn parse_spec_text(text: &str) -> Result<ParsedGrid> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidSpec(format!(
                "line {}: expected 'key = value', got '{line}'",
                lineno + 1
            ))
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if value.is_empty() {
            return Err(Error::InvalidSpec(format!(
                "line {}: key '{key}' has no value",
                lineno + 1
            )));
        }
        if pairs.iter().any(|(k, _)| *k == key) {
            return Err(Error::InvalidSpec(format!("duplicate key '{key}'")));
        }
        pairs.push((key, value));
    }

    let known = [
        "preset", "n", "p", "a", "sigma2", "rho", "case", "v", "response", "prior", "xi",
        "tau2", "alpha", "burn_in", "samples", "replications", "seed", "statistic",
        "use_true_sigma",
    ];
    for (key, _) in &pairs {
        if !known.contains(&key.as_str()) {
            return Err(Error::InvalidSpec(format!("unknown key '{key}'")));
        }
    }

    let mut base = match pairs.iter().find(|(k, _)| k == "preset") {
        None => ExperimentSpec::paper_411(),
        Some((_, v)) => match v.as_str() {
            "411" => ExperimentSpec::paper_411(),
            "413" => ExperimentSpec::paper_413(),
            other => {
                return Err(Error::InvalidSpec(format!(
                    "unknown preset '{other}' (expected 411 or 413)"
                )))
            }
        },
    };

    // Scalars first; grid keys and the prior pieces are resolved after.
    let mut xi: Option<f64> = None;
    let mut tau2: Option<f64> = None;
    let mut prior_token: Option<String> = None;
    let mut grid: Vec<(String, Vec<String>)> = Vec::new();
    for (key, value) in &pairs {
        if LIST_KEYS.contains(&key.as_str()) {
            let values: Vec<String> = value.split(',').map(|v| v.trim().to_string()).collect();
            if values.iter().any(|v| v.is_empty()) {
                return Err(Error::InvalidSpec(format!(
                    "key '{key}' has an empty list entry"
                )));
            }
            grid.push((key.clone(), values));
            continue;
        }
        match key.as_str() {
            "preset" => {}
            "case" => base.case = CovarianceCase::parse(value)?,
            "response" => base.response = ResponseKind::parse(value)?,
            "prior" => prior_token = Some(value.clone()),
            "xi" => xi = Some(parse_scalar(key, value)?),
            "tau2" => tau2 = Some(parse_scalar(key, value)?),
            "alpha" => base.alpha = parse_scalar(key, value)?,
            "burn_in" => base.burn_in = parse_scalar(key, value)?,
            "samples" => base.samples = parse_scalar(key, value)?,
            "replications" => base.replications = parse_scalar(key, value)?,
            "seed" => base.seed = parse_scalar(key, value)?,
            "statistic" => base.statistic = parse_statistic(value)?,
            "use_true_sigma" => base.use_true_sigma = parse_scalar(key, value)?,
            _ => unreachable!("key list checked above"),
        }
    }

    base.prior = match prior_token.as_deref() {
        Some("flat") => {
            if xi.is_some() || tau2.is_some() {
                return Err(Error::InvalidSpec(
                    "keys 'xi' and 'tau2' require prior = spike-slab".to_string(),
                ));
            }
            LinearPrior::Flat
        }
        Some("spike-slab") => LinearPrior::SpikeSlab {
            xi: xi.unwrap_or(0.1),
            tau2: tau2.unwrap_or(1.0),
        },
        Some(other) => {
            return Err(Error::InvalidSpec(format!(
                "unknown prior '{other}' (expected flat or spike-slab)"
            )))
        }
        None => match base.prior {
            LinearPrior::SpikeSlab {
                xi: xi0,
                tau2: tau20,
            } => LinearPrior::SpikeSlab {
                xi: xi.unwrap_or(xi0),
                tau2: tau2.unwrap_or(tau20),
            },
            LinearPrior::Flat => {
                if xi.is_some() || tau2.is_some() {
                    return Err(Error::InvalidSpec(
                        "keys 'xi' and 'tau2' require prior = spike-slab".to_string(),
                    ));
                }
                LinearPrior::Flat
            }
        },
    };

    // Expand the cross product, rightmost key varying fastest.
    let mut specs = vec![base];
    let mut varying = Vec::new();
    for (key, values) in &grid {
        if values.len() > 1 {
            varying.push(key.clone());
        }
        let mut next = Vec::with_capacity(specs.len() * values.len());
        for spec in &specs {
            for value in values {
                let mut s = spec.clone();
                match key.as_str() {
                    "n" => s.n = parse_scalar(key, value)?,
                    "p" => s.p = parse_scalar(key, value)?,
                    "a" => s.a = parse_scalar(key, value)?,
                    "sigma2" => s.sigma2 = parse_scalar(key, value)?,
                    "rho" => s.rho = parse_scalar(key, value)?,
                    "v" => s.v = parse_scalar(key, value)?,
                    _ => unreachable!("grid keys are the LIST_KEYS"),
                }
                next.push(s);
            }
        }
        specs = next;
    }
    for spec in &specs {
        spec.validate()?;
    }
    Ok(ParsedGrid { specs, varying })
}

/// Reads and parses a spec file.
pub fn parse_spec_file(path: &Path) -> Result<ParsedGrid> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_spec_text(&text)
}

/// Value of a spec field as a CSV coordinate, by key name.
pub fn coordinate_value(spec: &ExperimentSpec, key: &str) -> Option<String> {
    Some(match key {
        "n" => spec.n.to_string(),
        "p" => spec.p.to_string(),
        "a" => spec.a.to_string(),
        "sigma2" => spec.sigma2.to_string(),
        "rho" => spec.rho.to_string(),
        "case" => spec.case.as_str().to_string(),
        "v" => spec.v.to_string(),
        "response" => spec.response.as_str().to_string(),
        "prior" => prior_as_str(spec.prior),
        "alpha" => spec.alpha.to_string(),
        "burn_in" => spec.burn_in.to_string(),
        "samples" => spec.samples.to_string(),
        "replications" => spec.replications.to_string(),
        "seed" => spec.seed.to_string(),
        "statistic" => statistic_as_str(spec.statistic).to_string(),
        "use_true_sigma" => spec.use_true_sigma.to_string(),
        _ => return None,
    })
}

/// Runs every grid point in order.
pub fn run_grid(grid: &ParsedGrid) -> Result<Vec<GridPointResult>> {
    grid.specs
        .iter()
        .map(|spec| {
            Ok(GridPointResult {
                spec: spec.clone(),
                aggregate: run_experiment(spec)?,
            })
        })
        .collect()
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::Io {
        path: path.display().to_string(),
        source: e,
    }
}

/// Writes per-replication rows: `rep,seed,fdp,power,n_selected,runtime_s`.
/// All columns except runtime_s are deterministic given the experiment spec.
pub fn write_replication_csv(path: &Path, rows: &[ReplicationResult]) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "rep,seed,fdp,power,n_selected,runtime_s").map_err(io_err(path))?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{:.3}",
            r.rep,
            r.seed,
            r.fdp,
            r.power,
            r.selected.len(),
            r.runtime_s
        )
        .map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Writes the aggregate table: one row per grid point with the varying
/// keys as leading columns, then `mean_fdr,mean_power,sd_power,R` where R
/// counts successful replications.
pub fn write_aggregate_csv(
    path: &Path,
    varying: &[String],
    points: &[GridPointResult],
) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let mut header: Vec<String> = varying.to_vec();
    header.extend(
        ["mean_fdr", "mean_power", "sd_power", "R"]
            .iter()
            .map(|s| s.to_string()),
    );
    writeln!(w, "{}", header.join(",")).map_err(io_err(path))?;
    for point in points {
        let mut fields: Vec<String> = varying
            .iter()
            .map(|key| coordinate_value(&point.spec, key).unwrap_or_else(|| "?".to_string()))
            .collect();
        fields.push(point.aggregate.mean_fdr.to_string());
        fields.push(point.aggregate.mean_power.to_string());
        fields.push(point.aggregate.sd_power.to_string());
        fields.push(point.aggregate.rows.len().to_string());
        writeln!(w, "{}", fields.join(",")).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}
