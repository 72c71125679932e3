//! Feature statistics, null-probability upper bounds, and greedy selection
//! with Bayesian FDR control.
//!
//! Each retained draw (beta, beta~) yields an antisymmetric statistic W per
//! feature. Under the null, W_j is symmetric about zero, so
//!
//! ```text
//! P(H0_j | D) <= 1 - P(W_j > 0 | D) + P(W_j < 0 | D)
//!             =  2 P(W_j < 0 | D) + P(W_j = 0 | D),
//! ```
//!
//! estimated over the trace by
//!
//! ```text
//! p_hat_j = min(1, (2 * #{t : W_j^(t) < 0} + #{t : W_j^(t) = 0}) / T).
//! ```
//!
//! Exact-zero ties carry half weight; with a continuous posterior (no ties)
//! this is the usual (2/T) * #negatives. The tie term matters under the
//! spike-and-slab prior, where a feature with both coefficients spiked to
//! zero produces W_j = 0 exactly; such draws are evidence for the null, not
//! against it.
//!
//! The estimated Bayesian FDR of a set S is the mean of p_hat over S.
//! Sorting features by p_hat and taking the longest prefix whose BFDR stays
//! at or below the target alpha maximizes the selection cardinality among
//! all subsets meeting the constraint, because any k-subset's BFDR is
//! minimized by the k smallest bounds.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::gibbs::CoefficientTrace;

/// Antisymmetric feature statistic variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeatureStatisticKind {
    /// W_j = |beta_j| - |beta~_j|; the default.
    #[default]
    AbsDiff,
    /// W_j = beta_j^2 - beta~_j^2.
    SquaredDiff,
    /// W_j = |beta_j + beta~_j| * sign(|beta_j| - |beta~_j|).
    SignedSum,
}

/// Sign with an exact zero at ties, unlike `f64::signum`.
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Computes W elementwise from one coefficient draw.
pub fn feature_statistics(
    beta: &DVector<f64>,
    betak: &DVector<f64>,
    kind: FeatureStatisticKind,
) -> Result<DVector<f64>> {
    if beta.len() != betak.len() {
        return Err(Error::DimensionMismatch(format!(
            "beta has length {} but betak has {}",
            beta.len(),
            betak.len()
        )));
    }
    Ok(DVector::from_fn(beta.len(), |j, _| {
        let (b, bk) = (beta[j], betak[j]);
        match kind {
            FeatureStatisticKind::AbsDiff => b.abs() - bk.abs(),
            FeatureStatisticKind::SquaredDiff => b * b - bk * bk,
            FeatureStatisticKind::SignedSum => (b + bk).abs() * sign(b.abs() - bk.abs()),
        }
    }))
}

/// Estimated per-feature upper bounds on the posterior null probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct NullBounds {
    /// p_hat_j, clamped to [0, 1].
    pub p_hat: Vec<f64>,
    /// Number of draws with W_j exactly zero, reported for auditing; each
    /// tie contributes half weight to p_hat_j.
    pub ties: Vec<usize>,
    /// Number of draws T the bounds were estimated from.
    pub t: usize,
}

/// Estimates the null bounds from a trace of statistic draws.
pub fn estimate_null_bounds(w_draws: &[DVector<f64>]) -> Result<NullBounds> {
    let t = w_draws.len();
    if t == 0 {
        return Err(Error::EmptyTrace);
    }
    let p = w_draws[0].len();
    let mut neg = vec![0usize; p];
    let mut ties = vec![0usize; p];
    for (idx, w) in w_draws.iter().enumerate() {
        if w.len() != p {
            return Err(Error::DimensionMismatch(format!(
                "draw {idx} has length {} but draw 0 has {p}",
                w.len()
            )));
        }
        for j in 0..p {
            if w[j] < 0.0 {
                neg[j] += 1;
            } else if w[j] == 0.0 {
                ties[j] += 1;
            }
        }
    }
    let p_hat = neg
        .iter()
        .zip(&ties)
        .map(|(&c, &z)| ((2.0 * c as f64 + z as f64) / t as f64).min(1.0))
        .collect();
    Ok(NullBounds { p_hat, ties, t })
}

/// Estimated Bayesian FDR of a feature subset: the mean of p_hat over the
/// subset, with the empty set mapped to 0.
pub fn bfdr(subset: &[usize], bounds: &NullBounds) -> Result<f64> {
    let p = bounds.p_hat.len();
    let mut sum = 0.0;
    for &j in subset {
        if j >= p {
            return Err(Error::IndexOutOfRange { index: j, p });
        }
        sum += bounds.p_hat[j];
    }
    if subset.is_empty() {
        Ok(0.0)
    } else {
        Ok(sum / subset.len() as f64)
    }
}

/// Output of the greedy BFDR-controlled selection.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Feature indices sorted by ascending p_hat, ties broken by index.
    pub order: Vec<usize>,
    /// BFDR of each rank prefix: prefix_bfdr[j] = BFDR of order[..=j].
    pub prefix_bfdr: Vec<f64>,
    /// Length of the chosen prefix.
    pub k: usize,
    /// Selected feature indices in ascending index order.
    pub selected: Vec<usize>,
    /// Target level the selection was run at.
    pub alpha: f64,
    /// The bounds the selection was computed from.
    pub bounds: NullBounds,
}

/// Greedy selection: sort by p_hat, take the longest prefix with BFDR at or
/// below alpha. Prefix means of an ascending sequence are non-decreasing,
/// so the longest feasible prefix has maximum cardinality among all subsets
/// with BFDR <= alpha.
pub fn greedy_select(bounds: &NullBounds, alpha: f64) -> Result<SelectionResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    let p = bounds.p_hat.len();
    if bounds.ties.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "bounds have {p} p_hat entries but {} tie counts",
            bounds.ties.len()
        )));
    }
    for (j, &v) in bounds.p_hat.iter().enumerate() {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidParameter(format!(
                "p_hat[{j}] = {v} is outside [0, 1]"
            )));
        }
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| {
        bounds.p_hat[a]
            .partial_cmp(&bounds.p_hat[b])
            .expect("p_hat values are finite")
            .then(a.cmp(&b))
    });
    let mut prefix_bfdr = Vec::with_capacity(p);
    let mut sum = 0.0;
    let mut k = 0;
    for (rank, &j) in order.iter().enumerate() {
        sum += bounds.p_hat[j];
        let value = sum / (rank + 1) as f64;
        prefix_bfdr.push(value);
        if value <= alpha {
            k = rank + 1;
        }
    }
    let mut selected: Vec<usize> = order[..k].to_vec();
    selected.sort_unstable();
    if k > 0 {
        assert!(
            prefix_bfdr[k - 1] <= alpha,
            "selected prefix violates the BFDR constraint"
        );
    }
    Ok(SelectionResult {
        order,
        prefix_bfdr,
        k,
        selected,
        alpha,
        bounds: bounds.clone(),
    })
}

/// Full pipeline from a coefficient trace: statistics per draw, null
/// bounds, then greedy selection.
pub fn select_from_trace<T: CoefficientTrace + ?Sized>(
    trace: &T,
    kind: FeatureStatisticKind,
    alpha: f64,
) -> Result<SelectionResult> {
    let beta = trace.beta_draws();
    let betak = trace.betak_draws();
    if beta.len() != betak.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} beta draws but {} betak draws",
            beta.len(),
            betak.len()
        )));
    }
    let mut w_draws = Vec::with_capacity(beta.len());
    for t in 0..beta.len() {
        w_draws.push(feature_statistics(&beta[t], &betak[t], kind)?);
    }
    let bounds = estimate_null_bounds(&w_draws)?;
    greedy_select(&bounds, alpha)
}

/// Writes the selection in rank order as CSV with columns
/// `feature, p_hat, rank, prefix_bfdr, selected`. Feature indices are
/// 1-based in the file.
pub fn write_selection_csv(path: &Path, result: &SelectionResult) -> Result<()> {
    let io_err = |e: std::io::Error| Error::Io {
        path: path.display().to_string(),
        source: e,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "feature,p_hat,rank,prefix_bfdr,selected").map_err(io_err)?;
    for (rank, &j) in result.order.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{}",
            j + 1,
            result.bounds.p_hat[j],
            rank + 1,
            result.prefix_bfdr[rank],
            rank < result.k
        )
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}
