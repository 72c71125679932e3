//! `bkf diagnose`: convergence and validity diagnostics for a saved trace.
//!
//! The headline check is the delta statistic recorded at every retained
//! draw,
//!
//! ```text
//! delta = (1/n) sum_{j != k} sum_i ( xk_ij xk_ik + 2 x_ij xk_ik - 3 x_ij x_ik ),
//! ```
//!
//! whose expectation is zero when (X, Xk) follows the joint knockoff model.
//! Conditional on one observed X, though, the chain's long-run delta mean
//! sits at a dataset-specific offset from zero, because the sample moments
//! of X never equal the model moments exactly. Empirically that offset has
//! standard deviation close to 0.8 times the within-chain draw SD of delta,
//! for any n and p, so the flag budgets for both the Monte Carlo error of
//! the mean and the offset itself:
//!
//! ```text
//! pass  iff  |mean| <= 4 sqrt( se^2 + (0.8 sd)^2 )
//! se = sd sqrt((1 + r1) / (1 - r1)) / sqrt(T),   r1 clamped to [0, 0.999]
//! ```
//!
//! A zero-variance delta trace cannot be assessed that way: it is flagged
//! `degenerate` when the constant is zero (a self-knockoff Xk = X cancels
//! every term exactly) and `fail` otherwise (for example Xk = 0 on
//! correlated features leaves the `-3 x x` term uncancelled).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use bkf_core::gibbs::read_trace_csv;

use crate::manifest::{ManifestBuilder, RunManifest};

/// Ratio of the dataset-conditional offset SD to the within-chain draw SD.
const DELTA_OFFSET_RATIO: f64 = 0.8;

#[derive(Args, Debug)]
pub struct DiagnoseArgs {
    /// Trace CSV produced by `bkf fit`
    #[arg(required_unless_present = "from_manifest")]
    pub trace: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Re-run the configuration recorded in a diagnose manifest
    #[arg(long, conflicts_with = "trace")]
    pub from_manifest: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DiagnoseConfig {
    pub trace: String,
}

pub fn run(args: DiagnoseArgs) -> Result<()> {
    let config = match &args.from_manifest {
        Some(path) => {
            let manifest = RunManifest::load(path)?;
            manifest.verify_inputs()?;
            manifest.config_as::<DiagnoseConfig>()?
        }
        None => DiagnoseConfig {
            trace: args
                .trace
                .as_ref()
                .expect("clap enforces trace without --from-manifest")
                .display()
                .to_string(),
        },
    };
    execute(&config, &args.out_dir)
}

/// Mean, (n-1)-denominator SD, and lag-1 autocorrelation of a series.
fn series_summary(x: &[f64]) -> (f64, f64, f64) {
    let t = x.len();
    let mean = x.iter().sum::<f64>() / t as f64;
    if t < 2 {
        return (mean, 0.0, 0.0);
    }
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    let sd = (ss / (t as f64 - 1.0)).sqrt();
    let r1 = if ss > 0.0 {
        let num: f64 = x
            .windows(2)
            .map(|w| (w[0] - mean) * (w[1] - mean))
            .sum();
        num / ss
    } else {
        0.0
    };
    (mean, sd, r1)
}

/// Applies the flag rule from the module docs to the delta series summary.
fn delta_flag(mean: f64, sd: f64, r1: f64, t: usize) -> (String, f64) {
    if sd == 0.0 {
        let flag = if mean.abs() <= 1e-12 { "degenerate" } else { "fail" };
        return (flag.to_string(), 0.0);
    }
    let r1 = r1.clamp(0.0, 0.999);
    let se = sd * ((1.0 + r1) / (1.0 - r1)).sqrt() / (t as f64).sqrt();
    let offset = DELTA_OFFSET_RATIO * sd;
    let band = 4.0 * (se * se + offset * offset).sqrt();
    let flag = if mean.abs() <= band { "pass" } else { "fail" };
    (flag.to_string(), band)
}

pub fn execute(config: &DiagnoseConfig, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;
    let trace_path = PathBuf::from(&config.trace);
    let trace = read_trace_csv(&trace_path)?;
    let t = trace.delta.len();
    let p = trace.beta[0].len();

    let delta_path = out_dir.join("delta_trace.csv");
    {
        let file = File::create(&delta_path)
            .with_context(|| format!("cannot create {}", delta_path.display()))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "iter,delta,running_mean")?;
        let mut cum = 0.0;
        for (k, (&iter, &d)) in trace.iters.iter().zip(&trace.delta).enumerate() {
            cum += d;
            writeln!(w, "{iter},{d},{}", cum / (k + 1) as f64)?;
        }
        w.flush()?;
    }

    let (dmean, dsd, dr1) = series_summary(&trace.delta);
    let (flag, band) = delta_flag(dmean, dsd, dr1, t);

    let summary_path = out_dir.join("summary.csv");
    {
        let file = File::create(&summary_path)
            .with_context(|| format!("cannot create {}", summary_path.display()))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "param,mean,sd,lag1_autocorr,flag")?;
        let mut series = vec![0.0; t];
        for j in 0..p {
            for (k, b) in trace.beta.iter().enumerate() {
                series[k] = b[j];
            }
            let (m, s, r) = series_summary(&series);
            writeln!(w, "beta_{},{m},{s},{r},-", j + 1)?;
        }
        for j in 0..p {
            for (k, b) in trace.betak.iter().enumerate() {
                series[k] = b[j];
            }
            let (m, s, r) = series_summary(&series);
            writeln!(w, "betak_{},{m},{s},{r},-", j + 1)?;
        }
        if let Some(s2) = &trace.sigma2 {
            let (m, s, r) = series_summary(s2);
            writeln!(w, "sigma2,{m},{s},{r},-")?;
        }
        writeln!(w, "delta,{dmean},{dsd},{dr1},{flag}")?;
        w.flush()?;
    }

    let mut builder = ManifestBuilder::new("diagnose", 0, config)?;
    builder.record_input(&trace_path)?;
    builder.record_output(&delta_path)?;
    builder.record_output(&summary_path)?;
    let manifest_path = builder.write(out_dir)?;

    println!(
        "delta check: {flag} (mean = {dmean:.6}, sd = {dsd:.6}, threshold = {band:.6}, T = {t})"
    );
    println!("wrote {}", delta_path.display());
    println!("wrote {}", summary_path.display());
    println!("wrote {}", manifest_path.display());
    Ok(())
}
