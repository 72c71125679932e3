//! `bkf select`: turn a coefficient trace into a feature selection table.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use bkf_core::gibbs::{read_trace_csv, CoefficientTrace, TraceData};
use bkf_core::selection::{select_from_trace, FeatureStatisticKind, SelectionResult};

use crate::manifest::{ManifestBuilder, RunManifest};

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatisticArg {
    AbsDiff,
    SquaredDiff,
    SignedSum,
}

impl StatisticArg {
    pub fn to_kind(self) -> FeatureStatisticKind {
        match self {
            StatisticArg::AbsDiff => FeatureStatisticKind::AbsDiff,
            StatisticArg::SquaredDiff => FeatureStatisticKind::SquaredDiff,
            StatisticArg::SignedSum => FeatureStatisticKind::SignedSum,
        }
    }
}

#[derive(Args, Debug)]
pub struct SelectArgs {
    /// Trace CSV produced by `bkf fit`
    #[arg(required_unless_present = "from_manifest")]
    pub trace: Option<PathBuf>,
    /// Target Bayesian FDR level, strictly inside (0, 1)
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    /// Flip-sign feature statistic
    #[arg(long, value_enum, default_value_t = StatisticArg::AbsDiff)]
    pub statistic: StatisticArg,
    /// Output directory
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Re-run the configuration recorded in a select manifest
    #[arg(long, conflicts_with = "trace")]
    pub from_manifest: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SelectConfig {
    pub trace: String,
    pub alpha: f64,
    pub statistic: StatisticArg,
}

pub fn run(args: SelectArgs) -> Result<()> {
    let config = match &args.from_manifest {
        Some(path) => {
            let manifest = RunManifest::load(path)?;
            manifest.verify_inputs()?;
            manifest.config_as::<SelectConfig>()?
        }
        None => SelectConfig {
            trace: args
                .trace
                .as_ref()
                .expect("clap enforces trace without --from-manifest")
                .display()
                .to_string(),
            alpha: args.alpha,
            statistic: args.statistic,
        },
    };
    execute(&config, &args.out_dir)
}

pub fn execute(config: &SelectConfig, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;
    let trace_path = PathBuf::from(&config.trace);
    let trace = read_trace_csv(&trace_path)?;
    let result = select_from_trace(&trace, config.statistic.to_kind(), config.alpha)?;

    let selection_path = out_dir.join("selection.csv");
    write_selection_table(&selection_path, &trace, &result)?;

    let mut builder = ManifestBuilder::new("select", 0, config)?;
    builder.record_input(&trace_path)?;
    builder.record_output(&selection_path)?;
    let manifest_path = builder.write(out_dir)?;

    let bfdr = if result.k > 0 {
        result.prefix_bfdr[result.k - 1]
    } else {
        0.0
    };
    let listed: Vec<String> = result.selected.iter().map(|j| format!("x{}", j + 1)).collect();
    println!(
        "selected {} of {} features at alpha = {} (BFDR of selected set = {bfdr})",
        result.selected.len(),
        trace.beta_draws().first().map_or(0, |b| b.len()),
        config.alpha
    );
    if !listed.is_empty() {
        println!("selected: {}", listed.join(", "));
    }
    println!("wrote {}", selection_path.display());
    println!("wrote {}", manifest_path.display());
    Ok(())
}

/// Column means and (n-1)-denominator standard deviations of a draw list.
fn draw_moments(draws: &[nalgebra::DVector<f64>]) -> (Vec<f64>, Vec<f64>) {
    let t = draws.len();
    let p = draws.first().map_or(0, |d| d.len());
    let mut means = vec![0.0f64; p];
    for d in draws {
        for j in 0..p {
            means[j] += d[j];
        }
    }
    for m in &mut means {
        *m /= t as f64;
    }
    let mut sds = vec![0.0f64; p];
    if t >= 2 {
        for d in draws {
            for j in 0..p {
                let r = d[j] - means[j];
                sds[j] += r * r;
            }
        }
        for s in &mut sds {
            *s = (*s / (t as f64 - 1.0)).sqrt();
        }
    }
    (means, sds)
}

/// Per-feature table in rank order: posterior moments of both coefficient
/// blocks, the null-probability bound, and the greedy selection outcome.
fn write_selection_table(path: &Path, trace: &TraceData, result: &SelectionResult) -> Result<()> {
    let (beta_mean, beta_sd) = draw_moments(&trace.beta);
    let (betak_mean, betak_sd) = draw_moments(&trace.betak);
    let file = File::create(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(
        w,
        "feature,beta_mean,beta_sd,betak_mean,betak_sd,p_hat,rank,prefix_bfdr,selected"
    )?;
    for (rank, &j) in result.order.iter().enumerate() {
        let selected = result.selected.binary_search(&j).is_ok();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            j + 1,
            beta_mean[j],
            beta_sd[j],
            betak_mean[j],
            betak_sd[j],
            result.bounds.p_hat[j],
            rank + 1,
            result.prefix_bfdr[rank],
            selected
        )?;
    }
    w.flush()?;
    Ok(())
}
