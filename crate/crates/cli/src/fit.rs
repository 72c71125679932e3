//! `bkf fit`: load a CSV dataset, fit the second-order knockoff model,
//! run the Gibbs chain, and write the trace.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use bkf_core::dataset::Dataset;
use bkf_core::gibbs::{
    run_chain_linear, run_chain_probit, ChainConfig, LinearPrior, SweepOrder, WeightForm,
};
use bkf_core::knockoff::{
    build_joint_model, construct_s_equicorrelated, estimate_moments, DEFAULT_SLACK,
};

use crate::manifest::{ManifestBuilder, RunManifest};

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelArg {
    Linear,
    Probit,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorArg {
    Flat,
    SpikeSlab,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepArg {
    Ascending,
    RandomScan,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightFormArg {
    Corrected,
    PaperVerbatim,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Input CSV: header row, numeric feature columns, one response column
    #[arg(required_unless_present = "from_manifest")]
    pub data: Option<PathBuf>,
    /// Name of the response column
    #[arg(long, default_value = "y")]
    pub response: String,
    /// Response model
    #[arg(long, value_enum, default_value_t = ModelArg::Linear)]
    pub model: ModelArg,
    /// Coefficient prior
    #[arg(long, value_enum, default_value_t = PriorArg::Flat)]
    pub prior: PriorArg,
    /// Spike-and-slab inclusion probability
    #[arg(long, default_value_t = 0.1)]
    pub xi: f64,
    /// Spike-and-slab slab variance
    #[arg(long, default_value_t = 1.0)]
    pub tau2: f64,
    /// Iterations discarded before retention
    #[arg(long, default_value_t = 500)]
    pub burn_in: usize,
    /// Retained posterior draws
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    /// Keep every k-th post-burn-in draw
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    /// RNG seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Ridge added to a singular Gram matrix (probit saturated designs)
    #[arg(long)]
    pub ridge: Option<f64>,
    /// Spike-and-slab coordinate order
    #[arg(long, value_enum, default_value_t = SweepArg::Ascending)]
    pub sweep: SweepArg,
    /// Spike-and-slab weight normalization
    #[arg(long, value_enum, default_value_t = WeightFormArg::Corrected)]
    pub weight_form: WeightFormArg,
    /// Skip feature standardization (input must already have zero mean and
    /// unit variance; the knockoff construction expects a correlation matrix)
    #[arg(long)]
    pub no_standardize: bool,
    /// Output directory
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Re-run the configuration recorded in a fit manifest
    #[arg(long, conflicts_with = "data")]
    pub from_manifest: Option<PathBuf>,
}

/// Resolved, serializable fit configuration (everything that affects the
/// outputs; the output directory is deliberately not part of it).
#[derive(Debug, Serialize, Deserialize)]
pub struct FitConfig {
    pub data: String,
    pub response: String,
    pub model: ModelArg,
    pub prior: PriorArg,
    pub xi: f64,
    pub tau2: f64,
    pub burn_in: usize,
    pub samples: usize,
    pub thin: usize,
    pub seed: u64,
    pub ridge: Option<f64>,
    pub sweep: SweepArg,
    pub weight_form: WeightFormArg,
    pub standardize: bool,
}

pub fn run(args: FitArgs) -> Result<()> {
    let config = match &args.from_manifest {
        Some(path) => {
            let manifest = RunManifest::load(path)?;
            manifest.verify_inputs()?;
            manifest.config_as::<FitConfig>()?
        }
        None => FitConfig {
            data: args
                .data
                .as_ref()
                .expect("clap enforces data without --from-manifest")
                .display()
                .to_string(),
            response: args.response.clone(),
            model: args.model,
            prior: args.prior,
            xi: args.xi,
            tau2: args.tau2,
            burn_in: args.burn_in,
            samples: args.samples,
            thin: args.thin,
            seed: args.seed,
            ridge: args.ridge,
            sweep: args.sweep,
            weight_form: args.weight_form,
            standardize: !args.no_standardize,
        },
    };
    execute(&config, &args.out_dir)
}

pub fn execute(config: &FitConfig, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;
    let data_path = PathBuf::from(&config.data);
    let mut dataset = Dataset::load_csv(&data_path, &config.response)?;
    let (n, p) = (dataset.n(), dataset.p());

    if config.standardize {
        dataset.standardize_features()?;
    }
    let moments = estimate_moments(&dataset.features, false)?;
    let s = construct_s_equicorrelated(&moments.sigma, DEFAULT_SLACK)?;
    let model = build_joint_model(&moments, &s)?;

    let chain = ChainConfig {
        burn_in: config.burn_in,
        samples: config.samples,
        thin: config.thin,
        seed: config.seed,
        stream: 0,
        sweep: match config.sweep {
            SweepArg::Ascending => SweepOrder::Ascending,
            SweepArg::RandomScan => SweepOrder::RandomScan,
        },
        weight_form: match config.weight_form {
            WeightFormArg::Corrected => WeightForm::Corrected,
            WeightFormArg::PaperVerbatim => WeightForm::PaperVerbatim,
        },
        keep_knockoffs_every: None,
        ridge: config.ridge,
    };

    let trace_path = out_dir.join("trace.csv");
    let delta_path = out_dir.join("delta.csv");
    let (warnings, iters, delta): (Vec<String>, Vec<u64>, Vec<f64>) = match config.model {
        ModelArg::Linear => {
            let prior = match config.prior {
                PriorArg::Flat => LinearPrior::Flat,
                PriorArg::SpikeSlab => LinearPrior::SpikeSlab {
                    xi: config.xi,
                    tau2: config.tau2,
                },
            };
            let removed = dataset.center_response();
            println!("centered response '{}' (removed mean {removed})", config.response);
            let trace = run_chain_linear(&dataset.features, &dataset.response, &model, prior, &chain)?;
            trace.write_csv(&trace_path)?;
            let iters = retained_iters(&chain, trace.delta.len());
            (trace.warnings.clone(), iters, trace.delta)
        }
        ModelArg::Probit => {
            if config.prior != PriorArg::Flat {
                return Err(bkf_core::Error::InvalidParameter(
                    "--model probit supports --prior flat only".to_string(),
                )
                .into());
            }
            let labels = dataset.binary_labels()?;
            let trace = run_chain_probit(&dataset.features, &labels, &model, &chain)?;
            trace.write_csv(&trace_path)?;
            let iters = retained_iters(&chain, trace.delta.len());
            (trace.warnings.clone(), iters, trace.delta)
        }
    };
    write_delta_csv(&delta_path, &iters, &delta)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }

    let mut builder = ManifestBuilder::new("fit", config.seed, config)?;
    builder.record_input(&data_path)?;
    builder.record_output(&trace_path)?;
    builder.record_output(&delta_path)?;
    let manifest_path = builder.write(out_dir)?;

    println!(
        "fit: {} model on {} ({} rows, {} features), {} draws after {} burn-in",
        match config.model {
            ModelArg::Linear => "linear",
            ModelArg::Probit => "probit",
        },
        config.data,
        n,
        p,
        config.samples,
        config.burn_in
    );
    println!("wrote {}", trace_path.display());
    println!("wrote {}", delta_path.display());
    println!("wrote {}", manifest_path.display());
    Ok(())
}

/// Iteration labels of the retained draws, matching the trace CSV.
fn retained_iters(chain: &ChainConfig, count: usize) -> Vec<u64> {
    (0..count)
        .map(|t| (chain.burn_in + (t + 1) * chain.thin) as u64)
        .collect()
}

fn write_delta_csv(path: &Path, iters: &[u64], delta: &[f64]) -> Result<()> {
    let file = File::create(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "iter,delta")?;
    for (it, d) in iters.iter().zip(delta) {
        writeln!(w, "{it},{d}")?;
    }
    w.flush()?;
    Ok(())
}
