//! `bkf bench`: quick wall-clock timings of the main kernels, for sizing
//! experiment runs on the current machine.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Args;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use bkf_core::dist::standard_normal;
use bkf_core::gibbs::{update_coefficients_flat, update_knockoff_rows_linear, update_sigma2};
use bkf_core::knockoff::{
    build_joint_model, construct_s_equicorrelated, estimate_moments, sample_knockoffs_marginal,
    DEFAULT_SLACK,
};
use bkf_core::selection::{estimate_null_bounds, greedy_select};
use bkf_core::{cholesky, RngStream, SymmetricMatrix};

use crate::manifest::{ManifestBuilder, RunManifest};

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Rows of the synthetic design
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    /// Features of the synthetic design
    #[arg(long, default_value_t = 30)]
    pub p: usize,
    /// Timed repetitions per kernel
    #[arg(long, default_value_t = 50)]
    pub iters: usize,
    /// RNG seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory (receives only the manifest)
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Re-run the configuration recorded in a bench manifest
    #[arg(long)]
    pub from_manifest: Option<PathBuf>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BenchConfig {
    pub n: usize,
    pub p: usize,
    pub iters: usize,
    pub seed: u64,
}

pub fn run(args: BenchArgs) -> Result<()> {
    let config = match &args.from_manifest {
        Some(path) => {
            let manifest = RunManifest::load(path)?;
            manifest.verify_inputs()?;
            manifest.config_as::<BenchConfig>()?
        }
        None => BenchConfig {
            n: args.n,
            p: args.p,
            iters: args.iters,
            seed: args.seed,
        },
    };
    execute(&config, &args.out_dir)
}

fn time<F: FnMut() -> bkf_core::Result<()>>(iters: usize, mut f: F) -> Result<f64> {
    let start = Instant::now();
    for _ in 0..iters {
        f()?;
    }
    Ok(start.elapsed().as_secs_f64())
}

pub fn execute(config: &BenchConfig, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;
    let (n, p, iters) = (config.n, config.p, config.iters);
    if n < 2 * p + 2 {
        return Err(bkf_core::Error::InvalidParameter(format!(
            "bench needs n >= 2p + 2 for the flat-prior kernels (n = {n}, p = {p})"
        ))
        .into());
    }
    if iters == 0 {
        return Err(bkf_core::Error::InvalidParameter(
            "--iters must be at least 1".to_string(),
        )
        .into());
    }

    let mut rng = RngStream::new(config.seed, 0);
    let x = DMatrix::from_fn(n, p, |_, _| standard_normal(&mut rng));
    let y = DVector::from_fn(n, |i, _| x[(i, 0)] + 0.5 * standard_normal(&mut rng));
    let moments = estimate_moments(&x, true)?;
    let s = construct_s_equicorrelated(&moments.sigma, DEFAULT_SLACK)?;
    let model = build_joint_model(&moments, &s)?;
    let sigma_dense = moments.sigma.to_dense();

    let t_chol = time(iters, || {
        let m = SymmetricMatrix::from_fn(p, |i, j| sigma_dense[(i, j)]);
        cholesky(&m).map(|_| ())
    })?;

    let mut xk = sample_knockoffs_marginal(&model, &x, &mut rng)?;
    let t_marginal = time(iters, || {
        xk = sample_knockoffs_marginal(&model, &x, &mut rng)?;
        Ok(())
    })?;

    let mut beta = DVector::zeros(p);
    let mut betak = DVector::zeros(p);
    let mut sigma2 = 1.0;
    let t_sweep = time(iters, || {
        let (b, bk) = update_coefficients_flat(&x, &xk, &y, sigma2, &mut rng)?;
        beta = b;
        betak = bk;
        sigma2 = update_sigma2(&x, &xk, &y, &beta, &betak, &mut rng)?;
        update_knockoff_rows_linear(&x, &mut xk, &y, &model, &beta, &betak, sigma2, &mut rng)
    })?;

    let draws: Vec<DVector<f64>> = (0..2000)
        .map(|_| DVector::from_fn(p, |_, _| standard_normal(&mut rng)))
        .collect();
    let t_select = time(iters, || {
        let bounds = estimate_null_bounds(&draws)?;
        greedy_select(&bounds, 0.1).map(|_| ())
    })?;

    println!("bench: n = {n}, p = {p}, {iters} iterations per kernel");
    println!("{:<28} {:>12} {:>14}", "kernel", "total (s)", "per iter (ms)");
    for (name, total) in [
        ("cholesky p x p", t_chol),
        ("marginal knockoff sample", t_marginal),
        ("linear gibbs sweep", t_sweep),
        ("selection (T = 2000)", t_select),
    ] {
        println!(
            "{name:<28} {total:>12.4} {:>14.4}",
            1e3 * total / iters as f64
        );
    }

    let builder = ManifestBuilder::new("bench", config.seed, config)?;
    let manifest_path = builder.write(out_dir)?;
    println!("wrote {}", manifest_path.display());
    Ok(())
}
