//! `bkf`: Bayesian knockoff filter command line.
//!
//! Subcommands: `fit` (Gibbs chain on a CSV dataset), `select` (FDR-
//! controlled selection from a trace), `simulate` (synthetic experiment
//! grids), `diagnose` (trace and exchangeability diagnostics), and `bench`
//! (quick timings). Every command writes a `<command>_manifest.json` with
//! the resolved configuration and content digests; `--from-manifest`
//! re-runs a recorded configuration and reproduces its outputs.

mod bench;
mod diagnose;
mod fit;
mod manifest;
mod select;
mod simulate;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bkf", version, about = "Bayesian knockoff filter")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the knockoff-augmented Gibbs sampler on a CSV dataset
    Fit(fit::FitArgs),
    /// Select features from a trace with Bayesian FDR control
    Select(select::SelectArgs),
    /// Run a synthetic experiment spec and aggregate FDR/power
    Simulate(simulate::SimulateArgs),
    /// Summarize a trace and check the exchangeability diagnostic
    Diagnose(diagnose::DiagnoseArgs),
    /// Time the core operations on synthetic data
    Bench(bench::BenchArgs),
}

/// Maps errors to the documented exit codes: 2 usage/configuration,
/// 3 data, 4 numerical failure, 1 anything else.
fn exit_code(err: &anyhow::Error) -> i32 {
    if let Some(core) = err.downcast_ref::<bkf_core::Error>() {
        use bkf_core::Error as E;
        return match core {
            E::InvalidAlpha(_) | E::InvalidSpec(_) | E::InvalidParameter(_) => 2,
            E::Io { .. }
            | E::Parse { .. }
            | E::DegenerateColumn { .. }
            | E::NonFiniteInput { .. }
            | E::EmptyTrace
            | E::DimensionMismatch(_)
            | E::IndexOutOfRange { .. } => 3,
            E::NotPositiveDefinite(_)
            | E::EmptyInterval { .. }
            | E::RegularizationFailed { .. }
            | E::SingularGram(_) => 4,
        };
    }
    if err.downcast_ref::<manifest::InputDriftError>().is_some()
        || err.downcast_ref::<std::io::Error>().is_some()
    {
        return 3;
    }
    1
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(args) => fit::run(args),
        Command::Select(args) => select::run(args),
        Command::Simulate(args) => simulate::run(args),
        Command::Diagnose(args) => diagnose::run(args),
        Command::Bench(args) => bench::run(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(exit_code(&err));
    }
}
