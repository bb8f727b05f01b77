//! Command-line front end: run a configured Monte-Carlo sweep, list the
//! available scenario/estimator/detector names, or exercise a quick
//! self-test of every pipeline.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use onebit_mimo::harness::{run_experiment, runner::selftest, ExperimentConfig};

#[derive(Parser)]
#[command(name = "onebit-mimo", version, about = "One-bit massive MIMO SVM simulation harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config file.
    Run {
        /// Path to the experiment config.
        config: PathBuf,
        /// Output directory for metrics.csv and config.echo (default: cwd).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override master_seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Size of the worker thread pool (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print the recognized scenario, estimator, and detector names.
    ListScenarios,
    /// Run a fast end-to-end check of every simulation path.
    Selftest,
}

fn run(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Run {
            config,
            out,
            seed,
            threads,
        } => {
            if let Some(t) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build_global()
                    .context("failed to size the thread pool")?;
            }
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("cannot read config {}", config.display()))?;
            let mut cfg = ExperimentConfig::from_toml(&text)?;
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            let out_dir = out.unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&out_dir)
                .with_context(|| format!("cannot create {}", out_dir.display()))?;
            let result = run_experiment(&cfg)?;
            let csv_path = out_dir.join("metrics.csv");
            std::fs::write(&csv_path, result.table.to_csv())
                .with_context(|| format!("cannot write {}", csv_path.display()))?;
            std::fs::write(out_dir.join("config.echo"), result.config_echo)?;
            println!("wrote {}", csv_path.display());
            Ok(())
        }
        Command::ListScenarios => {
            println!("scenarios:  flat_iid | flat_correlated | ofdm");
            println!("estimators: svm | svm_correlated | joint_ce_dd | perfect_csi");
            println!("detectors:  svm_two_stage | svm_stage1 | ml | ofdm_svm");
            Ok(())
        }
        Command::Selftest => {
            selftest()?;
            println!("selftest: ok");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
