//! Rigid point-cloud registration by progressive correspondence
//! regeneration.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use regor_cli::commands::{benchmark, eval, register, synth};
use regor_cli::CliError;

#[derive(Parser)]
#[command(
    name = "regor",
    about = "Rigid point-cloud registration by progressive correspondence regeneration",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Register a source cloud onto a target cloud.
    Register {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Precomputed source descriptors (binary feature file).
        #[arg(long)]
        features_src: Option<PathBuf>,
        /// Precomputed target descriptors (binary feature file).
        #[arg(long)]
        features_dst: Option<PathBuf>,
        /// Initial correspondence CSV; bootstrapped from features if absent.
        #[arg(long)]
        init_corr: Option<PathBuf>,
        #[arg(long)]
        config: PathBuf,
        /// Output directory for transform.json, correspondences.csv, trace.json.
        #[arg(long)]
        out: PathBuf,
        /// Ablation override, e.g. `matching=mm`; repeatable.
        #[arg(long)]
        ablation: Vec<String>,
    },
    /// Sweep a grid of synthetic scenes and report metrics.
    Benchmark {
        /// Benchmark spec JSON.
        #[arg(long)]
        spec: PathBuf,
        /// Output directory for pairs.jsonl and summary.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate one synthetic scene as loadable files.
    Synth {
        /// Scene spec JSON.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute metrics from previously written outputs.
    Eval {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Estimated transform JSON.
        #[arg(long)]
        transform: PathBuf,
        /// Ground-truth transform JSON.
        #[arg(long)]
        gt_transform: PathBuf,
        #[arg(long)]
        init_corr: PathBuf,
        #[arg(long)]
        final_corr: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Optional metrics JSON output path (stdout regardless).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// REGOR_THREADS bounds the worker pool; unset means one worker per core.
fn configure_threads() -> Result<(), CliError> {
    match std::env::var("REGOR_THREADS") {
        Ok(value) => {
            let threads: usize = value
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| {
                    CliError::invalid(format!("REGOR_THREADS must be a positive integer, got '{value}'"))
                })?;
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global()
                .map_err(|e| CliError::invalid(e.to_string()))
        }
        Err(_) => Ok(()),
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Register {
            source,
            target,
            features_src,
            features_dst,
            init_corr,
            config,
            out,
            ablation,
        } => register::run(&register::RegisterArgs {
            source,
            target,
            features_src,
            features_dst,
            init_corr,
            config,
            out,
            ablation,
        }),
        Command::Benchmark { spec, out } => benchmark::run(&benchmark::BenchmarkArgs { spec, out }),
        Command::Synth { spec, out } => synth::run(&synth::SynthArgs { spec, out }),
        Command::Eval {
            source,
            target,
            transform,
            gt_transform,
            init_corr,
            final_corr,
            config,
            out,
        } => eval::run(&eval::EvalArgs {
            source,
            target,
            transform,
            gt_transform,
            init_corr,
            final_corr,
            config,
            out,
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(err) = configure_threads() {
        eprintln!("{err}");
        return ExitCode::from(err.kind.exit_code() as u8);
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.kind.exit_code() as u8)
        }
    }
}
