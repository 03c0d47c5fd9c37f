use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sparsemap_cli::config::{parse_algorithms, CommonArgs, Experiment};
use sparsemap_cli::experiments;
use sparsemap_cli::image::{run_image_demo, ImageDemoConfig};
use sparsemap_cli::verify::run_verify;

/// Sparse-signal recovery benchmarks driven by MAP-ratio support detection.
#[derive(Parser)]
#[command(name = "sparsemap", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Monte-Carlo benchmark experiments (CSV output)
    Bench {
        #[command(subcommand)]
        experiment: BenchCommand,
    },
    /// Demonstrations on file inputs
    Demo {
        #[command(subcommand)]
        demo: DemoCommand,
    },
    /// Statistical verifiers for the random-ensemble distributions
    Verify(VerifyArgs),
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Exact-recovery probability over a sparsity sweep
    RecoveryProb(CommonArgs),
    /// NMSE (dB) over an SNR sweep with ridge estimation
    Nmse(CommonArgs),
    /// MAP-MP success versus measurement count, with the analytic bound
    Scaling(CommonArgs),
    /// Median runtimes and speedup ratios at one operating point
    Runtime(CommonArgs),
}

#[derive(Subcommand)]
enum DemoCommand {
    /// Compress a PBM bitmap and reconstruct it with each algorithm
    Image(ImageArgs),
}

#[derive(Args)]
struct ImageArgs {
    /// Input bitmap (PBM P1 or P4)
    #[arg(long)]
    input: PathBuf,
    /// Measurement count M
    #[arg(long, default_value_t = 128)]
    m: usize,
    /// Per-component noise variance
    #[arg(long, default_value_t = 0.0)]
    sigma_w2: f64,
    /// Comma-separated algorithms
    #[arg(long, default_value = "map_gomp,map_sp,gomp,sp")]
    algos: String,
    /// gOMP selection width
    #[arg(long, default_value_t = 2)]
    gomp_l: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for recovered PBMs and metrics.csv
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Monte-Carlo trials per check (minimum 1000)
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn run() -> anyhow::Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::Bench { experiment } => {
            let (args, kind) = match &experiment {
                BenchCommand::RecoveryProb(a) => (a, Experiment::RecoveryProb),
                BenchCommand::Nmse(a) => (a, Experiment::Nmse),
                BenchCommand::Scaling(a) => (a, Experiment::Scaling),
                BenchCommand::Runtime(a) => (a, Experiment::Runtime),
            };
            let cfg = args.resolve(kind)?;
            experiments::run(&cfg)?;
            eprintln!("wrote {}", cfg.out.display());
            Ok(true)
        }
        Command::Demo { demo: DemoCommand::Image(args) } => {
            let cfg = ImageDemoConfig {
                input: args.input,
                m: args.m,
                sigma_w2: args.sigma_w2,
                algorithms: parse_algorithms(&args.algos, "algos")?,
                gomp_width: args.gomp_l,
                seed: args.seed,
                out_dir: args.out,
            };
            let results = run_image_demo(&cfg)?;
            for r in &results {
                println!(
                    "{}: precision={:.4} recall={:.4} exact={} -> {}",
                    r.algorithm,
                    r.precision,
                    r.recall,
                    r.exact,
                    r.output_path.display()
                );
            }
            Ok(true)
        }
        Command::Verify(args) => {
            let mut stdout = std::io::stdout().lock();
            run_verify(args.trials, args.seed, &mut stdout)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
