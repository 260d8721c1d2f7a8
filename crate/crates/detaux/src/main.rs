//! `detaux` command-line interface.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use detaux::config::{PipelineConfig, Precision, RunMode};
use detaux::stages;
use detaux::PipelineError;

/// Instantiate a block for the configured scalar precision.
macro_rules! with_precision {
    ($cfg:expr, $S:ident, $body:block) => {
        match $cfg.precision {
            Precision::F32 => {
                type $S = f32;
                $body
            }
            Precision::F64 => {
                type $S = f64;
                $body
            }
        }
    };
}

#[derive(Parser)]
#[command(
    name = "detaux",
    about = "Turn a single-task image classification dataset into a multi-task one by mining an auxiliary task from a disentangled latent space",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override the configured root seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Render the factor dataset, corrupt it, and write data + split files.
    GenData(CommonArgs),
    /// Train the disentanglement model on weakly supervised pairs.
    TrainDis(CommonArgs),
    /// Score subspaces, cluster the winner, and export auxiliary labels.
    Discover(CommonArgs),
    /// Train the two-head multi-task classifier on mined labels.
    TrainMtl(CommonArgs),
    /// Train the single-task baseline.
    TrainStl(CommonArgs),
    /// Run every stage and write the comparison report and manifest.
    FullRun(CommonArgs),
    /// Full run with a reconstruction-only autoencoder, clustering the raw
    /// latent code instead of a subspace.
    AblateEntangled(CommonArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(e.exit_code())
        }
    }
}

fn load_config(
    args: &CommonArgs,
    mode_override: Option<RunMode>,
) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = PipelineConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(mode) = mode_override {
        cfg.mode = mode;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::GenData(args) => {
            let cfg = load_config(&args, None)?;
            let artifacts = stages::gen_data(&cfg)?;
            announce("gen-data", &artifacts);
            Ok(())
        }
        Command::TrainDis(args) => {
            let cfg = load_config(&args, None)?;
            with_precision!(cfg, S, {
                let artifacts = stages::train_dis::<S>(&cfg)?;
                announce("train-dis", &artifacts);
            });
            Ok(())
        }
        Command::Discover(args) => {
            let cfg = load_config(&args, None)?;
            with_precision!(cfg, S, {
                let (summary, artifacts) = stages::discover_stage::<S>(&cfg)?;
                println!(
                    "discover: {} ({} clusters, noise fraction {:.3})",
                    summary.status, summary.num_clusters, summary.noise_fraction
                );
                announce("discover", &artifacts);
            });
            Ok(())
        }
        Command::TrainMtl(args) => {
            let cfg = load_config(&args, None)?;
            with_precision!(cfg, S, {
                let (reports, artifacts) = stages::train_mtl_stage::<S>(&cfg)?;
                for r in &reports {
                    println!(
                        "mtl seed {}: train {:.4} / test {:.4}",
                        r.seed, r.train_accuracy_main, r.test_accuracy_main
                    );
                }
                announce("train-mtl", &artifacts);
            });
            Ok(())
        }
        Command::TrainStl(args) => {
            let cfg = load_config(&args, None)?;
            with_precision!(cfg, S, {
                let (reports, artifacts) = stages::train_stl_stage::<S>(&cfg)?;
                for r in &reports {
                    println!(
                        "stl seed {}: train {:.4} / test {:.4}",
                        r.seed, r.train_accuracy_main, r.test_accuracy_main
                    );
                }
                announce("train-stl", &artifacts);
            });
            Ok(())
        }
        Command::FullRun(args) => {
            let cfg = load_config(&args, None)?;
            run_full(&cfg)
        }
        Command::AblateEntangled(args) => {
            let cfg = load_config(&args, Some(RunMode::NoDisentangle))?;
            run_full(&cfg)
        }
    }
}

fn run_full(cfg: &PipelineConfig) -> Result<(), PipelineError> {
    with_precision!(cfg, S, {
        let report = stages::full_run::<S>(cfg)?;
        println!("status: {}", report.status);
        println!("stl_acc: {:.4}", report.stl_acc);
        if let (Some(mtl), Some(delta)) = (report.mtl_acc, report.delta) {
            println!("mtl_acc: {:.4} (delta {:+.4})", mtl, delta);
        }
        if let Some(nmi) = report.aux_nmi {
            println!("aux_nmi: {:.4}", nmi);
        }
        println!(
            "report: {}",
            stages::StagePaths::new(&cfg.out_dir).final_report().display()
        );
    });
    Ok(())
}

fn announce(stage: &str, artifacts: &[PathBuf]) {
    for path in artifacts {
        println!("{}: wrote {}", stage, path.display());
    }
}
