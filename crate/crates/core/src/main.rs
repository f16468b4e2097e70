use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use camfield::cli::run::{self, Summary};
use camfield::cli::{parse_config, TrainConfig};
use camfield::{Error, Result};

#[derive(Parser)]
#[command(name = "camfield", version, about = "Train and analyse neural fields with coordinate-aware modulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides `[output] dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Allow writing into an existing, non-empty output directory.
    #[arg(long, global = true)]
    force: bool,
    /// Quantization bit width for evaluation.
    #[arg(long, global = true, value_parser = ["32", "8", "6"])]
    bits: Option<String>,
    /// Worker threads for matrix products.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write checkpoint, metric log and summary.
    Train { config: PathBuf },
    /// Score a checkpoint on the configured task.
    Eval { checkpoint: PathBuf, config: PathBuf },
    /// Export grids, error spectrum and feature variance of a checkpoint.
    Analyze { checkpoint: PathBuf, config: PathBuf },
    /// Train baseline, CAM without normalization, and CAM with a shared seed.
    Ablate { config: PathBuf },
}

fn load_config(path: &Path, cli: &Cli) -> Result<TrainConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = parse_config(&text).map_err(|e| match e {
        Error::Config { line, message } => Error::Config {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(bits) = &cli.bits {
        cfg.bits = bits.parse().expect("validated by clap");
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::invalid(e.to_string()))?;
    }
    match &cli.command {
        Command::Train { config } => {
            let cfg = load_config(config, cli)?;
            let out = run::output_dir(&cfg, cli.out.as_deref())?;
            let outcome = run::run_train(&cfg, &out, cli.force, "train", true)?;
            println!("{}\n{}", Summary::HEADER, outcome.summary.row());
            if cfg.bits != 32 {
                let q = run::summarize(&outcome.model, &outcome.data, &cfg, cfg.bits, "quantized")?;
                println!("{}", q.row());
            }
        }
        Command::Eval { checkpoint, config } => {
            let cfg = load_config(config, cli)?;
            let s = run::run_eval(checkpoint, &cfg, cfg.bits)?;
            println!("{}\n{}", Summary::HEADER, s.row());
        }
        Command::Analyze { checkpoint, config } => {
            let cfg = load_config(config, cli)?;
            let out = run::output_dir(&cfg, cli.out.as_deref())?;
            let report = run::run_analyze(checkpoint, &cfg, &out, cli.force)?;
            print!("{}", report.to_tsv());
            for f in &report.files {
                eprintln!("wrote {}", f.display());
            }
        }
        Command::Ablate { config } => {
            let cfg = load_config(config, cli)?;
            let out = run::output_dir(&cfg, cli.out.as_deref())?;
            let ab = run::run_ablate(&cfg, &out, cli.force, true)?;
            println!("{}", Summary::HEADER);
            for r in &ab.rows {
                println!("{}", r.row());
            }
            println!(
                "ordering baseline <= cam-n (+0.2 dB) <= cam: {}",
                if ab.ordered { "holds" } else { "violated" }
            );
        }
    }
    Ok(())
}
