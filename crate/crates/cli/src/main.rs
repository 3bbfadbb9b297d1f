//! `stancegen` command-line driver.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stancegen::{Error, Result};

use commands::Dataset;
use config::{parse_seeds, RunConfig, DATA_DIR_ENV};

#[derive(Parser)]
#[command(name = "stancegen", version, about = "Cross-target stance detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct ConfigArgs {
    /// Run configuration (`key = value` lines).
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Model variant: Concat, Concat-Invar, BCA, BCA-Invar, BCA-Invar-Spec.
    #[arg(long)]
    variant: Option<String>,
    /// Weight of the domain-adversarial loss.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Comma-separated seeds; one model is trained per seed.
    #[arg(long)]
    seeds: Option<String>,
    /// Skip the comparison with the published split sizes.
    #[arg(long)]
    no_count_check: bool,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model per seed with early stopping on dev macro-F1.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Train seeds on separate threads.
        #[arg(long)]
        parallel: bool,
    },
    /// Score a checkpoint on a split (train, dev, test) or a TSV file.
    Eval {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value = "test")]
        dataset: String,
    },
    /// Classify one sentence toward one target.
    Predict {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        target: String,
        #[arg(long)]
        text: String,
    },
    /// Write attention weights as JSONL and an HTML heatmap.
    DumpAttention {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value = "test")]
        dataset: String,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare analytic and numerical gradients of every op, layer and model.
    Gradcheck {
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
}

fn build_config(args: &ConfigArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let here = Path::new(".");
    if let Some(v) = &args.variant {
        cfg.set("variant", v, here)?;
    }
    if let Some(l) = args.lambda {
        cfg.hp.lambda = l;
    }
    if let Some(s) = args.seed {
        cfg.seeds = vec![s];
    }
    if let Some(s) = &args.seeds {
        cfg.seeds = parse_seeds(s)?;
    }
    if args.no_count_check {
        cfg.count_check = false;
    }
    if let Some(d) = &args.out_dir {
        cfg.out_dir = d.clone();
    }
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(&k.trim().to_ascii_lowercase(), v.trim(), here)?;
    }
    let cfg = cfg.with_data_fallback(std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Exit status for each error class.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Data(_) | Error::Parse { .. } | Error::Io { .. } => 3,
        Error::Checkpoint(_) => 4,
        Error::Capability(_) => 5,
        Error::Shape { .. } | Error::Argument { .. } | Error::Domain { .. } => 70,
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Train { cfg, parallel } => {
            commands::cmd_train(&build_config(&cfg)?, parallel)?;
        }
        Command::Eval {
            cfg,
            checkpoint,
            dataset,
        } => {
            commands::cmd_eval(&build_config(&cfg)?, &checkpoint, &Dataset::parse(&dataset))?;
        }
        Command::Predict {
            cfg,
            checkpoint,
            target,
            text,
        } => {
            commands::cmd_predict(&build_config(&cfg)?, &checkpoint, &target, &text)?;
        }
        Command::DumpAttention {
            cfg,
            checkpoint,
            dataset,
            out,
        } => {
            commands::cmd_dump_attention(
                &build_config(&cfg)?,
                &checkpoint,
                &Dataset::parse(&dataset),
                &out,
            )?;
        }
        Command::Gradcheck { inject_fault } => {
            let summary = commands::cmd_gradcheck(inject_fault.as_deref())?;
            if !summary.passed() {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
