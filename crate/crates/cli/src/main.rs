use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod failure;

use config::{ExperimentConfig, Overrides};
use failure::{Failure, Kind};

/// Random trees with a prescribed degree schedule, their genealogies and
/// the limiting coalescent.
#[derive(Parser, Debug)]
#[command(name = "treecoal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    replicates: Option<usize>,
    /// Number of sampled vertices or labels.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write an SVG drawing of the sampled tree.
    #[arg(long, global = true)]
    render: bool,
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Sample one tree and export it as CSV and binary.
    SampleTree,
    /// Distance matrices between k uniform vertices, scaled by 1/n.
    Matrix,
    /// Distance matrices of k labels under the limiting coalescent.
    LimitMatrix,
    /// Two-sample tests between discrete and limit ensembles.
    Compare,
    /// Schedule validation and convergence diagnostics.
    Check,
    /// Branching-process paths, drift statistics and plug-in parameters.
    Gwve,
    /// Sample one tree and draw it as SVG.
    Render,
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let overrides = Overrides {
        seed: cli.seed,
        replicates: cli.replicates,
        k: cli.k,
        out: cli.out.clone(),
        render: cli.render,
        threads: cli.threads,
    };
    let cfg = ExperimentConfig::load(cli.config.as_deref(), &overrides)?;
    if let Some(t) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::new(Kind::Config, e.to_string()))?;
    }

    let files = match cli.command {
        Command::SampleTree => commands::sample_tree(&cfg)?,
        Command::Matrix => commands::matrix(&cfg)?,
        Command::LimitMatrix => commands::limit_matrix(&cfg)?,
        Command::Render => commands::render(&cfg)?,
        Command::Gwve => commands::gwve(&cfg)?,
        Command::Compare | Command::Check => {
            let (files, report) = if matches!(cli.command, Command::Compare) {
                commands::compare(&cfg)?
            } else {
                commands::check(&cfg)?
            };
            for e in &report.entries {
                let value = e.value.map(|v| format!(" ({v:.4})")).unwrap_or_default();
                println!("{:?}\t{}{}\t{}", e.status, e.name, value, e.detail);
            }
            println!("{} warnings, {} failures", report.warnings, report.failures);
            files
        }
    };

    fs::create_dir_all(&cfg.out).map_err(|e| Failure::new(Kind::Io, format!("cannot create {}: {e}", cfg.out.display())))?;
    for (name, bytes) in files {
        let path = cfg.out.join(&name);
        fs::write(&path, bytes).map_err(|e| Failure::new(Kind::Io, format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(Kind::Config as u8) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code() as u8)
        }
    }
}
