//! `wildcard`: simulate characterization data, fit error models, and
//! quantify their unmodeled error with minimal wildcard models.

mod config;
mod error;
mod report;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;
use crate::stages::{Globals, SeedRun};

#[derive(Parser, Debug)]
#[command(name = "wildcard", version, about = "Wildcard error analysis pipelines")]
struct Cli {
    #[command(flatten)]
    globals: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Run configuration (TOML).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Run only this seed.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Run directory; holds one `seed-<n>/` subdirectory per seed.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Significance level of the consistency test.
    #[arg(long, global = true, value_name = "F")]
    alpha: Option<f64>,
    /// Wildcard objective: `l1` or `weighted:<w1,w2,...>`.
    #[arg(long, global = true, value_name = "OBJ")]
    objective: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate the configured scenario and write datasets.
    Simulate,
    /// Fit the RB decay and build the depolarizing model.
    FitRb,
    /// Fit process matrices to GST data (GST-lite).
    FitGst,
    /// Solve for the minimal wildcard model and test consistency.
    Wildcard,
    /// Diamond distances of model and true gates to the targets.
    Diamond,
    /// Write plot-ready tables, one per panel.
    Report,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let g = Globals {
        config: cli.globals.config,
        seed: cli.globals.seed,
        out: cli.globals.out,
        alpha: cli.globals.alpha,
        objective: cli.globals.objective,
    };
    if matches!(cli.command, Command::Simulate) && g.config.is_none() {
        return Err(CliError::Usage("simulate needs --config <file>".into()));
    }
    let runs = stages::plan(&g)?;
    let mut pending: Option<CliError> = None;
    for r in &runs {
        match stage(&cli.command, r) {
            Ok(()) => {}
            // Keep going so every seed gets its artifacts; report at the end.
            Err(e @ CliError::NotConverged(_)) => {
                log::warn!("seed {}: {e}", r.seed);
                pending.get_or_insert(e);
            }
            Err(e) => return Err(e),
        }
    }
    pending.map_or(Ok(()), Err)
}

fn stage(command: &Command, r: &SeedRun) -> Result<(), CliError> {
    match command {
        Command::Simulate => stages::simulate(r),
        Command::FitRb => stages::fit_rb(r),
        Command::FitGst => stages::fit_gst(r),
        Command::Wildcard => stages::wildcard(r),
        Command::Diamond => stages::diamond(r),
        Command::Report => {
            for name in report::report(r)? {
                println!("{}", r.path(&name).display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(1);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
