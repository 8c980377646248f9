use std::path::PathBuf;
use std::process::ExitCode;

use anderson_lab::experiment::{emit_report, run_experiment, ExperimentConfig, ExperimentKind, RunOptions, SCHEMA};
use anderson_lab::Result;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "anderson-lab", version, about = "Numerical experiments on the one-dimensional Anderson model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its report and tables.
    Run { config: PathBuf },
    /// Check a config without running it.
    Validate { config: PathBuf },
    /// Print the config and output schema.
    Schema,
    /// List the available experiments.
    ListExperiments,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run { config } => {
            let options = RunOptions::from_env()?;
            let cfg = ExperimentConfig::load(&config)?;
            let out = run_experiment(&cfg, options.workers)?;
            let files = emit_report(&out, &options)?;
            for c in &out.report.checks {
                println!(
                    "{} {} = {:.6e} {} {:.6e}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.relation,
                    c.tolerance
                );
            }
            println!("report: {}", files.report.display());
            for t in &files.tables {
                println!("table: {}", t.display());
            }
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            cfg.plan()?;
            println!("ok: {} ({})", cfg.experiment.name(), config.display());
            Ok(())
        }
        Command::Schema => {
            print!("{SCHEMA}");
            Ok(())
        }
        Command::ListExperiments => {
            for k in ExperimentKind::ALL {
                println!("{:<13} {}", k.name(), k.summary());
            }
            Ok(())
        }
    }
}
