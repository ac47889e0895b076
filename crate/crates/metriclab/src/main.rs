use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use metriclab::config::parse_config_for;
use metriclab::{emit_report, list_experiments, list_table, run_experiment_with, Cache, Experiment};

#[derive(Parser)]
#[command(name = "metriclab", version, about = "Reproducible experiments on invariant metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write report.json and samples.csv.
    Run {
        experiment: Experiment,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides both the grid and the fan seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "degree-cap")]
        degree_cap: Option<u32>,
    },
    /// List the registered experiments.
    List {
        #[arg(long)]
        json: bool,
    },
    /// Manage the kernel-series cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Subcommand)]
enum CacheAction {
    /// Delete every cached series.
    Clear,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List { json } => {
            if json {
                println!("{}", serde_json::to_string_pretty(&list_experiments()).expect("static entries serialize"));
            } else {
                print!("{}", list_table());
            }
            ExitCode::SUCCESS
        }
        Command::Cache { action: CacheAction::Clear } => {
            let cache = Cache::from_env();
            match cache.clear() {
                Ok(n) => {
                    match cache.dir() {
                        Some(d) => println!("removed {n} cached series from {}", d.display()),
                        None => println!("no cache directory configured"),
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: cannot clear cache: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Run { experiment, config, out, seed, degree_cap } => {
            let mut cfg = match parse_config_for(&config, Some(experiment)) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            if let Some(s) = seed {
                cfg.grid.seed = s;
                cfg.fan.seed = s;
            }
            if let Some(d) = degree_cap {
                cfg.degree_cap = d;
            }
            if let Some(dir) = out {
                cfg.output_dir = dir;
            }
            if let Err(e) = cfg.validate() {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            let report = match run_experiment_with(&cfg, &Cache::from_env()) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(3);
                }
            };
            if let Err(e) = emit_report(&report, &cfg.output_dir) {
                eprintln!("error: cannot write report to {}: {e}", cfg.output_dir.display());
                return ExitCode::from(2);
            }
            for v in &report.verdicts {
                eprintln!("{:<13} {} (observed {:e}, tolerance {:e})", format!("{:?}", v.status), v.assertion, v.observed, v.tolerance);
            }
            eprintln!(
                "{} rows in {:.2}s -> {}",
                report.samples.rows.len(),
                report.wall_clock.as_secs_f64(),
                cfg.output_dir.display()
            );
            let code = report.exit_code();
            if code == 3 {
                eprintln!("numerical failure: every row errored");
            } else if code == 1 {
                let failed: Vec<&str> = report.failed().iter().map(|v| v.assertion.as_str()).collect();
                eprintln!("failed assertions: {}", failed.join(", "));
            }
            ExitCode::from(code as u8)
        }
    }
}
