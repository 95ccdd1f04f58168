use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sfs_sim::scenario::{self, Overrides, ScenarioError};

/// Serverless CPU scheduling simulator.
#[derive(Debug, Parser)]
#[command(name = "sfs-sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every configured policy and write results to the output directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        cores: Option<usize>,
        /// Target offered load; rescales inter-arrival times.
        #[arg(long)]
        load: Option<f64>,
        /// Comma-separated labels or policy names (fifo,rr,cfs,srtf,ideal,sfs).
        #[arg(long, value_delimiter = ',')]
        policies: Option<Vec<String>>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Also write per-core execution timelines.
        #[arg(long)]
        timeline: bool,
        /// Print a one-line summary per run.
        #[arg(long)]
        print_summary: bool,
    },
    /// Check a config file and list every problem found.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => {
            let diags = scenario::validate_file(&config);
            if diags.is_empty() {
                println!("{}: ok", config.display());
                ExitCode::SUCCESS
            } else {
                for d in &diags {
                    eprintln!("{}: {d}", config.display());
                }
                ExitCode::from(1)
            }
        }
        Command::Run {
            config,
            seed,
            cores,
            load,
            policies,
            output_dir,
            timeline,
            print_summary,
        } => {
            let o = Overrides {
                seed,
                cores,
                load,
                policies,
                timeline,
                output_dir,
            };
            match run(&config, &o, print_summary) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}

fn run(config: &Path, o: &Overrides, print_summary: bool) -> Result<(), ScenarioError> {
    let mut cfg = scenario::load_config(config)?;
    scenario::apply_overrides(&mut cfg, o).map_err(|e| ScenarioError::Config(vec![e]))?;
    let (outputs, summaries) = scenario::run_scenario(&cfg)?;
    if print_summary {
        println!(
            "{:<12} {:>4} {:>12} {:>12} {:>12} {:>12} {:>10}",
            "policy", "rep", "mean_ms", "p50_ms", "p99_ms", "makespan_s", "switches"
        );
        for (out, s) in outputs.iter().zip(&summaries) {
            println!(
                "{:<12} {:>4} {:>12.1} {:>12.1} {:>12.1} {:>12.2} {:>10}",
                out.label,
                out.rep,
                s.mean_turnaround_us / 1e3,
                s.turnaround_percentiles.p50 as f64 / 1e3,
                s.turnaround_percentiles.p99 as f64 / 1e3,
                s.makespan_us as f64 / 1e6,
                s.context_switches_total
            );
        }
    }
    eprintln!("results written to {}", cfg.output_dir.display());
    Ok(())
}
