//! Command-line front end: closed-loop experiment runs and optimizer timing.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use quadsbs::sim_harness::{bench_control_steps, run_batch, ControllerConfig};
use quadsbs::{Config, Error, OptimizerVariant};

#[derive(Parser)]
#[command(
    name = "quadsbs",
    about = "Sampling-based predictive control for quadruped locomotion: \
             closed-loop episodes, disturbance benchmarks, and solver timing"
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Run seeded closed-loop episodes and write CSV/JSONL results.
    Run {
        /// TOML configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Override the optimizer variant.
        #[arg(long, value_parser = ["naive", "mppi"])]
        variant: Option<String>,
        /// Enable or disable in-loop gait frequency adaptation.
        #[arg(long, value_parser = ["on", "off"], value_name = "on|off")]
        gait_adapt: Option<String>,
        /// Override the episode count.
        #[arg(long)]
        episodes: Option<usize>,
        /// Override the base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Time full control steps (sample, rollout, sort, update) in isolation.
    Bench {
        /// TOML configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Rollouts per control step.
        #[arg(long)]
        rollouts: usize,
        /// Directory for the timing distribution files.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

/// Failures to read or parse the configuration are config errors for exit
/// code purposes, even when the underlying cause is I/O.
fn load_config(path: &std::path::Path) -> Result<Config, Error> {
    Config::load(path).map_err(|e| match e {
        Error::Io { .. } => Error::Config(e.to_string()),
        other => other,
    })
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        CliCommand::Run {
            config,
            variant,
            gait_adapt,
            episodes,
            seed,
            out,
        } => {
            let mut cfg = load_config(&config)?;
            if let Some(v) = variant {
                cfg.optimizer.variant = match v.as_str() {
                    "mppi" => OptimizerVariant::Mppi,
                    _ => OptimizerVariant::Naive,
                };
            }
            if let Some(e) = episodes {
                cfg.scenario.episodes = e;
            }
            if let Some(s) = seed {
                cfg.scenario.seed = s;
            }
            if let Some(g) = gait_adapt {
                cfg = cfg.with_gait_adaptation(g == "on");
            }
            cfg.validate()?;

            let model = cfg.robot.build()?;
            let ctrl = ControllerConfig::from_config(&cfg)?;
            let adaptive = cfg.gait.freq_options.len() > 1;
            let name = format!(
                "{}{}",
                cfg.optimizer.variant,
                if adaptive { " w/ gait adaptation" } else { "" }
            );

            let batch = run_batch(&cfg.scenario, &[(name, ctrl)], &model)?;
            quadsbs::sim_harness::emit_results(&batch, &cfg.to_toml(), &out)?;

            print!("{}", batch.to_csv());
            for row in &batch.rows {
                println!(
                    "{}: mean cost {:.4}, success rate {:.0}%, mean solve {:.2} ms",
                    row.name, row.mean_cost, row.success_rate, row.mean_solve_ms
                );
            }
            println!("results written to {}", out.display());
            Ok(())
        }
        CliCommand::Bench {
            config,
            rollouts,
            out,
        } => {
            let cfg = load_config(&config)?;
            let times = bench_control_steps(&cfg, rollouts, 50)?;
            let mut sorted = times.clone();
            sorted.sort_by(f64::total_cmp);
            let quantile = |q: f64| sorted[((sorted.len() - 1) as f64 * q).round() as usize];

            println!(
                "control step timing over {} steps, K={}, N={}, {} worker threads:",
                times.len(),
                rollouts,
                cfg.optimizer.horizon,
                rayon::current_num_threads()
            );
            println!(
                "  min {:.3} ms | q1 {:.3} ms | median {:.3} ms | q3 {:.3} ms | max {:.3} ms",
                quantile(0.0),
                quantile(0.25),
                quantile(0.5),
                quantile(0.75),
                quantile(1.0)
            );

            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let mut csv = String::from("step,solve_ms\n");
            for (i, t) in times.iter().enumerate() {
                csv.push_str(&format!("{i},{t}\n"));
            }
            let path = out.join("bench_timings.csv");
            std::fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
            println!("timing distribution written to {}", path.display());
            Ok(())
        }
    }
}
