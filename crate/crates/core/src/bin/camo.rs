use std::path::PathBuf;
use std::process::ExitCode;

use camo::env::PRESETS;
use camo::harness::{certify, describe, run_experiment, CertifyOptions, ExperimentConfig, RunOptions};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "camo", version, about = "Camouflage and state-perception attacks on multi-agent MDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a TOML config or a preset name.
    Run {
        /// Path to a TOML config, or one of the preset names.
        config: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Monte Carlo episodes per mode (0 disables rollouts).
        #[arg(long)]
        episodes: Option<u64>,
    },
    /// Check the planners against brute-force oracles on random instances.
    Certify {
        /// Optional config supplying `seed` and `out_dir`.
        config: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 50)]
        oracle_cases: usize,
    },
    /// List the built-in presets.
    Presets,
}

fn load(config: &str) -> camo::Result<ExperimentConfig> {
    if PRESETS.contains(&config) {
        Ok(ExperimentConfig::from_preset(config))
    } else {
        ExperimentConfig::load(config.as_ref())
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(command: Command) -> camo::Result<bool> {
    match command {
        Command::Run { config, out, seed, episodes } => {
            let cfg = load(&config)?;
            let report = run_experiment(&cfg, &RunOptions { out_dir: out, seed, episodes })?;
            print!("{}", describe(&report));
            println!("wrote {}", report.out_dir.display());
            Ok(report.passed())
        }
        Command::Certify { config, out, seed, cases, oracle_cases } => {
            let cfg = config.as_deref().map(load).transpose()?;
            let run_opts = RunOptions { out_dir: out, ..RunOptions::default() };
            let out_dir = match &cfg {
                Some(cfg) => camo::harness::output_dir(cfg, &run_opts),
                None => camo::harness::output_dir(&ExperimentConfig::from_preset("ring-v1"), &run_opts),
            };
            let opts = CertifyOptions {
                seed: seed.or(cfg.as_ref().map(|c| c.seed)).unwrap_or(0),
                cases,
                oracle_cases,
                out_dir: Some(out_dir.clone()),
                ..CertifyOptions::default()
            };
            let report = certify(&opts)?;
            for s in &report.suites {
                println!(
                    "[{}] {:<28} {:>4} cases, {} failures, max error {:.3e}{}",
                    if s.passed() { "ok" } else { "FAIL" },
                    s.suite,
                    s.cases,
                    s.failures,
                    s.max_error,
                    s.first_failure.as_deref().map(|f| format!(" ({f})")).unwrap_or_default()
                );
            }
            println!("wrote {}", out_dir.join("certify.csv").display());
            Ok(report.passed())
        }
        Command::Presets => {
            for p in PRESETS {
                println!("{p}");
            }
            Ok(true)
        }
    }
}
