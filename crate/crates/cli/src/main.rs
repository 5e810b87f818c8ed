use std::path::PathBuf;
use std::process::ExitCode;

use chaosbayes_cli::{CliError, Experiment, ExperimentConfig, RawConfig, OUT_ENV};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "chaosbayes",
    version,
    about = "Bayesian inference on chaotic attractors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a system and write its trajectory
    Simulate(RunArgs),
    /// Extract the Poincaré section and its statistics
    Section(RunArgs),
    /// Fibonacci-window burst profile, summary vector and correlation integral
    Bursts(RunArgs),
    /// Fixed-window volatility and standardized-return baselines
    Baseline(RunArgs),
    /// Model A (Poincaré–Mahalanobis) chain on one system
    FitA(RunArgs),
    /// Model B (burst ABC) chain on one system
    FitB(RunArgs),
    /// Lorenz–Lorenz experiment: both models on the Lorenz attractor
    ExpLl(RunArgs),
    /// Lorenz–Rössler experiment: Model A on Lorenz, Model B on Rössler
    ExpLr(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Key-value configuration file (a previous run's manifest works too)
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Chain seed
    #[arg(long)]
    seed: Option<u64>,
    /// Chain length
    #[arg(long)]
    iterations: Option<usize>,
    /// Output directory (falls back to $CHAOSBAYES_OUT, then the config)
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Observed trajectory CSV (`t,x,y,z`) instead of simulating one
    #[arg(long)]
    input: Option<PathBuf>,
    /// System for the single-system subcommands
    #[arg(long)]
    system: Option<String>,
    /// Extra `key=value` overrides, applied after the config file
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Command {
    fn split(self) -> (Experiment, RunArgs) {
        match self {
            Command::Simulate(a) => (Experiment::Simulate, a),
            Command::Section(a) => (Experiment::Section, a),
            Command::Bursts(a) => (Experiment::Bursts, a),
            Command::Baseline(a) => (Experiment::Baseline, a),
            Command::FitA(a) => (Experiment::FitA, a),
            Command::FitB(a) => (Experiment::FitB, a),
            Command::ExpLl(a) => (Experiment::LorenzLorenz, a),
            Command::ExpLr(a) => (Experiment::LorenzRossler, a),
        }
    }
}

fn resolve(args: RunArgs) -> Result<ExperimentConfig, CliError> {
    let mut raw = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            RawConfig::parse(&text)?
        }
        None => RawConfig::default(),
    };
    for pair in &args.overrides {
        raw.set_pair(pair)?;
    }
    if let Some(system) = args.system {
        raw.set("system", system);
    }
    if let Some(seed) = args.seed {
        raw.set("seed", seed.to_string());
    }
    if let Some(n) = args.iterations {
        raw.set("iterations", n.to_string());
    }
    if let Some(input) = args.input {
        raw.set("input", input.display().to_string());
    }
    match (args.out, std::env::var_os(OUT_ENV)) {
        (Some(out), _) => raw.set("out", out.display().to_string()),
        (None, Some(env)) if !env.is_empty() => raw.set("out", env.to_string_lossy()),
        _ => {}
    }
    ExperimentConfig::resolve(&raw)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let (experiment, args) = cli.command.split();
    let outcome = resolve(args).and_then(|cfg| chaosbayes_cli::run(experiment, &cfg));
    match outcome {
        Ok(report) => {
            println!(
                "{experiment}: wrote {} artifacts to {}",
                report.artifacts.len(),
                report.out.display()
            );
            for (k, v) in &report.summary {
                println!("  {k} = {v}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
