use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use speclab::harness::{list_scenarios, run, ExperimentConfig};

#[derive(Parser)]
#[command(name = "speclab", version, about = "Spectral multiplier experiments on finite metric measure spaces")]
struct Cli {
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (parallel builds only).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Runs every experiment in a config file.
    Run { config: PathBuf },
    /// Prints the scenario catalog.
    ListScenarios,
    /// Parses and checks a config file without computing anything.
    Validate { config: PathBuf },
}

fn load(cli: &Cli, path: &Path) -> anyhow::Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output = out.clone();
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match real_main(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main(cli: &Cli) -> anyhow::Result<ExitCode> {
    if let Some(k) = cli.threads {
        anyhow::ensure!(k > 0, "--threads must be positive");
        speclab::par::set_threads(k)?;
    }
    match &cli.command {
        Command::ListScenarios => {
            for s in list_scenarios() {
                println!("{}: {} (resolution: {})", s.name, s.summary, s.resolution);
                for (name, doc) in &s.parameters {
                    println!("    {name}: {doc}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { config } => {
            let c = load(cli, config)?;
            println!(
                "{}: ok ({} experiments, resolutions {:?}, scenario {})",
                config.display(),
                c.experiments.len(),
                c.resolutions,
                c.scenario.name()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { config } => {
            let c = load(cli, config)?;
            let report = run(&c).with_context(|| format!("running {}", config.display()))?;
            for v in &report.verdicts {
                println!("[{} {}] {} (rows {:?} of {})", v.experiment, v.kind, v.statement, v.rows, v.csv.display());
            }
            for f in &report.failures {
                println!(
                    "[{} {}] FAILED at resolution {:?}: {}",
                    f.experiment, f.kind, f.resolution, f.message
                );
            }
            println!(
                "wrote {} in {:.2} s",
                c.output.join("report.json").display(),
                report.wall_clock_seconds
            );
            Ok(if report.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}
