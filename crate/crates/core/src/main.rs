use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use gplab::experiment::{self, ExperimentConfig};

#[derive(Parser)]
#[command(name = "gplab", version, about = "Gaussian process emulators of a Bayesian inverse problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emulator error and predictive spread on a probe grid.
    Emulate(Common),
    /// Squared Hellinger errors of the approximate posteriors.
    Hellinger(Common),
    /// Hellinger errors, rate fits, curves and plot data.
    Experiment(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
}

impl Common {
    fn resolve(&self) -> gplab::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn run(cli: Cli) -> gplab::Result<bool> {
    match cli.command {
        Command::Emulate(c) => {
            let cfg = c.resolve()?;
            let (rows, failures) = experiment::run_emulate(&cfg, c.jobs)?;
            let path = experiment::write_emulate_outputs(&cfg, &rows, &failures, &cfg.output_dir)?;
            println!("{}", path.display());
            Ok(failures.is_empty())
        }
        Command::Hellinger(c) => {
            let cfg = c.resolve()?;
            let report = experiment::run_hellinger_study(&cfg, c.jobs)?;
            for p in experiment::write_hellinger_outputs(&report, &cfg.output_dir)? {
                println!("{}", p.display());
            }
            Ok(report.failures.is_empty())
        }
        Command::Experiment(c) => {
            let cfg = c.resolve()?;
            let report = experiment::run_convergence_study(&cfg, c.jobs)?;
            experiment::write_study_outputs(&report, &cfg.output_dir)?;
            print!("{}", experiment::output::format_summary(&report));
            Ok(report.failures.is_empty())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
