//! `skyrc`: batch runner for reservoir tasks and probes.

mod config;
mod tasks;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ConfigError, Overrides, RunConfig, PROBES};

#[derive(Parser)]
#[command(name = "skyrc", version, about = "Skyrmion-texture reservoir computing workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the task named in the config.
    Run(Common),
    /// Run one characterisation probe.
    Probe {
        /// memory, nonlinearity, fading, dimensionality or drift
        name: String,
        #[command(flatten)]
        common: Common,
    },
    /// Check a config and list the defaults it relies on.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Backend preset replacing the config's backend section.
    #[arg(long)]
    backend: Option<String>,
}

impl Common {
    fn load(&self) -> Result<RunConfig, Vec<ConfigError>> {
        let overrides = Overrides {
            seed: self.seed,
            out: self.out.clone(),
            workers: self.workers,
            backend: self.backend.clone(),
        };
        config::load(&self.config, &overrides)
    }
}

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn load_or_report(common: &Common) -> Result<RunConfig, ExitCode> {
    common.load().map_err(|errs| {
        for e in &errs {
            eprintln!("config error: {e}");
        }
        eprintln!("{} error(s)", errs.len());
        ExitCode::from(EXIT_CONFIG)
    })
}

fn runtime(result: skyrc::Result<()>) -> ExitCode {
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {e}", tasks::module_of(&e));
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(common) => match load_or_report(&common) {
            Ok(cfg) => runtime(tasks::run(&cfg)),
            Err(code) => code,
        },
        Command::Probe { name, common } => {
            if !PROBES.contains(&name.as_str()) {
                eprintln!("config error: unknown probe `{name}` (expected one of {})", PROBES.join(", "));
                return ExitCode::from(EXIT_CONFIG);
            }
            match load_or_report(&common) {
                Ok(cfg) => runtime(tasks::probe(&cfg, &name)),
                Err(code) => code,
            }
        }
        Command::Validate(common) => match load_or_report(&common) {
            Ok(cfg) => {
                println!("0 errors");
                println!("task: {:?}, backend: {}, {} subsection(s)", cfg.task, cfg.backend_label, cfg.subsections.len());
                if !cfg.decisions.is_empty() {
                    println!("defaults in effect:");
                    for d in &cfg.decisions {
                        println!("  - {d}");
                    }
                }
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
    }
}
