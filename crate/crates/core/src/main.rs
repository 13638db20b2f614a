// Copyright 2026 The nessrate Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nessrate::config::{self, RunConfig, Task};
use nessrate::{runner, Error};

/// Steady-state rate matrices for open quantum networks.
#[derive(Parser)]
#[command(name = "nessrate", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML file of dotted keys; NESSRATE_* environment variables override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides output_dir).
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Use the 400-function, 50-quantum spin-boson truncation.
    #[arg(long, global = true)]
    full_scale: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Steady state and component populations.
    Ness,
    /// Rate matrix between partition components.
    Rates,
    /// Population trajectory with its rate-equation split.
    Dynamics,
    /// Trajectory plus Markovianity metrics and a fitted rate matrix.
    Markov,
    /// Rates over a parameter grid.
    Sweep,
    /// Check and print the resolved configuration.
    ValidateConfig,
}

fn resolve(cli: &Cli) -> nessrate::Result<RunConfig> {
    let mut cfg = config::load(cli.config.as_deref(), cli.full_scale)?;
    if let Some(o) = &cli.output {
        cfg.output_dir = o.clone();
    }
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::Config("--threads must be >= 1".into()));
        }
        cfg.threads = Some(t);
    }
    Ok(cfg)
}

fn print_config(cfg: &RunConfig) {
    println!("model = {}", cfg.model.as_str());
    if let Some(t) = cfg.task {
        println!("task = {}", t.as_str());
    }
    println!("output_dir = {}", cfg.output_dir.display());
    println!("rates.route = {}", cfg.route);
    match cfg.model {
        config::Model::VSystem => {
            for (k, v) in cfg.vsystem.entries() {
                println!("vsystem.{k} = {v:e}");
            }
        }
        config::Model::SpinBoson => {
            for (k, v) in cfg.spinboson.entries() {
                if k == "n_basis" {
                    println!("spinboson.{k} = {v}");
                } else {
                    println!("spinboson.{k} = {v:e}");
                }
            }
        }
        config::Model::Custom => {
            if let Some(f) = &cfg.custom_file {
                println!("custom.file = {}", f.display());
            }
        }
    }
    if let Some(sw) = &cfg.sweep {
        for g in std::iter::once(&sw.primary).chain(sw.secondary.as_ref()) {
            println!("sweep {} over {} points", g.key, g.values.len());
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let cfg = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let task = match cli.command {
        Command::ValidateConfig => {
            print_config(&cfg);
            return ExitCode::SUCCESS;
        }
        Command::Ness => Task::Ness,
        Command::Rates => Task::Rates,
        Command::Dynamics => Task::Dynamics,
        Command::Markov => Task::Markov,
        Command::Sweep => Task::Sweep,
    };
    if let Some(t) = cfg.task {
        if t != task {
            log::warn!("config task '{}' ignored; running '{}'", t.as_str(), task.as_str());
        }
    }
    if let Some(n) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match runner::run(&cfg, task) {
        Ok(out) => {
            for f in &out.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
