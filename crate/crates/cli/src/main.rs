use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bosetunnel_cli::config::RunConfig;
use bosetunnel_cli::output::{write_run, ManifestInfo};
use bosetunnel_cli::run::{execute, Command};
use bosetunnel_cli::sweep::{parse_values, sweep, SweepParam};
use bosetunnel_cli::CliError;

#[derive(Parser, Debug)]
#[command(version, about = "Bosons tunnelling over a threshold: runs, sweeps and model tables")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Debug)]
struct Common {
    /// Flat `key = value` configuration file; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Trapped ground state and its energy.
    Relax(Common),
    /// Quench into the threshold potential and record snapshots.
    Propagate(Common),
    /// Energetics, crossings and final-state prediction.
    Model(Common),
    /// Propagate, then write momentum-space correlation matrices.
    Analyze(Common),
    /// One isolated run per value of a parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `threshold` or `lambda0`.
        #[arg(long)]
        param: String,
        /// Comma separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        /// Command run for every value.
        #[arg(long, default_value = "propagate")]
        command: String,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let mut config = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &common.out {
        config.output_dir = out.clone();
    }
    Ok(config)
}

fn single(command: Command, common: &Common) -> Result<(), CliError> {
    let config = load(common)?;
    let run = execute(command, &config)?;
    let info = ManifestInfo {
        command: command.as_str(),
        config: &config,
        hash: &run.hash,
        wall_seconds: run.wall_seconds,
    };
    let manifest = write_run(&config.output_dir, &info, &run.artifacts)?;
    println!("{}", manifest.display());
    for (k, v) in &run.artifacts.results {
        println!("{k} = {v}");
    }
    Ok(())
}

fn parse_command(name: &str) -> Result<Command, CliError> {
    match name {
        "relax" => Ok(Command::Relax),
        "propagate" => Ok(Command::Propagate),
        "model" => Ok(Command::Model),
        "analyze" => Ok(Command::Analyze),
        _ => Err(bosetunnel::Error::Config(format!("sweep command must be relax, propagate, model or analyze, got `{name}`")).into()),
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Cmd::Relax(c) => single(Command::Relax, &c),
        Cmd::Propagate(c) => single(Command::Propagate, &c),
        Cmd::Model(c) => single(Command::Model, &c),
        Cmd::Analyze(c) => single(Command::Analyze, &c),
        Cmd::Sweep {
            common,
            param,
            values,
            command,
            workers,
        } => {
            let config = load(&common)?;
            let param = SweepParam::parse(&param)?;
            let values = parse_values(&values)?;
            let command = parse_command(&command)?;
            let outcomes = sweep(&config, command, param, &values, workers, &config.output_dir)?;
            for o in &outcomes {
                match &o.result {
                    Ok(_) => println!("{}={} ok", param.as_str(), o.value),
                    Err(e) => println!("{}={} failed: {e}", param.as_str(), o.value),
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
