use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use maxima_bc_cli::{builtin, list_builtins, run_scenario, write_outputs, CliError, ConfigError};
use maxima_bc_cli::{Format, Overrides, ScenarioConfig};

#[derive(Parser)]
#[command(name = "maxima-bc", version, about = "Borel-Cantelli diagnostics for maxima threshold events")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a builtin scenario.
    Run {
        /// Scenario file (TOML).
        #[arg(required_unless_present = "builtin", conflicts_with = "builtin")]
        file: Option<PathBuf>,
        #[arg(long)]
        builtin: Option<String>,
        /// Master seed of the simulation.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        paths: Option<u64>,
        /// Simulation horizon.
        #[arg(long)]
        n_max: Option<u64>,
        /// Output directory; without it the JSON report goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// json, csv or both.
        #[arg(long)]
        format: Option<Format>,
    },
    /// List builtin scenarios.
    List,
}

fn load(file: Option<PathBuf>, name: Option<String>) -> Result<ScenarioConfig, CliError> {
    match (file, name) {
        (_, Some(name)) => Ok(builtin(&name)?),
        (Some(path), None) => {
            let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            ScenarioConfig::from_toml(&text).map_err(|e| {
                CliError::Config(ConfigError::new(
                    format!("{}: {}", path.display(), e.location),
                    e.message,
                ))
            })
        }
        (None, None) => unreachable!("clap requires a file or --builtin"),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::List => {
            for b in list_builtins() {
                println!("{}\t{}\t{}", b.name, b.transform, b.description);
            }
            Ok(())
        }
        Command::Run {
            file,
            builtin,
            seed,
            paths,
            n_max,
            out,
            format,
        } => {
            let mut cfg = load(file, builtin)?;
            Overrides { seed, paths, n_max }.apply(&mut cfg)?;
            let format = format.unwrap_or(cfg.output.format);
            let dir = out.or_else(|| cfg.output.dir.as_ref().map(PathBuf::from));
            if format.csv() && dir.is_none() {
                return Err(ConfigError::new("--format", "csv output needs --out or output.dir").into());
            }
            let report = run_scenario(&cfg)?;
            match dir {
                Some(dir) => {
                    for p in write_outputs(&report, &dir, format)? {
                        eprintln!("wrote {}", p.display());
                    }
                }
                None => print!("{}", report.to_json()),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("maxima-bc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
