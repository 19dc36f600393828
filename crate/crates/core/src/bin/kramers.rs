use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kramers_core::harness::{
    parse_config, rates_from_errors, read_errors_csv, run_experiment, write_noise_dumps, write_outputs,
    write_rates_csv, ExperimentConfig, ExperimentKind,
};
use kramers_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "kramers",
    version,
    about = "Small-mass limits of a damped stochastic wave equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Overrides {
    /// Config file (alternative to the positional argument)
    #[arg(long = "config", value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Number of replicas M
    #[arg(long, value_name = "M")]
    replicas: Option<usize>,
    /// Base seed
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads for replicas
    #[arg(long, value_name = "N", default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file
    Run {
        #[arg(value_name = "CONFIG")]
        file: Option<PathBuf>,
        #[command(flatten)]
        opts: Overrides,
    },
    /// Run the closed-form checks
    OracleSuite {
        #[command(flatten)]
        opts: Overrides,
    },
    /// Refit rates from an errors.csv file
    Rates {
        errors: PathBuf,
        /// Also write rates.csv into this directory
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Write the master noise path of every replica
    DumpNoise {
        #[arg(value_name = "CONFIG")]
        file: Option<PathBuf>,
        #[command(flatten)]
        opts: Overrides,
    },
}

fn load(positional: Option<PathBuf>, opts: &Overrides) -> Result<ExperimentConfig> {
    let path = positional
        .or_else(|| opts.config.clone())
        .ok_or_else(|| Error::config("no config file given"))?;
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut config = parse_config(&text).map_err(|e| e.context(path.display().to_string()))?;
    if let Some(m) = opts.replicas {
        config.replicas = m;
    }
    if let Some(s) = opts.seed {
        config.seed = s;
    }
    config.threads = opts.threads;
    config.validate()?;
    Ok(config)
}

fn run(config: &ExperimentConfig, out: &Path) -> Result<ExitCode> {
    let record = run_experiment(config)?;
    write_outputs(&record, out)?;
    for r in &record.rates {
        println!(
            "{:<40} alpha={} slope={:.4} r2={:.4} n={}",
            r.experiment, r.alpha, r.slope, r.r2, r.n_points
        );
    }
    for c in &record.oracle {
        println!(
            "{} {:<40} error={:.3e} tol={:.0e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.error,
            c.tolerance
        );
    }
    for n in &record.notes {
        eprintln!("note: {n}");
    }
    eprintln!("wrote {} ({:.2} s)", out.display(), record.wall_time_s);
    if config.kind == ExperimentKind::OracleSuite && !record.oracle_passed() {
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { file, opts } => run(&load(file, &opts)?, &opts.out),
        Command::OracleSuite { opts } => {
            let config = ExperimentConfig {
                kind: ExperimentKind::OracleSuite,
                threads: opts.threads,
                ..ExperimentConfig::default()
            };
            run(&config, &opts.out)
        }
        Command::Rates { errors, out } => {
            let rows = read_errors_csv(&errors)?;
            let rates = rates_from_errors(&rows)?;
            println!("experiment,alpha,slope,intercept,r2,n_points");
            for r in &rates {
                println!(
                    "{},{:?},{:?},{:?},{:?},{}",
                    r.experiment, r.alpha, r.slope, r.intercept, r.r2, r.n_points
                );
            }
            if let Some(dir) = out {
                fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                write_rates_csv(&dir.join("rates.csv"), &rates)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::DumpNoise { file, opts } => {
            let config = load(file, &opts)?;
            for p in write_noise_dumps(&config, &opts.out)? {
                println!("{}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        super::Cli::command().debug_assert();
    }
}
