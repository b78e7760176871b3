use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ssb_squeezing_cli::config::read_config_file;
use ssb_squeezing_cli::{
    compare, read_table, run_to_file, CliError, ColumnCheck, Experiment, ExperimentConfig,
};

/// Experiments on noncritical squeezing from spontaneous symmetry breaking.
#[derive(Debug, Parser)]
#[command(name = "ssbsq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write its CSV.
    Run {
        /// Experiment id (see `ssbsq list`).
        experiment: String,
        /// Parameter overrides, `key=value`.
        overrides: Vec<String>,
        /// Seed for the trajectory noise.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output CSV path [default: $SSBSQ_OUT_DIR/<experiment>.csv].
        #[arg(long)]
        out: Option<PathBuf>,
        /// File of `key=value` lines applied before the command-line overrides.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Compare columns of two CSV files.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// `col=tol` or `a_col:b_col=tol`; repeatable.
        #[arg(long = "tol")]
        tol: Vec<String>,
        /// Tolerance for every shared column when no `--tol` is given.
        #[arg(long, default_value_t = 0.0)]
        default_tol: f64,
    },
    /// List experiments and their default parameters.
    List,
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Run {
            experiment,
            overrides,
            seed,
            out,
            config,
        } => {
            let experiment = Experiment::parse(&experiment)?;
            let file_pairs = match config {
                Some(path) => read_config_file(&path)?,
                None => Vec::new(),
            };
            let cfg = ExperimentConfig::resolve(experiment, &file_pairs, &overrides, seed, out)?;
            run_to_file(&cfg)?;
            eprintln!("wrote {}", cfg.out.display());
            Ok(true)
        }
        Command::Compare {
            a,
            b,
            tol,
            default_tol,
        } => {
            let checks = tol
                .iter()
                .map(|s| ColumnCheck::parse(s))
                .collect::<Result<Vec<_>, _>>()?;
            let report = compare(&read_table(&a)?, &read_table(&b)?, &checks, default_tol)?;
            print!("{}", report.render());
            Ok(report.passed())
        }
        Command::List => {
            for e in Experiment::ALL {
                println!("{e}: {}", e.summary());
                for (k, v) in e.defaults() {
                    println!("    {k} = {v}");
                }
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("ssbsq: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
