//! Config-driven experiment runner behind the `ssbsq` binary: resolves a
//! flat `key=value` configuration, runs one experiment and writes a
//! plot-ready CSV whose header carries the full resolved configuration.

pub mod compare;
pub mod config;
pub mod experiments;

use std::path::Path;

use ssb_squeezing::csv::Table;

pub use compare::{compare, ColumnCheck, CompareReport};
pub use config::{Experiment, ExperimentConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error(transparent)]
    Model(#[from] ssb_squeezing::Error),
}

impl CliError {
    /// Process exit code: 2 for anything the user can fix in the input,
    /// 3 for a numerical failure of the model.
    pub fn exit_code(&self) -> u8 {
        use ssb_squeezing::Error as E;
        match self {
            CliError::Config(_) | CliError::Shape(_) | CliError::Io { .. } => 2,
            CliError::Model(
                E::InvalidParameter(_) | E::Domain(_) | E::UnderResolved(_) | E::Truncation(_),
            ) => 2,
            CliError::Model(_) => 3,
        }
    }
}

/// Runs the experiment and writes its CSV to `cfg.out`.
pub fn run_to_file(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let table = experiments::run(cfg)?;
    write_table(&cfg.out, &table)?;
    Ok(table)
}

pub fn write_table(path: &Path, table: &Table) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.display().to_string(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, table.render()).map_err(io)
}

pub fn read_table(path: &Path) -> Result<Table, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Table::parse(&text).map_err(|e| CliError::Shape(format!("{}: {e}", path.display())))
}
