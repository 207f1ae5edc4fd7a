//! Output side: result tables, map frames, the run config file and the
//! command-line front end.

pub mod cli;
pub mod config;
pub mod csv;
pub mod frame;

use std::path::Path;

use thiserror::Error;

pub use config::{ConfigError, RunConfig};
pub use csv::write_batch_csv;
pub use frame::{render_frame, Snapshot};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Read(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("snapshot is {}x{} but the world is {}x{}", found.0, found.1, expected.0, expected.1)]
    Dimensions { expected: (u32, u32), found: (u32, u32) },
}

impl ReportError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        ReportError::Io { path: path.display().to_string(), source }
    }
}
