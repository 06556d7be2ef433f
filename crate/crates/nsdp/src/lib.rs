#![allow(clippy::needless_range_loop)]

//! File formats and IO around [`nsdp_core`].

pub mod instance;
pub mod output;
pub mod point;

use std::path::Path;

use nsdp_core::ProblemInstance;

pub use instance::{parse_instance, serialize_instance};
pub use output::{report_json, trace_lines, write_trace};
pub use point::{parse_point, parse_point_lines, PointFile};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid JSON: {0}")]
    Syntax(String),
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error(transparent)]
    Core(#[from] nsdp_core::Error),
}

/// Prefix selecting a built-in corpus instance instead of a file.
pub const CORPUS_SCHEME: &str = "corpus:";

pub fn read_text(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Loads `corpus:NAME` or an instance document from disk.
pub fn load_instance(source: &str) -> Result<ProblemInstance, FormatError> {
    if let Some(name) = source.strip_prefix(CORPUS_SCHEME) {
        return Ok(nsdp_core::corpus_instance(name)?);
    }
    let path = Path::new(source);
    parse_instance(&read_text(path)?).map_err(|e| match e {
        FormatError::Io { .. } => e,
        other => FormatError::Schema {
            path: path.display().to_string(),
            message: other.to_string(),
        },
    })
}
