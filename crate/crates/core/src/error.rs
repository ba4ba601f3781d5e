use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid user-supplied values (bad K, mismatched widths, empty sets...)
    #[error("invalid input: {0}")]
    Input(String),

    /// A periodic structure with a singular cell
    #[error("invalid cell: {0}")]
    Cell(String),

    /// Coincident atoms or neighbors
    #[error("degenerate geometry in structure {structure}, atom {atom}: {message}")]
    DegenerateGeometry {
        structure: usize,
        atom: usize,
        message: String,
    },

    /// Malformed extended-XYZ input
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A structure is missing per-atom forces
    #[error("structure {structure} has no forces")]
    MissingForces { structure: usize },

    #[error("invalid descriptor cache {path}: {message}")]
    Cache { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn input(message: impl Into<String>) -> Self {
        Error::Input(message.into())
    }

    /// Attach a structure index to a geometry error raised without one.
    pub(crate) fn in_structure(self, index: usize) -> Self {
        match self {
            Error::DegenerateGeometry { atom, message, .. } => Error::DegenerateGeometry {
                structure: index,
                atom,
                message,
            },
            Error::Cell(message) => Error::Cell(format!("structure {index}: {message}")),
            Error::Input(message) => Error::Input(format!("structure {index}: {message}")),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
