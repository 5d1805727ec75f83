use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates an operation precondition.
    #[error("invalid input: {0}")]
    Input(String),

    /// Unsupported or inconsistent configuration (charts, grids, models).
    #[error("configuration error: {0}")]
    Config(String),

    /// Metal bodies overlap, touch, or are closer than the grid tolerates.
    #[error("assumption (A) violated: {0}")]
    Geometry(String),

    /// A numerical self-check or solver failed.
    #[error("numerical validation failed: {0}")]
    Numerical(String),

    /// Malformed persisted sinogram or image file.
    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) | Error::Config(_) | Error::Geometry(_) => 2,
            Error::Numerical(_) => 3,
            Error::Format(_) | Error::Io(_) => 4,
        }
    }
}
