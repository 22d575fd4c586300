use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] elastic_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Usage(String),
    #[error("{context}: {source}")]
    Context {
        context: String,
        source: Box<BenchError>,
    },
}

pub type Result<T> = std::result::Result<T, BenchError>;

impl BenchError {
    pub fn context(self, context: impl Into<String>) -> Self {
        BenchError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// `1` usage, `2` data, `3` numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Usage(_) => 1,
            BenchError::Core(elastic_core::Error::InvalidParameter(_)) => 1,
            BenchError::Core(elastic_core::Error::Diverged { .. }) => 3,
            BenchError::Context { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}

pub trait ResultExt<T> {
    fn context(self, context: impl FnOnce() -> String) -> Result<T>;
}

impl<T, E: Into<BenchError>> ResultExt<T> for std::result::Result<T, E> {
    fn context(self, context: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|e| e.into().context(context()))
    }
}
