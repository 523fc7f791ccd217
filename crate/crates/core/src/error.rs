use std::path::PathBuf;

/// Crate-level error for I/O, parsing and configuration paths.
///
/// Pure algorithm modules (geometry, assignment, eval) do not error; the
/// fusion contract violations have their own [`crate::fusion::FusionError`].
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A malformed record in a trace file. Line numbers are 1-based and
    /// count the header line.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Frame indices in a trace must be strictly increasing.
    #[error("line {line}: frame_index {found} not greater than previous {prev}")]
    Ordering { line: usize, prev: u64, found: u64 },

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
