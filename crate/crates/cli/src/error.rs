use thiserror::Error;

/// Command failures; all map to the input-error exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: cannot read file: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        reason: String,
    },
    #[error("{path}: {reason}")]
    Invalid { path: String, reason: String },
    #[error("{0}")]
    Shape(String),
    #[error("scheme documents belong to different scenarios ({a} vs {b})")]
    ScenarioMismatch { a: String, b: String },
    #[error("{0}")]
    Model(#[from] hop_core::ModelError),
    #[error("solver failed: {0}")]
    Solver(#[from] hop_core::relax::OaError),
}
