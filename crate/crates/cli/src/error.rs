use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{origin}: {msg}")]
    Config { origin: String, msg: String },
    #[error("invalid `{key}`: {msg}")]
    Invalid { key: String, msg: String },
    #[error(transparent)]
    Core(#[from] lazydual::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{failed} of {total} runs failed; partial traces were written")]
    RunsFailed { failed: usize, total: usize },
}

pub type Result<T> = std::result::Result<T, CliError>;
