use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("geometry: {0}")]
    Geometry(String),

    /// A sample or step arrived with a timestamp not after the previous one.
    #[error("stream order violated: t={t} after t={prev}")]
    StreamOrder { prev: f64, t: f64 },

    #[error("smoothing window is empty")]
    EmptyWindow,

    #[error("smoothing window directions cancel out")]
    DegenerateWindow,

    #[error("word {word:?} ({len} chars) does not fit in a {width}-char line")]
    WordTooLong { word: String, len: usize, width: usize },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("trace generation failed: {0}")]
    Generation(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
