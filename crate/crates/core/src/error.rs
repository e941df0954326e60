use thiserror::Error;

/// Every failure the toolkit can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("corpus error: {0}")]
    Corpus(String),
    #[error("preprocessing error: {0}")]
    Preprocess(String),
    #[error("shape error: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("training error: {0}")]
    Training(String),
    #[error("label error: {0}")]
    Label(String),
    #[error("split error: {0}")]
    Split(String),
    #[error("scaling error: {0}")]
    Scaling(String),
    #[error("diagnosis error: {0}")]
    Diagnosis(String),
    #[error("evaluation error: {0}")]
    Evaluation(String),
    #[error("unsupported schema version {found} (this build reads up to {supported})")]
    Version { found: u32, supported: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn shape(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Shape { expected, got })
    }
}
