use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("quantization error in {field}: {detail}")]
    Quantization { field: &'static str, detail: String },
    #[error("training diverged at epoch {epoch} (last finite loss {last_loss})")]
    Divergence {
        epoch: usize,
        last_loss: f64,
        last_state: Box<crate::net::ReluNet1H>,
    },
    #[error("equivalence check failed: max relative deviation {0:e}")]
    Equivalence(f64),
    #[error("usage: {0}")]
    Usage(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
