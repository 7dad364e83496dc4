use thiserror::Error;

/// Errors raised by the facet-process engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension {0} (supported: 2..={max})", max = crate::geometry::MAX_DIM)]
    Dimension(usize),

    #[error("invalid facet: {0}")]
    InvalidFacet(String),

    #[error("unsupported orientation: {0}")]
    UnsupportedOrientation(String),

    #[error("duplicate facet in pattern")]
    DuplicateFacet,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("density not integrable: nu_{order} = {value} > 0 (orders >= 2 must be <= 0)")]
    NonIntegrable { order: usize, value: f64 },

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
