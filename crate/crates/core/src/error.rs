use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("value {value} outside domain {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),

    #[error("ball of radius {radius} does not fit the lattice box; pad by at least {padding_cells} cells per side")]
    NotContained { radius: f64, padding_cells: usize },

    #[error("sets overlap in {count} cells")]
    Overlap { count: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("kernel cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
