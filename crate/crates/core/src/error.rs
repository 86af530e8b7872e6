use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("port {port} is outside the interferometer dimension {dim}")]
    DimensionMismatch { port: u16, dim: usize },

    #[error("expansion would produce about {estimate} terms (limit {limit})")]
    Capacity { estimate: u128, limit: u128 },

    #[error("atomic register length {found} does not match {expected}")]
    RegisterMismatch { expected: usize, found: usize },

    #[error("mode {0} is occupied in both operands; supply a port offset")]
    PortCollision(String),

    #[error("{name} = {value} is out of range, expected {expected}")]
    OutOfRange {
        name: &'static str,
        value: String,
        expected: &'static str,
    },

    #[error("matrix {label} is not unitary (residual {residual:e})")]
    NotUnitary { label: String, residual: f64 },

    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn out_of_range(name: &'static str, value: impl ToString, expected: &'static str) -> Error {
    Error::OutOfRange {
        name,
        value: value.to_string(),
        expected,
    }
}

/// Checks that `x` is a probability.
pub(crate) fn check_unit(name: &'static str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(out_of_range(name, x, "[0, 1]"))
    }
}
