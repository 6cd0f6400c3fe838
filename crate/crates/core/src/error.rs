use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An index or size parameter lies outside the supported range.
    #[error("{what} = {value} is out of range ({limit})")]
    Range {
        what: &'static str,
        value: f64,
        limit: String,
    },

    /// A physical parameter lies outside its mathematical domain.
    #[error("{what} = {value} is outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// No segment mean is statistically distinguishable from zero, so the
    /// data carry no phase reference.
    #[error(
        "phase-unresolvable state: no segment mean exceeds 3 standard errors \
         (largest |mean|/stderr = {max_significance:.2}); supply scan phases instead"
    )]
    PhaseUnresolvable { max_significance: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn range(what: &'static str, value: impl Into<f64>, limit: impl Into<String>) -> Error {
    Error::Range {
        what,
        value: value.into(),
        limit: limit.into(),
    }
}
