use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("singular parameters: {0}")]
    Singular(String),

    #[error("iteration cap of {cap} exceeded")]
    NonTermination { cap: usize },

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),

    #[error("no branch of the implicit step is consistent at step from {0}")]
    ModelInconsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {value}")))
    }
}
