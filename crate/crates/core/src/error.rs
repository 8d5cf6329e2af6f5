use thiserror::Error;

/// Error type shared by all layers of the crate.
#[derive(Debug, Error)]
pub enum MsError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("field is not divergence-free (relative residual {residual:.3e})")]
    NotSolenoidal { residual: f64 },

    #[error("blow-up signaled at t = {t}")]
    BlowUp { t: f64 },

    #[error("config error: {0}")]
    Config(String),

    /// Range validation reports every offending key, not just the first.
    #[error("config range violations: {}", .0.join("; "))]
    ConfigRanges(Vec<String>),

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error("picard sampling mismatch: {0}")]
    Sampling(String),

    #[error("invalid series: {0}")]
    Series(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
