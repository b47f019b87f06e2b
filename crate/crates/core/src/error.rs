use thiserror::Error;

/// Errors raised by the spectral toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("Hermitian symmetry violated: imaginary residue {residue:.3e} exceeds tolerance")]
    SymmetryViolation { residue: f64 },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("dense quantization of {requested} modes exceeds the guard of {limit}")]
    MemoryGuard { requested: usize, limit: usize },

    #[error("reality condition violated for symbol `{0}`")]
    Reality(String),

    #[error("seminorm multi-index exceeds cap {cap}")]
    SeminormCap { cap: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("overflow guard: {0}")]
    OverflowGuard(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("snapshot format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
