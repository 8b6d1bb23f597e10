use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in `{operand}`: expected {expected:?}, got {got:?}")]
    Dimension {
        operand: &'static str,
        expected: Vec<usize>,
        got: Vec<usize>,
    },

    #[error("operator `{op}` expects {expected}")]
    Arity { op: &'static str, expected: &'static str },

    #[error("non-finite value in `{0}`")]
    NonFinite(&'static str),

    #[error("inconsistent GPV state: mean residual {mean:.3e}, compatibility residual {compat:.3e}")]
    InconsistentGpv { mean: f64, compat: f64 },

    #[error("invalid primitive state: divergence residual {div:.3e}, boundary residual {bc:.3e}")]
    InvalidPrimitive { div: f64, bc: f64 },

    #[error("time step {dt:.3e} exceeds stability bound {bound:.3e}")]
    UnstableStep { dt: f64, bound: f64 },

    #[error("numerical instability at t = {t:.6}: {reason}")]
    Instability { t: f64, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("snapshot error: {0}")]
    Snapshot(String),

    #[error("checksum mismatch: header {expected:08x}, payload {actual:08x}")]
    Checksum { expected: u32, actual: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Json(_) => 2,
            Error::Instability { .. } | Error::UnstableStep { .. } | Error::NonFinite(_) => 3,
            Error::Io(_) | Error::Snapshot(_) | Error::Checksum { .. } => 4,
            _ => 3,
        }
    }
}
