use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier '{name}' at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },

    #[error("non-finite value at z = {z}")]
    NonFinite { z: Complex64 },

    #[error("expression vanishes identically near {z0}")]
    IdenticallyZero { z0: Complex64 },

    #[error("indeterminate order at {z0}: estimate {estimate:.4}, residual {residual:.2e}")]
    IndeterminateOrder {
        z0: Complex64,
        estimate: f64,
        residual: f64,
    },

    #[error("integration path crosses a masked cell near {z}")]
    PathMasked { z: Complex64 },

    #[error("loop coefficient at power {power} (norm {norm:.3e}) exceeds the truncation window ±{max_degree}")]
    WindowOverflow {
        power: i32,
        norm: f64,
        max_degree: i32,
    },

    #[error("matrix is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("Gram matrix is not positive definite at truncation {truncation}")]
    NotPositiveDefinite { truncation: usize },

    #[error("factorization residual {residual:.3e} exceeds {tolerance:.1e}")]
    FactorResidual { residual: f64, tolerance: f64 },

    #[error("loop lies outside the big cell (condition number {condition:.3e})")]
    OutsideBigCell { condition: f64 },

    #[error("series tail bound {bound:.3e} exceeds tolerance {tolerance:.1e}")]
    TailBound { bound: f64, tolerance: f64 },

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Syntax { .. }
            | Error::UnknownIdentifier { .. }
            | Error::Config(_)
            | Error::InvalidData(_)
            | Error::Precondition(_)
            | Error::Json(_) => 2,
            Error::Io(_) => 1,
            _ => 3,
        }
    }
}
