use thiserror::Error;

use crate::convexity::Pencil;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("matrix is not an isometry (deviation {deviation:.3e})")]
    NotIsometry { deviation: f64 },

    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("degenerate spectrum: block splitting did not terminate within {depth} levels")]
    DegenerateSpectrum { depth: usize },

    #[error("input tuple is not irreducible (commutant dimension {commutant_dim})")]
    NonIrreducibleInput { commutant_dim: usize },

    #[error("ill-conditioned constraint system: {0}")]
    IllConditioned(String),

    #[error("iteration limit of {limit} reached without a certificate")]
    IterationLimit { limit: usize },

    #[error("certificate failed independent verification: {0}")]
    VerifierFailure(String),

    #[error("point is not separable from the matrix range (verdict was {status})")]
    NotSeparable { status: String },

    #[error("no exposing gap: others reach {best:.3e} of the boundary value")]
    NoGap { best: f64 },

    #[error("indeterminate classification: {0}")]
    Indeterminate(String),

    #[error("matrix ranges differ; tuples are not unitarily equivalent")]
    NotEquivalent { separator: Option<Box<Pencil>> },

    #[error("tuple is not minimal: {0}")]
    NotMinimal(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
