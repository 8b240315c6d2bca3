//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("Eisenstein weight must be 2, 4 or 6, got {0}")]
    InvalidWeight(u32),

    #[error("division by an identically zero series")]
    ZeroSeriesDivision,

    #[error("series operation has an empty valid range")]
    EmptyValidRange,

    #[error("point is not in the upper half-plane (Im = {0})")]
    NotUpperHalfPlane(String),

    #[error("imaginary part {0} is below the 2^-16 floor")]
    ImaginaryPartTooSmall(String),

    #[error("fundamental-domain reduction did not converge within {steps} steps")]
    ReductionDidNotConverge { steps: u64 },

    #[error(
        "requested precision unattainable at truncation order {n_terms} (tail ~2^{tail_log2})"
    )]
    PrecisionUnattainable { n_terms: usize, tail_log2: i64 },

    #[error("level {0} exceeds the configured desk bound {1}")]
    LevelOverBound(u32, u32),

    #[error("interpolation rounding residual {residual} >= 1/4; retry with doubled precision")]
    RoundingResidual { residual: f64 },

    #[error("denominator of the derivative ratio vanishes (ramification point)")]
    Ramification,

    #[error("argument within pole tolerance of the orbits of i or rho")]
    PoleProximity,

    #[error("matrix is not in GL2+ (determinant {0} <= 0)")]
    NonPositiveDeterminant(String),

    #[error("matrix is not primitive (content {0} > 1)")]
    ImprimitiveMatrix(String),

    #[error("invalid quadratic point: {0}")]
    InvalidQuadraticPoint(String),

    #[error("{0} is not a valid negative discriminant (need D < 0, D = 0 or 1 mod 4)")]
    InvalidDiscriminant(i64),

    #[error("class number {0} exceeds the desk bound {1}")]
    ClassNumberOverBound(usize, usize),

    #[error("precision {prec} below the floor {floor} required for degree {deg}")]
    PrecisionBelowFloor { prec: u32, floor: u32, deg: u32 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("internal consistency failure: {0}")]
    InternalInconsistency(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unknown verification suite `{0}`")]
    UnknownSuite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
