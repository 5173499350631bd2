use thiserror::Error;

/// Errors raised by the algebraic operations of this crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("variable index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("truncation order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },
    #[error("bivector is not Poisson: [pi, pi] != 0")]
    NotPoisson,
    #[error("bivector has non-constant coefficients")]
    NonConstant,
    #[error("matrix is not idempotent")]
    NotIdempotent,
    #[error("column is not in the image of the projection")]
    NotInImage,
    #[error("matrix is not in the corner P0 M P0")]
    NotInCorner,
    #[error("projection does not have rank one (trace = {0})")]
    RankNotOne(String),
    #[error("degenerate bivector: matrix is not invertible")]
    Degenerate,
    #[error("skew part of the operator is not a bivector: {0}")]
    NotBivector(String),
    #[error("first-order cochains differ: {0}")]
    C1Mismatch(String),
    #[error("second-order ansatz has no solution: {0}")]
    AnsatzUnsolvable(String),
    #[error("cannot normalize first-order symmetric part: {0}")]
    NormalizationFailure(String),
    #[error("transformation coefficient at order {0} is not a derivation")]
    NotDerivation(usize),
    #[error("vector is not in the integral lattice")]
    NotInLattice,
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("curvature does not act as a scalar on sections")]
    CurvatureNotScalar,
    #[error("parse error at {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_dim(left: usize, right: usize) -> Result<()> {
    if left == right {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { left, right })
    }
}
