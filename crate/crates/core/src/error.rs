use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in input")]
    NonFinite,

    #[error("vector norm below tolerance")]
    ZeroNorm,

    #[error("rotation is degenerate (near-zero norm or antipodal pair)")]
    DegenerateRotation,

    #[error("reflection is undefined: e and q point the same way")]
    DegenerateReflection,

    #[error("hyperspherical frame is singular: sin(theta_{index}) is ~0")]
    SingularLatitude { index: usize },

    #[error("codebook is empty")]
    EmptyCodebook,

    #[error("empty input")]
    Empty,

    #[error("index {index} out of range for codebook of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("hessian estimator needs a Hessian-vector product oracle")]
    MissingHvp,

    #[error("exact double-pass gradients are a trainer-level strategy; use VqAeModel::exact_step")]
    ExactDoublePass,

    #[error("gradient is not in span(e, q) (residual {residual:.3e})")]
    OutOfPlane { residual: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

pub(crate) fn check_finite(v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}
