use thiserror::Error;

/// Errors raised while building spline spaces, operators and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("axis {axis}: spline order {order} is outside the supported range 2..={max}")]
    InvalidOrder { axis: usize, order: usize, max: usize },

    #[error("axis {axis}: {pixels} pixel(s) cannot carry a knot grid of order {order}")]
    Sizing { axis: usize, pixels: usize, order: usize },

    #[error("invalid knot sequence: {0}")]
    InvalidKnots(String),

    #[error("basis index {index} out of range (axis has {len} functions)")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("coordinate {coord} on axis {axis} lies outside [{lo}, {hi}]")]
    OutsideDomain { axis: usize, coord: f64, lo: f64, hi: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("axis {axis}: snapping would duplicate interpolation site {site}")]
    DuplicateSite { axis: usize, site: usize },

    #[error("invalid mask: {0}")]
    InvalidMask(String),

    #[error("factorization failed at pivot {pivot}: matrix is not positive definite")]
    Factorization { pivot: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported image data: {0}")]
    UnsupportedFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
