use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// `I - zA` is numerically singular, so r(z) and q(z) have a pole at `z`.
    #[error("rational function pole at z = {z}")]
    Pole { z: Complex64 },

    #[error("shifted system is singular at lambda = {lambda}")]
    Singular { lambda: Complex64 },

    #[error("Runge-Kutta matrix is not diagonalizable")]
    NotDiagonalizable,

    #[error("Runge-Kutta matrix has an eigenvalue with non-positive real part: {0}")]
    UnstableTableau(Complex64),

    #[error("mass matrix is not symmetric positive definite")]
    NotSpd,

    #[error("invalid grid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("nonzero initial value requires the homogeneous contour term")]
    HomogeneousDisabled,

    #[error("theorem inapplicable: {0}")]
    TheoremInapplicable(String),

    #[error("no admissible (rho, b) found down to rho = {rho}")]
    Lemma1Failed { rho: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures that come from the numerics rather than from the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Pole { .. } | Error::Singular { .. } | Error::NotDiagonalizable | Error::Lemma1Failed { .. }
        )
    }
}
