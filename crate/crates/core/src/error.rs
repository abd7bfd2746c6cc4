use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("{what}: argument {value} outside the domain")]
    Domain { what: String, value: f64 },

    #[error("matrix is numerically singular (eigenvalue {eigenvalue:e})")]
    SingularSplit { eigenvalue: f64 },

    #[error("pencil det(A - 2ηB) vanishes identically")]
    DegeneratePencil,

    #[error("η = {eta} is a pencil root (det(A - 2ηB) = 0)")]
    PencilRoot { eta: f64 },

    #[error("quadrature did not converge: value {value:e}, error estimate {error:e}")]
    QuadratureFailure { value: f64, error: f64 },

    #[error("z = {z} is a pole (residue {residue:e})")]
    Pole { z: Complex64, residue: f64 },

    #[error("asymptotic series too short: need {needed} coefficients, have {available}")]
    InsufficientSeries { needed: usize, available: usize },

    #[error("series f_0 = {series} disagrees with numeric continuation {numeric}")]
    SeriesMismatch { series: f64, numeric: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("split point C = {c} must exceed {bound}")]
    ConvergenceDomain { c: f64, bound: f64 },

    #[error("η-integral diverges for degree q = {q} without Szegő subtraction")]
    DivergentIntegral { q: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("independent evaluation routes disagree: {first} vs {second}")]
    RouteMismatch { first: f64, second: f64 },

    #[error("series tail bound {bound:e} not reached after {terms} terms")]
    SeriesTail { terms: usize, bound: f64 },

    #[error("overflow: {0}")]
    Overflow(String),
}

pub type Result<T> = std::result::Result<T, Error>;
