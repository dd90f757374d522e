use thiserror::Error;

use crate::todaflow::Trajectory;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{func}: argument {value} outside domain {domain}")]
    Domain {
        func: &'static str,
        value: f64,
        domain: &'static str,
    },

    /// A gap of the full periodic extension left the open interval (-2+margin, 2-margin),
    /// or a Gamma / psi^(-2) argument became non-positive.
    #[error("genericity violated: {0}")]
    Genericity(String),

    #[error("shape mismatch: expected {expected} entries for n = {n}, got {got}")]
    Shape { n: usize, expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("quadrature did not converge (achieved error estimate {achieved:e})")]
    Quadrature { achieved: f64 },

    #[error("trajectory blew up at x = {x} ({reason})")]
    BlowUp {
        x: f64,
        reason: String,
        trajectory: Box<Trajectory>,
    },

    #[error("extrapolation in x1 unreliable: C(x1) sequence {values:?} is not monotone")]
    NonMonotone { values: Vec<f64> },

    #[error("shooting for the global solution failed: {0}")]
    Shooting(String),
}
