use thiserror::Error;

use crate::expr::ExprError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("configuration line {line}: {msg}")]
    ConfigSyntax { line: usize, msg: String },

    #[error("degenerate advection field at ({x}, {y}): |beta| = {norm:e} is below {eps:e}")]
    DegenerateField { x: f64, y: f64, norm: f64, eps: f64 },

    #[error("inflow boundary is empty")]
    EmptyInflow,

    #[error("need at least {min} seeds, got {got}")]
    TooFewSeeds { min: usize, got: usize },

    #[error("integral curve from ({x}, {y}) exceeded the maximum arc length {limit}")]
    CurveTooLong { x: f64, y: f64, limit: f64 },

    #[error("zero pivot at row {row} in linear solve")]
    SingularSystem { row: usize },

    #[error("transfer grid holds no intersection records")]
    EmptyGrid,

    #[error("point ({x}, {y}) lies outside the grid bounding box")]
    OutOfBox { x: f64, y: f64 },

    #[error("grid geometries differ")]
    GeometryMismatch,

    #[error("reference values are identically zero; relative error undefined")]
    ZeroReference,

    #[error("non-finite value at step {step} on {family} curve {curve}")]
    NonFinite {
        step: usize,
        family: &'static str,
        curve: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Expr(ExprError::Syntax { .. })
                | Error::Expr(ExprError::UnknownIdentifier { .. })
                | Error::Validation(_)
                | Error::ConfigSyntax { .. }
        )
    }
}
