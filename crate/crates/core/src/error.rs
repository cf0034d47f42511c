use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid algebra: {0}")]
    Algebra(String),
    #[error("invalid decomposition: {0}")]
    Decomposition(String),
    #[error("invalid norm: {0}")]
    Norm(String),
    #[error("operation requires a smooth norm, got a singular one")]
    Singular,
    #[error("vector too close to the origin (|y| = {0:e})")]
    NearTip(f64),
    #[error("point outside chart (|x| = {norm}, radius {radius})")]
    OutsideChart { norm: f64, radius: f64 },
    #[error("chart degenerate at x (condition number {0:e})")]
    DegenerateChart(f64),
    #[error("degenerate flag (Gram determinant {0:e})")]
    DegenerateFlag(f64),
    #[error("root not bracketed: {0}")]
    Bracket(String),
    #[error("optimizer failed: {0}")]
    Optimizer(String),
    #[error("numerical breakdown: {0}")]
    Numeric(String),
    #[error("unsupported label: {0}")]
    Label(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
