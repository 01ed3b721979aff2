use thiserror::Error;

/// Errors produced by the moment, certificate, solver and oracle routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    Dimension {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("invalid control set: {0}")]
    InvalidControlSet(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("moment vector is not representable by a measure on K (residual {residual:.3e})")]
    NotRepresentable { residual: f64 },

    #[error("moment vector at step {step} lies outside the moment set")]
    OutsideMomentSet { step: usize },

    #[error("velocity is not attainable; attainable range {attainable:?}")]
    Infeasible { attainable: Vec<(f64, f64)> },

    #[error("state diverged at t = {time:.4} (|x| = {norm:.3e})")]
    Divergence { time: f64, norm: f64 },

    #[error("structural error: {0}")]
    Structural(String),

    #[error(
        "reachable states leave the grid; suggested state range [{suggested_lo}, {suggested_hi}]"
    )]
    GridEscape {
        suggested_lo: f64,
        suggested_hi: f64,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize, context: &'static str) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension {
            expected,
            got,
            context,
        })
    }
}
