use thiserror::Error;

/// Errors raised by the engine.
///
/// Variants split into two families that the CLI maps onto distinct exit
/// codes: input/physics validation problems and numerical non-convergence.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid {field}: {value} ({reason})")]
    Domain {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("magnetic field is zero: the cyclotron length diverges and the dimensionless reduction is undefined")]
    FlatField,

    #[error("point ({x}, {y}) lies outside every reflectionless region at alpha = {alpha}")]
    OutsideRegions { x: f64, y: f64, alpha: f64 },

    #[error("no bounce: the wall never reflects (u0/|E| = {u0}, N = {n}, alpha = {alpha})")]
    NoBounce { u0: f64, n: u32, alpha: f64 },

    #[error("under-resolved grid: spacing {spacing} exceeds {limit} required by the {scale}")]
    Resolution {
        scale: &'static str,
        spacing: f64,
        limit: f64,
    },

    #[error("grid is degenerate: {0}")]
    DegenerateGrid(String),

    #[error("loop leaves the valid semiclassical nodes near ({x}, {y})")]
    Coverage { x: f64, y: f64 },

    #[error("{what} did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },
}

impl Error {
    pub(crate) fn domain(field: &'static str, value: f64, reason: &'static str) -> Self {
        Error::Domain {
            field,
            value,
            reason,
        }
    }

    /// True for failures of an iterative method, false for rejected inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonConvergence { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Rejects non-finite or non-positive values.
pub(crate) fn positive(field: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::domain(field, value, "must be finite and > 0"))
    }
}
