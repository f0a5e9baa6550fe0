use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge on [{a}, {b}]: last estimates {last} and {previous}")]
    QuadratureNonConvergence {
        a: f64,
        b: f64,
        last: f64,
        previous: f64,
    },

    #[error("total mass {mass} deviates from 1 by more than {tolerance}")]
    MassMismatch { mass: f64, tolerance: f64 },

    #[error("requested mass {requested} exceeds the available mass {available}")]
    InsufficientMass { requested: f64, available: f64 },

    #[error("finite-difference stencil of order {order} at x={x} crosses a breakpoint or the domain boundary")]
    StencilCrossesBreakpoint { x: f64, order: usize },

    #[error("infeasible construction: {0}")]
    Infeasible(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("sample x={x} has zero density under both hypotheses")]
    ZeroProbabilitySample { x: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
