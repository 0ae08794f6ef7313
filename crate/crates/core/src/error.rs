use thiserror::Error;

/// Errors raised by the numerical kernels, distribution models and scenario machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("points u={u} and v={v} are closer than the diagonal threshold {threshold:e}")]
    DiagonalTooClose { u: f64, v: f64, threshold: f64 },

    #[error("{x} lies outside the domain ({lo}, {hi})")]
    DomainError { x: f64, lo: f64, hi: f64 },

    #[error("derivative order {order} exceeds the available maximum {max}")]
    OrderTooHigh { order: usize, max: usize },

    #[error(
        "finite-difference stencil with step {step:e} around (u={u}, v={v}) crosses the diagonal"
    )]
    StencilCrossesDiagonal { u: f64, v: f64, step: f64 },

    #[error("invalid parameter: {0}")]
    ParamError(String),

    #[error("transform is not strictly increasing near {at}")]
    NonMonotoneTransform { at: f64 },

    #[error("invalid conditioning context: {0}")]
    ContextError(String),

    #[error("hazard increment R(v) - R(u) = {gap:e} is too small to condition on")]
    DegenerateHazard { gap: f64 },

    #[error("stream of {horizon} draws produced only {found} of {wanted} records")]
    HorizonExhausted {
        horizon: u64,
        found: usize,
        wanted: usize,
    },

    #[error("adaptive quadrature did not converge on [{a}, {b}] within depth {depth}")]
    QuadratureNonConvergence { a: f64, b: f64, depth: usize },

    #[error("cannot parse {what}: {message}")]
    Parse { what: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
