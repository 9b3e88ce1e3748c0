use thiserror::Error;

/// Everything that can go wrong inside the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("region is empty")]
    EmptyRegion,

    #[error("region is unbounded")]
    Unbounded,

    #[error("CFL: dt ≤ ε²/2 (dt = {dt}, ε²/2 = {bound})")]
    Cfl { dt: f64, bound: f64 },

    #[error("invalid parameter `{name}`: {constraint}")]
    InvalidParameter { name: &'static str, constraint: String },

    #[error("{form} is not defined at {point}: {reason}")]
    OutsideValidity {
        form: String,
        point: String,
        reason: String,
    },

    #[error("stationary solve did not converge: {iterations} sweeps, last sup-change {residual}")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("{point} is not within {tol} of the region boundary")]
    NotOnBoundary { point: String, tol: f64 },

    #[error("schedule needs at least 2 resolutions, got {0}")]
    ScheduleTooShort(usize),

    #[error("modification box is not contained in the field's region (node {point})")]
    BoxNotContained { point: String },

    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, constraint: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        constraint: constraint.into(),
    }
}

/// Compact float formatting for messages (12 significant digits, trailing zeros trimmed).
pub(crate) fn fmt_short(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{:.*e}", 11, x);
    let v: f64 = s.parse().unwrap_or(x);
    if (1e-4..1e15).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}
