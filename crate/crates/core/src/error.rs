use thiserror::Error;

use crate::surface::EdgeRef;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("edges {a} and {b} cannot be glued: {reason}")]
    EdgeMismatch { a: EdgeRef, b: EdgeRef, reason: String },

    #[error("invalid gluing: {0}")]
    InvalidGluing(String),

    #[error("polygon {index} is not a convex counterclockwise polygon: {reason}")]
    NonConvexPolygon { index: usize, reason: String },

    #[error("surface has no cone points of angle at least 4π (flat torus?)")]
    NoSingularities,

    #[error("polygon gluing graph is disconnected")]
    Disconnected,

    #[error("corner angles around a vertex sum to {angle}, not a multiple of 2π")]
    BadConeAngle { angle: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("directions belong to different cone points ({0} and {1})")]
    MismatchedCone(usize, usize),

    #[error("direction {0} does not lie in the corner wedge it was assigned to")]
    InvalidDirection(String),

    #[error(
        "radius {requested} exceeds the enumerated saddle budget {available}; \
         rerun with a saddle length budget of at least {requested}"
    )]
    Truncation { requested: f64, available: f64 },

    #[error("no saddle connection of length² ≤ {0}")]
    BudgetTooSmall(String),

    #[error("radius must be positive, got {0}")]
    DegenerateRadius(f64),

    #[error("strongly connected component of the concatenation graph is empty")]
    EmptyScc,

    #[error("could not bracket the root of λ(σ) = 1: {0}")]
    BracketFailure(String),

    #[error(
        "eigenvector derivative {analytic} disagrees with finite difference {numeric} \
         for {which}"
    )]
    DerivativeMismatch { which: String, analytic: f64, numeric: f64 },

    #[error("unknown saddle connection id {0}")]
    UnknownSaddle(usize),

    #[error("unknown cone point id {0}")]
    UnknownCone(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by an insufficient saddle budget.
    pub fn is_truncation(&self) -> bool {
        matches!(self, Error::Truncation { .. })
    }
}
