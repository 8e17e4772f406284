use thiserror::Error;

use crate::spaces::Variance;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported dimension {0} (supported range is 1..=8)")]
    UnsupportedDimension(usize),

    #[error("variance mismatch: cannot combine {left} with {right}")]
    VarianceMismatch { left: Variance, right: Variance },

    #[error("linear map is singular")]
    SingularMap,

    #[error("matrix logarithm undefined: spectrum meets the closed negative real axis")]
    LogUndefined,

    #[error("metric tensor is not symmetric (asymmetry {0:e})")]
    NonSymmetricMetric(f64),

    #[error("metric tensor is not positive definite (smallest eigenvalue {0:e})")]
    IndefiniteMetric(f64),

    #[error("metric tensor is degenerate")]
    DegenerateMetric,

    #[error("invariant count {count} out of range 1..={n}")]
    InvalidCount { count: usize, n: usize },

    #[error("configuration-space inertia is singular")]
    SingularInertia,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("implicit midpoint did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("potential term references body {index}, but the system has {bodies} bodies")]
    BadPairIndex { index: usize, bodies: usize },

    #[error("trace of {what} disagrees between equivalent routes ({left} vs {right})")]
    TraceMismatch {
        what: &'static str,
        left: f64,
        right: f64,
    },

    #[error("body {body}: {source}")]
    Body {
        body: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("potential term {term}: {source}")]
    Term {
        term: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn in_body(self, body: usize) -> Error {
        Error::Body {
            body,
            source: Box::new(self),
        }
    }

    pub(crate) fn in_term(self, term: usize) -> Error {
        Error::Term {
            term,
            source: Box::new(self),
        }
    }

    /// The innermost error, with body/term context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::Body { source, .. } | Error::Term { source, .. } => source.root(),
            other => other,
        }
    }
}
