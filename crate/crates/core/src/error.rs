//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by space construction, frame assembly, extension and
/// operator application.
#[derive(Debug, Error)]
pub enum Error {
    /// A point or singular point lies outside the domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter failed validation (order range, empty input, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// An integrand produced a non-finite value at a quadrature node.
    #[error("numeric error: non-finite value {value} at node {node} (x = {x})")]
    NonFinite { node: usize, x: f64, value: String },

    /// All generator Gram eigenvalues fell below the rank cutoff.
    #[error("degenerate space: all Gram eigenvalues below cutoff {cutoff:.3e}")]
    DegenerateSpace { cutoff: f64 },

    /// The quadrature rule is too coarse for the requested dimension.
    #[error("resolution error: rule has {nodes} nodes but dimension {dimension} requires at least {required}")]
    Resolution {
        nodes: usize,
        dimension: usize,
        required: usize,
    },

    /// Two ultrafunctions from different spaces were combined.
    #[error("space mismatch: operands belong to different spaces")]
    SpaceMismatch,

    /// Candidate points do not support an invertible evaluation matrix.
    #[error("dependent points: {0}")]
    DependentPoints(String),

    /// The frame operator came out with a genuinely negative eigenvalue.
    #[error("operator not positive: eigenvalue {eigenvalue:.3e}")]
    NotPositive { eigenvalue: f64 },

    /// A function is not a member of the space (projection residual too large).
    #[error("not a member: projection residual {residual:.3e} exceeds {threshold:.3e}")]
    NotAMember { residual: f64, threshold: f64 },

    /// A functional pairing failed to converge under grading refinement.
    #[error("divergent pairing for '{name}': refinements differ by {difference:.3e} (threshold {threshold:.3e})")]
    DivergentPairing {
        name: String,
        difference: f64,
        threshold: f64,
    },

    /// A generator family lacks a required capability (derivative, transform).
    #[error("capability error: {0}")]
    Capability(String),

    /// An identity the construction guarantees failed its tolerance.
    #[error("identity violation: {name} residual {residual:.3e} exceeds {tolerance:.3e}")]
    IdentityViolation {
        name: &'static str,
        residual: f64,
        tolerance: f64,
    },

    /// A refinement stage failed to build.
    #[error("chain error at stage {stage}: {source}")]
    Chain {
        stage: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
