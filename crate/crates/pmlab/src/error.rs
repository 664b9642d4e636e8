//! Crate-wide error type.
//!
//! Numerical routines distinguish *domain* problems (caller asked for a value
//! outside a formula's validity region) from *outcome signals* that are part
//! of the laboratory's vocabulary: an integral that genuinely diverges, a
//! field that is unbounded on a cylinder, a stopping-time scan that finds no
//! crossing, or an inequality checker whose hypotheses fail on the given
//! configuration. The latter are expected results, not bugs, and callers
//! routinely match on them.

use thiserror::Error;

/// Unified error/signal type for the laboratory.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Input outside a formula's or solution's validity region.
    #[error("domain error: {0}")]
    Domain(String),

    /// Evaluation exactly on a singularity (e.g. `x = 0` of a singular solution).
    #[error("singular point: {0}")]
    Singular(String),

    /// An integral whose refinement diverges instead of converging.
    #[error("divergent integral: {0}")]
    Divergent(String),

    /// A supremum requested over a region where the field is unbounded.
    #[error("unbounded field: {0}")]
    Unbounded(String),

    /// A root/bracket search that failed within its configured range.
    #[error("no bracket: {0}")]
    NoBracket(String),

    /// A well-posed query whose answer is "nothing qualifies"
    /// (e.g. no stopping radius exists for the given level).
    #[error("not applicable: {0}")]
    NotApplicable(String),

    /// A checker's hypotheses do not hold on the supplied configuration;
    /// distinct from the checked inequality failing.
    #[error("precondition unmet: {0}")]
    PreconditionUnmet(String),

    /// Malformed run configuration.
    #[error("config error: {0}")]
    Config(String),

    /// A time-marching step that could not be completed (time-step
    /// underflow or a non-converging nonlinear update).
    #[error("time-step failure: {0}")]
    StepFailure(String),

    /// Malformed serialized data (e.g. a sampled-field CSV document).
    #[error("malformed data: {0}")]
    Parse(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
