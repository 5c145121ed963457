//! Error type shared by all modules.

use thiserror::Error;

/// Errors produced by the library.
///
/// The CLI maps these onto exit codes: schema/domain problems -> 2,
/// hypothesis gates -> 3, numerical non-convergence -> 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("divergent integral: {0}")]
    Divergence(String),

    #[error("wavenumber outside admissible region: {0}")]
    Region(String),

    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    #[error("solver failed to converge: {0}")]
    NonConvergence(String),

    #[error("contour passes too close to a zero: {0}")]
    ContourNearZero(String),

    #[error("contour quadrature uncertainty too large: {0}")]
    QuadratureUncertain(String),

    #[error("root refinement stagnated: {0}")]
    RefinementStagnation(String),

    #[error("inadmissible bound parameters: {0}")]
    Admissibility(String),

    #[error("bound not applicable: {0}")]
    Inapplicable(String),

    #[error("evaluation at a resolvent pole: {0}")]
    Pole(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("box too small: {0}")]
    BoxTooSmall(String),

    #[error("tridiagonal solve failed: {0}")]
    LinearSolve(String),

    #[error("truncation error dominates the result: {0}")]
    TruncationDominated(String),
}

impl Error {
    /// Exit-code family for the CLI: 2 = schema, 3 = hypothesis gate,
    /// 4 = numerical failure.
    pub fn exit_code(&self) -> i32 {
        use Error::*;
        match self {
            Domain(_) | Schema(_) | Mismatch(_) => 2,
            Region(_) | Admissibility(_) | Inapplicable(_) | Hypothesis(_) | BoxTooSmall(_) => 3,
            Divergence(_) | NonConvergence(_) | ContourNearZero(_) | QuadratureUncertain(_)
            | RefinementStagnation(_) | Pole(_) | LinearSolve(_) | TruncationDominated(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
