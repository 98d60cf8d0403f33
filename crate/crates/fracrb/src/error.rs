use thiserror::Error;

/// Errors produced by the solver suite.
///
/// Variants are grouped by how the CLI maps them to exit codes:
/// configuration/input problems (exit 2), numerical failures (exit 3) and
/// I/O or container-format problems (exit 4).
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parameter s = {s} lies outside the subdomain {subdomain}")]
    OutOfDomain { s: f64, subdomain: &'static str },

    #[error(
        "conjugate gradient did not converge: {iterations} iterations, relative residual {residual:.3e} (tolerance {tolerance:.1e})"
    )]
    NonConvergence {
        iterations: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("operator is not positive definite: encountered curvature {curvature:.3e} at iteration {iteration}")]
    Indefinite { iteration: usize, curvature: f64 },

    #[error("reduced system is singular or indefinite: smallest eigenvalue {min_eigenvalue:.3e}")]
    ReducedIndefinite { min_eigenvalue: f64 },

    #[error("eigenvalue iteration did not converge: residual {residual:.3e} after {steps} steps")]
    EigenNonConvergence { steps: usize, residual: f64 },

    #[error("linear program is infeasible (inconsistent stability constraints)")]
    LpInfeasible,

    #[error("greedy selection degenerated: {0}")]
    GreedyDegenerate(String),

    #[error("certification unavailable: {0}")]
    NoCertification(String),

    #[error("stability lower bound is not positive at s = {s}: beta_lb = {beta_lb:.3e}")]
    NonPositiveStabilityBound { s: f64, beta_lb: f64 },

    #[error("model container: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code used by the command line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::Config(_) | Error::OutOfDomain { .. } => 2,
            Error::NonConvergence { .. }
            | Error::Indefinite { .. }
            | Error::ReducedIndefinite { .. }
            | Error::EigenNonConvergence { .. }
            | Error::LpInfeasible
            | Error::GreedyDegenerate(_)
            | Error::NoCertification(_)
            | Error::NonPositiveStabilityBound { .. } => 3,
            Error::Format(_) | Error::Io(_) => 4,
        }
    }
}
