//! Error types shared by the whole crate.

use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sigma_half is not invertible (smallest singular value {sigma_min:.3e})")]
    SingularSigma { sigma_min: f64 },

    #[error("{factor} has a root at {root} inside the closed unit disk")]
    NotStable { factor: &'static str, root: Complex64 },

    #[error("two pole candidates at {a} and {b} are too close to assign multiplicities")]
    PoleClusterAmbiguous { a: Complex64, b: Complex64 },

    #[error("leading residue at pole {pole} has norm {norm:.3e}, below the nonzero floor")]
    DegenerateLeadingResidue { pole: Complex64, norm: f64 },

    #[error("evaluation point {z} is within {dist:.3e} of a pole")]
    NearPole { z: Complex64, dist: f64 },

    #[error("second-factor pole data is required but missing")]
    InsufficientSharpData,

    #[error("autocovariance tail could not be certified below {target:.3e}")]
    TailNotConverged { target: f64 },

    #[error("spectral factorization did not reach residual {target:.3e} in {iterations} iterations (got {achieved:.3e})")]
    NoConvergence { target: f64, achieved: f64, iterations: usize },

    #[error("grid of size {grid} is too coarse: doubling moved samples by {delta:.3e}")]
    GridTooCoarse { grid: usize, delta: f64 },

    #[error("least-squares basis is ill-conditioned (condition number {cond:.3e})")]
    IllConditionedBasis { cond: f64 },

    #[error("pole-data fit residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    ResidualTooLarge { residual: f64, tol: f64 },

    #[error("no contour around pole {pole} clears the other poles")]
    NearPoleDifferentiation { pole: Complex64 },

    #[error("I - G~G is numerically singular at horizon {n}; upstream data is corrupt")]
    NeumannDiverged { n: usize },

    #[error("covariance sequence lost positive definiteness at step {step}")]
    NotPositiveDefinite { step: usize },

    #[error("|p1| = {p1:.6} does not strictly dominate the remaining pole moduli (max {rest:.6})")]
    AssumptionP1MaxViolated { p1: f64, rest: f64 },

    #[error("series truncation {truncation} is insufficient: doubling moved results by {delta:.3e}")]
    TruncationInsufficient { truncation: usize, delta: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("model file error: {0}")]
    ModelFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Exit-code class used by the CLI: 2 for parse/usage problems, 1 for
    /// numerical or assumption failures.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_) | Error::ModelFile(_) | Error::Io(_) | Error::Json(_)
        )
    }
}
