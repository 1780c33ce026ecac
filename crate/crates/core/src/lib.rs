//! Finite predictor coefficients of multivariate ARMA processes in O(n).
//!
//! Given a rational spectral factor `h` (condition: no poles and no zeros of
//! `det h` in the closed unit disk), this crate
//!
//! * extracts the pole/residue decomposition of `h^{-1}`,
//! * computes the second outer factor `h_sharp` of the spectral density
//!   `w = h h*` and its matching pole data,
//! * assembles the fixed-size building-block matrices, and
//! * evaluates the closed-form expression for the finite predictor
//!   coefficients `phi_{n,1..n}`, streaming all `n` coefficients in linear
//!   time,
//!
//! together with independent reference computations (multivariate
//! Durbin-Levinson, dense Yule-Walker solves, phase-function coefficients,
//! series representations, Baxter-ratio asymptotics) used to cross-check
//! every step.
//!
//! The `arma-predict` binary exposes the validate / factorize / predict /
//! compare / asymptotics workflows over JSON model files.

pub mod arma;
pub mod blocks;
pub mod decompose;
pub mod error;
pub mod linalg;
pub mod model;
pub mod modelfile;
pub mod models;
pub mod oracle;
pub mod poly;
pub mod predictor;
pub mod report;
pub mod series;
pub mod specfactor;

// pub use arma::ArmaModel;
pub use error::{Error, Result};
pub use linalg::CMatrix;

/// Numeric thresholds used across the pipeline. Every "is nonzero" or
/// "agrees" decision goes through one of these fields.
#[derive(Debug, Clone)]
pub struct Tolerances {
    /// Merge radius for clustering nearby polynomial roots into one root
    /// with summed multiplicity.
    pub pole_cluster: f64,
    /// Agreement threshold for node-doubling contour integrals.
    pub contour_agreement: f64,
    /// Floor below which a residue / coefficient counts as zero.
    pub nonzero_floor: f64,
    /// Slack on |z| = 1 for condition checks on the closed unit disk.
    pub unit_disk: f64,
    /// Target relative residual for the circle spectral factorization.
    pub factorization: f64,
    /// Maximum admissible residual of the second-factor pole-data fit.
    pub sharp_fit: f64,
    /// Target for certified series tails.
    pub series_tail: f64,
    /// Guard distance for pointwise evaluation near a pole.
    pub near_pole: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            pole_cluster: 1e-7,
            contour_agreement: 1e-11,
            nonzero_floor: 1e-8,
            unit_disk: 1e-9,
            factorization: 1e-10,
            sharp_fit: 1e-9,
            series_tail: 1e-12,
            near_pole: 1e-8,
        }
    }
}
