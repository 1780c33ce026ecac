//! Independent reference computations used to cross-check the closed form:
//! the multivariate Durbin-Levinson recursion and dense Yule-Walker solves,
//! phase-function coefficients by quadrature and by closed form, the
//! series representation of the predictor, Baxter-ratio asymptotics, and
//! the standalone identity suites.

pub mod asymptotics;
pub mod beta;
pub mod durbin_levinson;
pub mod identities;
pub mod series_rep;

pub use asymptotics::{baxter_asymptotics, AsymptoticsReport, AsymptoticsRow};
pub use beta::{beta_coefficients, PhaseCoefficients};
pub use durbin_levinson::{durbin_levinson_all, yule_walker_dense};
pub use identities::{identity_suite, IdentityReport};
pub use series_rep::{b_sequences, phi_series, BSequences};
