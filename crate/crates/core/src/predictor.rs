//! Finite predictor coefficients phi_{n,1..n} from the closed form
//!
//!   phi_{n,j} = c0 a_j + c0 p_0^T (I - G~_n G_n)^{-1} (Pi_n Theta)^*
//!               { Lambda^T Pi_n Theta v_j + v~_{n-j+1} },
//!
//! with G_n = Pi_n Theta Lambda and G~_n = (Pi_n Theta)^* Lambda^T. The
//! dM x dM pieces are assembled once per horizon; v_j and v~_k stream from
//! the Xi J-recursion, so all n coefficients cost O(n) matrix products of
//! fixed size.

use std::time::{Duration, Instant};

use crate::blocks::{self, BuildingBlocks};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::model::InversePoleData;
use crate::series;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictorMethod {
    /// Theorem-style closed form (K >= 1).
    ClosedForm,
    /// Pure AR model (K = 0): phi_{n,j} = phi_j for j <= m0, zero beyond.
    ArExact,
    /// Horizons below the closed form's validity (n < m0) solved by the
    /// reference recursion instead.
    DurbinLevinsonFallback,
}

impl PredictorMethod {
    pub fn label(&self) -> &'static str {
        match self {
            PredictorMethod::ClosedForm => "closed-form",
            PredictorMethod::ArExact => "ar-exact",
            PredictorMethod::DurbinLevinsonFallback => "durbin-levinson-fallback",
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Timings {
    pub assemble: Duration,
    pub sweeps: Duration,
}

/// phi_{n,1..n} with diagnostics.
#[derive(Debug, Clone)]
pub struct PredictorTable {
    pub n: usize,
    pub phi: Vec<CMatrix>,
    pub phi_inf: Vec<CMatrix>,
    pub neumann_radius: f64,
    pub method: PredictorMethod,
    pub timings: Timings,
}

/// G_n = Pi_n Theta Lambda and G~_n = (Pi_n Theta)^* Lambda^T.
pub fn g_matrices(bb: &BuildingBlocks, n: usize) -> (CMatrix, CMatrix) {
    let pi_theta = blocks::pi_matrix(&bb.pd, n) * &bb.theta;
    let g = &pi_theta * &bb.lambda;
    let g_tilde = pi_theta.adjoint() * bb.lambda.transpose();
    (g, g_tilde)
}

/// All finite predictor coefficients at horizon n (requires K >= 1 and
/// n >= max(m0, 1)).
pub fn phi_all(bb: &BuildingBlocks, n: usize) -> Result<PredictorTable> {
    let (phi, phi_inf, radius, timings) = phi_sweep(bb, n, true)?;
    Ok(PredictorTable {
        n,
        phi,
        phi_inf,
        neumann_radius: radius,
        method: PredictorMethod::ClosedForm,
        timings,
    })
}

/// Only the correction term phi_{n,j} - phi_j, j = 1..n, computed directly
/// (never by subtraction) so it stays meaningful at the |p_1|^n scale.
pub fn phi_diff_all(bb: &BuildingBlocks, n: usize) -> Result<Vec<CMatrix>> {
    let (diff, _, _, _) = phi_sweep(bb, n, false)?;
    Ok(diff)
}

fn phi_sweep(
    bb: &BuildingBlocks,
    n: usize,
    include_infinite: bool,
) -> Result<(Vec<CMatrix>, Vec<CMatrix>, f64, Timings)> {
    let m0 = bb.m0();
    if n < m0.max(1) {
        return Err(Error::InvalidInput(format!(
            "closed form requires n >= max(m0, 1) = {}, got {n}",
            m0.max(1)
        )));
    }
    let d = bb.dim();
    let mut timings = Timings::default();

    let t0 = Instant::now();
    let pi_theta = blocks::pi_matrix(&bb.pd, n) * &bb.theta;
    let g = &pi_theta * &bb.lambda;
    let g_tilde = pi_theta.adjoint() * bb.lambda.transpose();
    let gg = &g_tilde * &g;
    let system = linalg::eye(gg.nrows()) - &gg;
    let rhs = pi_theta.adjoint();
    let w = linalg::solve(&system, &rhs).map_err(|_| Error::NeumannDiverged { n })?;
    // guard against a silently garbage solve
    let resid = linalg::op_norm(&(&system * &w - &rhs)) / linalg::op_norm(&rhs).max(1e-300);
    if !resid.is_finite() || resid > 1e-6 {
        return Err(Error::NeumannDiverged { n });
    }
    let radius = linalg::spectral_radius(&gg).unwrap_or(f64::NAN);

    // u = c0 p_0^T W (d x dM), then fold in B = Lambda^T Pi_n Theta
    let p0_t = blocks::p_vec(&bb.pd, 0).transpose();
    let u = &bb.c0 * &p0_t * &w;
    let u_b = &u * bb.lambda.transpose() * &pi_theta;
    timings.assemble = t0.elapsed();

    let t1 = Instant::now();
    // backward sweep: cache u * v~_k for k = 1..n
    let mut u_vt: Vec<CMatrix> = Vec::with_capacity(n);
    {
        let mut xi = blocks::xi_scalar(&bb.pd, 1);
        for k in 1..=n {
            if k > 1 {
                xi = &xi * &bb.j_s;
            }
            let vt = bb.v_tilde_from_xi(&xi, k);
            u_vt.push(&u * vt);
        }
    }
    // forward sweep: assemble phi_{n,j}
    let mut phi: Vec<CMatrix> = Vec::with_capacity(n);
    let mut phi_inf: Vec<CMatrix> = Vec::with_capacity(if include_infinite { n } else { 0 });
    {
        let mut xi = blocks::xi_scalar(&bb.pd, 1);
        for j in 1..=n {
            if j > 1 {
                xi = &xi * &bb.j_s;
            }
            let v = bb.v_from_xi(&xi, j);
            let mut value = &u_b * v + &u_vt[n - j];
            if include_infinite {
                let inf = &bb.c0 * series::ar_coefficient(&bb.pd, j);
                value += &inf;
                phi_inf.push(inf);
            }
            debug_assert_eq!(value.nrows(), d);
            phi.push(value);
        }
    }
    timings.sweeps = t1.elapsed();
    Ok((phi, phi_inf, radius, timings))
}

/// AR dispatch (K = 0): the finite predictor equals the truncated infinite
/// predictor for every n >= max(m0, 1).
pub fn phi_all_ar(pd: &InversePoleData, n: usize) -> Result<PredictorTable> {
    if pd.pole_count() != 0 {
        return Err(Error::InvalidInput("AR path requires K = 0".into()));
    }
    let m0 = pd.poly_degree();
    if n < m0.max(1) {
        return Err(Error::InvalidInput(format!(
            "AR closed form requires n >= max(m0, 1) = {}, got {n}",
            m0.max(1)
        )));
    }
    let c0 = pd.c0()?;
    let d = pd.dim;
    let mut phi = Vec::with_capacity(n);
    let mut phi_inf = Vec::with_capacity(n);
    for j in 1..=n {
        let inf = if j <= m0 {
            &c0 * series::ar_coefficient(pd, j)
        } else {
            CMatrix::zeros(d, d)
        };
        phi.push(inf.clone());
        phi_inf.push(inf);
    }
    Ok(PredictorTable {
        n,
        phi,
        phi_inf,
        neumann_radius: 0.0,
        method: PredictorMethod::ArExact,
        timings: Timings::default(),
    })
}

#[derive(Debug, Clone, Copy)]
pub struct NeumannDiagnostics {
    pub spectral_radius: f64,
    /// || sum_{k=0}^{30} (G~G)^k - (I - G~G)^{-1} ||
    pub partial_sum_error: f64,
    /// rigorous tail bound ||(G~G)^{31}|| ||(I - G~G)^{-1}||
    pub tail_bound: f64,
}

/// Spectral radius of G~_n G_n and the 30-term Neumann partial-sum error
/// against the direct inverse.
pub fn neumann_diagnostics(bb: &BuildingBlocks, n: usize) -> Result<NeumannDiagnostics> {
    let (g, g_tilde) = g_matrices(bb, n);
    let gg = &g_tilde * &g;
    let dm = gg.nrows();
    let inv = linalg::inverse(&(linalg::eye(dm) - &gg)).map_err(|_| Error::NeumannDiverged { n })?;
    let mut partial = CMatrix::zeros(dm, dm);
    let mut power = linalg::eye(dm);
    for _ in 0..=30 {
        partial += &power;
        power = &power * &gg;
    }
    // after the loop `power` holds (G~G)^{31}
    Ok(NeumannDiagnostics {
        spectral_radius: linalg::spectral_radius(&gg)?,
        partial_sum_error: linalg::op_norm(&(partial - &inv)),
        tail_bound: linalg::op_norm(&power) * linalg::op_norm(&inv),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cr, from_rows, op_norm};
    use crate::model::{InversePoleData, PoleTerm};
    use crate::poly::{CPoly, PolyMatrix};
    use crate::Tolerances;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn ma1_blocks() -> BuildingBlocks {
        let num = PolyMatrix::new(
            1,
            vec![from_rows(1, 1, &[cr(1.0)]), from_rows(1, 1, &[cr(0.5)])],
        )
        .unwrap();
        let h = crate::model::RationalMatrix::new(num, CPoly::one(), &tol()).unwrap();
        let pd = crate::decompose::decompose_inverse(&h, &tol()).unwrap();
        BuildingBlocks::build(&pd, &pd, &tol()).unwrap()
    }

    #[test]
    fn g_matrix_ma1_value() {
        // G_1 = Pi_1 Theta Lambda = (-0.5)(0.375)(4/3) = -0.25
        let bb = ma1_blocks();
        let (g, g_tilde) = g_matrices(&bb, 1);
        assert!((g[(0, 0)] - cr(-0.25)).norm() < 1e-12);
        assert!((g_tilde[(0, 0)] - cr(-0.25)).norm() < 1e-12);
    }

    #[test]
    fn ma1_one_step_predictor() {
        // phi_{1,1} = gamma(1)/gamma(0) = 0.5/1.25 = 0.4
        let bb = ma1_blocks();
        let table = phi_all(&bb, 1).unwrap();
        assert!((table.phi[0][(0, 0)] - cr(0.4)).norm() < 1e-12);
        assert!((table.phi_inf[0][(0, 0)] - cr(0.5)).norm() < 1e-12);
        assert!(table.neumann_radius < 1.0);
    }

    #[test]
    fn diff_plus_infinite_reconstructs_phi() {
        let bb = ma1_blocks();
        let n = 12;
        let table = phi_all(&bb, n).unwrap();
        let diff = phi_diff_all(&bb, n).unwrap();
        for j in 0..n {
            let rebuilt = &diff[j] + &table.phi_inf[j];
            assert!(op_norm(&(rebuilt - &table.phi[j])) < 1e-14);
        }
    }

    #[test]
    fn g_norm_decays_with_horizon() {
        let bb = ma1_blocks();
        let norms: Vec<f64> = [10usize, 20, 40]
            .iter()
            .map(|&n| op_norm(&g_matrices(&bb, n).0))
            .collect();
        assert!(norms[0] > norms[1] && norms[1] > norms[2]);
    }

    #[test]
    fn neumann_diagnostics_bounds() {
        let bb = ma1_blocks();
        for n in [1usize, 3, 10] {
            let diag = neumann_diagnostics(&bb, n).unwrap();
            assert!(diag.spectral_radius < 1.0);
            assert!(diag.partial_sum_error <= diag.tail_bound + 1e-13);
        }
        // radius shrinks to zero for large n
        let d40 = neumann_diagnostics(&bb, 40).unwrap();
        assert!(d40.spectral_radius < 1e-10);
    }

    #[test]
    fn ar_model_predicts_exactly() {
        // AR(1), h = 1/(1 - 0.3 z): h^{-1} = 1 - 0.3 z, so K = 0, m0 = 1,
        // rho0 = -1, rho01 = 0.3; phi_{n,1} = 0.3, rest zero
        let pd = InversePoleData {
            dim: 1,
            rho0: from_rows(1, 1, &[cr(-1.0)]),
            poles: vec![],
            rho0j: vec![from_rows(1, 1, &[cr(0.3)])],
        };
        let table = phi_all_ar(&pd, 5).unwrap();
        assert_eq!(table.method, PredictorMethod::ArExact);
        assert!((table.phi[0][(0, 0)] - cr(0.3)).norm() < 1e-14);
        for j in 1..5 {
            assert!(table.phi[j][(0, 0)].norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_horizon_below_m0() {
        let pd = InversePoleData {
            dim: 1,
            rho0: from_rows(1, 1, &[cr(-1.0)]),
            poles: vec![PoleTerm { p: cr(0.4), residues: vec![from_rows(1, 1, &[cr(-0.5)])] }],
            rho0j: vec![from_rows(1, 1, &[cr(0.2)]), from_rows(1, 1, &[cr(0.1)])],
        };
        let bb = BuildingBlocks::build(&pd, &pd, &tol()).unwrap();
        assert!(phi_all(&bb, 1).is_err());
    }
}
