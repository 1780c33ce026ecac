//! Multivariate Durbin-Levinson (Whittle) recursion and the dense
//! block-Toeplitz Yule-Walker solve it is checked against.

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::series::CovarianceTable;

/// Run the recursion up to `n_max`, returning the full triangle: row n
/// (1-based) holds phi_{n,1..n}.
///
/// State per order n: forward coefficients phi_{n,j} of X_{-j} predicting
/// X_0, backward coefficients psi_{n,j} of X_{-j} predicting X_{-n-1}, and
/// the innovation covariances V_n (forward) and V~_n (backward). With
/// Delta_{n+1} = gamma(n+1) - sum_j phi_{n,j} gamma(n+1-j):
///
///   phi_{n+1,n+1} = Delta V~_n^{-1},  phi_{n+1,j} = phi_{n,j} - phi_{n+1,n+1} psi_{n,j}
///   psi_{n+1,1}   = Delta^* V_n^{-1}, psi_{n+1,j+1} = psi_{n,j} - psi_{n+1,1} phi_{n,j}
///   V_{n+1} = V_n - Delta V~_n^{-1} Delta^*,  V~_{n+1} = V~_n - Delta^* V_n^{-1} Delta.
pub fn durbin_levinson_all(cov: &CovarianceTable, n_max: usize) -> Result<Vec<Vec<CMatrix>>> {
    let d = cov.dim();
    let mut phi: Vec<CMatrix> = Vec::new();
    let mut psi: Vec<CMatrix> = Vec::new();
    let mut v = cov.get(0);
    let mut v_tilde = cov.get(0);
    if linalg::herm_min_eigenvalue(&v) <= 0.0 {
        return Err(Error::NotPositiveDefinite { step: 0 });
    }
    let mut out: Vec<Vec<CMatrix>> = Vec::with_capacity(n_max);

    for n in 0..n_max {
        let mut delta = cov.get((n + 1) as i64);
        for (j, phi_j) in phi.iter().enumerate() {
            delta -= phi_j * cov.get((n - j) as i64);
        }
        let v_tilde_inv = linalg::inverse(&v_tilde)
            .map_err(|_| Error::NotPositiveDefinite { step: n + 1 })?;
        let v_inv =
            linalg::inverse(&v).map_err(|_| Error::NotPositiveDefinite { step: n + 1 })?;
        let last = &delta * &v_tilde_inv;
        let back_first = delta.adjoint() * &v_inv;

        let mut phi_next: Vec<CMatrix> = Vec::with_capacity(n + 1);
        for j in 0..n {
            phi_next.push(&phi[j] - &last * &psi[j]);
        }
        phi_next.push(last.clone());

        let mut psi_next: Vec<CMatrix> = Vec::with_capacity(n + 1);
        psi_next.push(back_first.clone());
        for j in 0..n {
            psi_next.push(&psi[j] - &back_first * &phi[j]);
        }

        v = &v - &last * delta.adjoint();
        v_tilde = &v_tilde - &back_first * &delta;
        let floor = -1e-10 * linalg::op_norm(&cov.get(0));
        if linalg::herm_min_eigenvalue(&v) <= floor
            || linalg::herm_min_eigenvalue(&v_tilde) <= floor
        {
            return Err(Error::NotPositiveDefinite { step: n + 1 });
        }

        phi = phi_next;
        psi = psi_next;
        out.push(phi.clone());
        debug_assert_eq!(phi[0].nrows(), d);
    }
    Ok(out)
}

/// Convenience: only the final row phi_{n,1..n}.
pub fn durbin_levinson(cov: &CovarianceTable, n: usize) -> Result<Vec<CMatrix>> {
    Ok(durbin_levinson_all(cov, n)?.pop().expect("n >= 1"))
}

/// Dense block solve of the Yule-Walker system
/// sum_j phi_{n,j} gamma(m - j) = gamma(m), m = 1..n, via the adjoint
/// system stacked as an nd x nd matrix. Second witness for the recursion.
pub fn yule_walker_dense(cov: &CovarianceTable, n: usize) -> Result<Vec<CMatrix>> {
    let d = cov.dim();
    let mut a = CMatrix::zeros(n * d, n * d);
    let mut b = CMatrix::zeros(n * d, d);
    for m in 1..=n {
        for j in 1..=n {
            // adjoint system: sum_j gamma(j - m) phi_{n,j}^* = gamma(-m)
            a.view_mut(((m - 1) * d, (j - 1) * d), (d, d))
                .copy_from(&cov.get(j as i64 - m as i64));
        }
        b.view_mut(((m - 1) * d, 0), (d, d)).copy_from(&cov.get(-(m as i64)));
    }
    let x = linalg::solve(&a, &b)?;
    Ok((0..n)
        .map(|j| x.view((j * d, 0), (d, d)).adjoint())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cr, from_rows, op_norm};
    use crate::poly::{CPoly, PolyMatrix};
    use crate::series::{series_coefficients, CovarianceTable};
    use crate::Tolerances;

    fn ma1_cov(k_max: usize) -> CovarianceTable {
        let tol = Tolerances::default();
        let num = PolyMatrix::new(
            1,
            vec![from_rows(1, 1, &[cr(1.0)]), from_rows(1, 1, &[cr(0.5)])],
        )
        .unwrap();
        let h = crate::model::RationalMatrix::new(num, CPoly::one(), &tol).unwrap();
        let pd = crate::decompose::decompose_inverse(&h, &tol).unwrap();
        let series = series_coefficients(&h, &pd, Some(&pd), 32, &tol).unwrap();
        CovarianceTable::build(&series, k_max, 1e-11).unwrap()
    }

    #[test]
    fn one_step_ma1() {
        let cov = ma1_cov(4);
        let phi = durbin_levinson(&cov, 1).unwrap();
        assert!((phi[0][(0, 0)] - cr(0.4)).norm() < 1e-12);
    }

    #[test]
    fn recursion_matches_dense_solve() {
        let cov = ma1_cov(60);
        let rows = durbin_levinson_all(&cov, 50).unwrap();
        for n in [1usize, 2, 5, 17, 50] {
            let dense = yule_walker_dense(&cov, n).unwrap();
            let max_dev = rows[n - 1]
                .iter()
                .zip(&dense)
                .map(|(a, b)| op_norm(&(a - b)))
                .fold(0.0f64, f64::max);
            assert!(max_dev < 1e-10, "n = {n}: {max_dev}");
        }
    }

    #[test]
    fn two_step_ma1_against_hand_solve() {
        // solve the 2x2 Toeplitz system by hand:
        // phi1*g0 + phi2*g(-1) = g1; phi1*g1 + phi2*g0 = g2 = 0
        let cov = ma1_cov(4);
        let (g0, g1) = (1.25f64, 0.5f64);
        let det = g0 * g0 - g1 * g1;
        let phi1 = g1 * g0 / det;
        let phi2 = -g1 * g1 / det;
        let phi = durbin_levinson(&cov, 2).unwrap();
        assert!((phi[0][(0, 0)] - cr(phi1)).norm() < 1e-12);
        assert!((phi[1][(0, 0)] - cr(phi2)).norm() < 1e-12);
    }
}
