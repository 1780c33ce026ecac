//! The second outer factor h_sharp of w = h h* = h_sharp^* h_sharp.
//!
//! For d = 1 the second factor equals h. For d >= 2 it is computed on a
//! circle grid: the reversed density w_rev(e^{i theta}) = w(e^{-i theta})
//! is factored into its column-outer factor by a Wilson (Newton-type)
//! iteration, h_sharp(e^{i theta}) = h_col(e^{-i theta})^*, and the result
//! is gauged by a left constant unitary so that h_sharp(0) is Hermitian
//! positive definite. The pole data of h_sharp^{-1} — which lives on the
//! same poles with the same multiplicities as h^{-1} — is then recovered by
//! a linear least-squares fit of the partial-fraction ansatz on the grid.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::model::{InversePoleData, PoleTerm, RationalMatrix};
use crate::series;
use crate::Tolerances;

/// Grid samples, Taylor coefficients, and (once extracted) pole data of the
/// second outer factor.
#[derive(Debug, Clone)]
pub struct SharpFactor {
    pub grid_size: usize,
    /// h_sharp(e^{i theta_g}) for theta_g = 2 pi g / grid_size
    pub samples: Vec<CMatrix>,
    /// Taylor coefficients of h_sharp at 0
    pub taylor: Vec<CMatrix>,
    /// pole data of h_sharp^{-1}, filled by `extract_sharp_poledata`
    pub pole_data: Option<InversePoleData>,
    /// the left unitary applied to reach the h_sharp(0) > 0 gauge
    pub gauge: CMatrix,
    /// relative residual max_g ||h_sharp* h_sharp - w|| / ||w|| on the grid
    pub factor_residual: f64,
    /// residual of the pole-data least-squares fit, when extracted
    pub fit_residual: Option<f64>,
}

impl SharpFactor {
    /// h_sharp(z) by Taylor summation (|z| < 1; prefer `eval_from_poledata`
    /// near the boundary).
    pub fn eval_taylor(&self, z: Complex64) -> CMatrix {
        let d = self.taylor[0].nrows();
        let mut acc = CMatrix::zeros(d, d);
        let mut zk = Complex64::new(1.0, 0.0);
        for t in &self.taylor {
            acc += t.map(|e| e * zk);
            zk *= z;
        }
        acc
    }

    /// h_sharp(z) as the inverse of the fitted partial-fraction ansatz.
    pub fn eval_from_poledata(&self, z: Complex64) -> Result<CMatrix> {
        let pd = self.pole_data.as_ref().ok_or(Error::InsufficientSharpData)?;
        let inv = pd.eval(z)?;
        linalg::inverse(&inv)
    }

    /// Replace h_sharp by U h_sharp for a constant unitary U (the pole data
    /// transforms as rho -> rho U*).
    pub fn apply_gauge(&self, u: &CMatrix) -> SharpFactor {
        let u_adj = u.adjoint();
        let pole_data = self.pole_data.as_ref().map(|pd| InversePoleData {
            dim: pd.dim,
            rho0: &pd.rho0 * &u_adj,
            poles: pd
                .poles
                .iter()
                .map(|t| PoleTerm {
                    p: t.p,
                    residues: t.residues.iter().map(|r| r * &u_adj).collect(),
                })
                .collect(),
            rho0j: pd.rho0j.iter().map(|r| r * &u_adj).collect(),
        });
        SharpFactor {
            grid_size: self.grid_size,
            samples: self.samples.iter().map(|s| u * s).collect(),
            taylor: self.taylor.iter().map(|t| u * t).collect(),
            pole_data,
            gauge: u * &self.gauge,
            factor_residual: self.factor_residual,
            fit_residual: self.fit_residual,
        }
    }
}

/// Compute h_sharp samples and Taylor coefficients. `grid_size` must be a
/// power of two >= 256; the grid is doubled until the samples are stable,
/// failing with `GridTooCoarse` if they never settle.
pub fn factorize_sharp(
    h: &RationalMatrix,
    grid_size: usize,
    tol: &Tolerances,
) -> Result<SharpFactor> {
    if !grid_size.is_power_of_two() || grid_size < 256 {
        return Err(Error::InvalidInput("grid size must be a power of two >= 256".into()));
    }
    if h.dim() == 1 {
        return univariate_sharp(h, grid_size);
    }

    let mut n = grid_size;
    let mut current = factorize_at(h, n, tol)?;
    loop {
        let doubled = factorize_at(h, 2 * n, tol)?;
        let delta = (0..n)
            .map(|g| linalg::op_norm(&(&current.samples[g] - &doubled.samples[2 * g])))
            .fold(0.0f64, f64::max);
        let scale = current
            .samples
            .iter()
            .map(linalg::op_norm)
            .fold(1.0f64, f64::max);
        if delta <= 1e-9 * scale {
            return Ok(current);
        }
        current = doubled;
        n *= 2;
        if n > 1 << 14 {
            return Err(Error::GridTooCoarse { grid: n, delta });
        }
    }
}

/// Univariate shortcut: h_sharp = h exactly.
fn univariate_sharp(h: &RationalMatrix, grid_size: usize) -> Result<SharpFactor> {
    let samples: Vec<CMatrix> = crate::poly::circle_points(grid_size, 1.0)
        .map(|z| h.eval(z))
        .collect::<Result<_>>()?;
    let taylor = h.taylor(grid_size / 2)?;
    Ok(SharpFactor {
        grid_size,
        samples,
        taylor,
        pole_data: None,
        gauge: linalg::eye(1),
        factor_residual: 0.0,
        fit_residual: None,
    })
}

fn factorize_at(h: &RationalMatrix, n: usize, tol: &Tolerances) -> Result<SharpFactor> {
    let d = h.dim();
    // w_rev_g = w(e^{-i theta_g}) = w at grid index (n - g) % n
    let w_grid: Vec<CMatrix> = crate::poly::circle_points(n, 1.0)
        .map(|z| -> Result<CMatrix> {
            let hv = h.eval(z)?;
            Ok(&hv * hv.adjoint())
        })
        .collect::<Result<_>>()?;
    let w_rev: Vec<CMatrix> = (0..n).map(|g| w_grid[(n - g) % n].clone()).collect();

    let (col_factor, residual) = wilson_factor(&w_rev, tol)?;

    // h_sharp(e^{i theta_g}) = h_col(e^{-i theta_g})^*
    let samples: Vec<CMatrix> = (0..n)
        .map(|g| col_factor[(n - g) % n].adjoint())
        .collect();
    // Taylor of the column factor: t_k = (1/n) sum_g psi_g e^{-i k theta_g};
    // h_sharp taylor s_k = t_k^*
    let t = fourier_coefficients(&col_factor, n / 2);
    let taylor: Vec<CMatrix> = t.iter().map(|m| m.adjoint()).collect();

    // gauge: make h_sharp(0) = taylor[0] Hermitian positive definite
    let u = linalg::polar_unitary(&taylor[0])?.adjoint();
    let sf = SharpFactor {
        grid_size: n,
        samples,
        taylor,
        pole_data: None,
        gauge: linalg::eye(d),
        factor_residual: residual,
        fit_residual: None,
    };
    Ok(sf.apply_gauge(&u))
}

/// Wilson iteration: given Hermitian positive samples s_g of a density on
/// the circle, find the column-outer factor psi (one-sided Fourier support)
/// with psi psi* = s. Each step solves X + X* = psi^{-1} s psi^{-*} + I for
/// the causal part X and updates psi <- psi X; convergence is quadratic.
fn wilson_factor(s: &[CMatrix], tol: &Tolerances) -> Result<(Vec<CMatrix>, f64)> {
    let n = s.len();
    let d = s[0].nrows();
    let scale = s.iter().map(linalg::op_norm).fold(1e-300, f64::max);

    let mut mean = CMatrix::zeros(d, d);
    for m in s {
        mean += m;
    }
    mean /= Complex64::new(n as f64, 0.0);
    let l0 = linalg::cholesky(&mean)
        .map_err(|_| Error::InvalidInput("density mean is not positive definite".into()))?;
    let mut psi: Vec<CMatrix> = vec![l0; n];

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let ifft = planner.plan_fft_inverse(n);

    let max_iter = 200usize;
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        residual = (0..n)
            .map(|g| linalg::op_norm(&(&psi[g] * psi[g].adjoint() - &s[g])))
            .fold(0.0f64, f64::max)
            / scale;
        if residual <= tol.factorization {
            return Ok((psi, residual));
        }

        // G_g = psi^{-1} s psi^{-*} + I
        let mut g_grid: Vec<CMatrix> = Vec::with_capacity(n);
        for g in 0..n {
            let inv = linalg::inverse(&psi[g])?;
            g_grid.push(&inv * &s[g] * inv.adjoint() + linalg::eye(d));
        }
        // causal part entrywise: halve DC and Nyquist, zero negative freqs
        let mut x_grid = vec![CMatrix::zeros(d, d); n];
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for r in 0..d {
            for c in 0..d {
                for g in 0..n {
                    buf[g] = g_grid[g][(r, c)];
                }
                fft.process(&mut buf);
                buf[0] *= 0.5;
                buf[n / 2] *= 0.5;
                for item in buf.iter_mut().take(n).skip(n / 2 + 1) {
                    *item = Complex64::new(0.0, 0.0);
                }
                ifft.process(&mut buf);
                for g in 0..n {
                    x_grid[g][(r, c)] = buf[g] / (n as f64);
                }
            }
        }
        for g in 0..n {
            psi[g] = &psi[g] * &x_grid[g];
        }
    }
    Err(Error::NoConvergence {
        target: tol.factorization,
        achieved: residual,
        iterations: max_iter,
    })
}

/// Fourier coefficients t_k = (1/n) sum_g f_g e^{-i k theta_g}, k = 0..count.
fn fourier_coefficients(f: &[CMatrix], count: usize) -> Vec<CMatrix> {
    let n = f.len();
    let d = f[0].nrows();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut out = vec![CMatrix::zeros(d, d); count];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for r in 0..d {
        for c in 0..d {
            for g in 0..n {
                buf[g] = f[g][(r, c)];
            }
            fft.process(&mut buf);
            for (k, item) in out.iter_mut().enumerate() {
                item[(r, c)] = buf[k] / (n as f64);
            }
        }
    }
    out
}

/// Fit the partial-fraction ansatz of h_sharp^{-1} over the grid, imposing
/// the same poles and multiplicities as the pole data of h^{-1}. The basis
/// is shared by all matrix entries, so one least-squares system (via the
/// normal equations, with a condition-number gate) serves the whole matrix.
pub fn extract_sharp_poledata(
    sf: &mut SharpFactor,
    pd: &InversePoleData,
    tol: &Tolerances,
) -> Result<InversePoleData> {
    let d = pd.dim;
    let n = sf.grid_size;
    let m0 = pd.poly_degree();
    let m_total = pd.m_total();
    let cols = 1 + m_total + m0;

    // design matrix over the grid: [1 | (1 - conj(p) z)^{-j} | z^j]
    let mut design = CMatrix::zeros(n, cols);
    let points: Vec<Complex64> = crate::poly::circle_points(n, 1.0).collect();
    for (g, &z) in points.iter().enumerate() {
        design[(g, 0)] = Complex64::new(1.0, 0.0);
        let mut col = 1;
        for pole in &pd.poles {
            let base = Complex64::new(1.0, 0.0) - pole.p.conj() * z;
            let mut factor = Complex64::new(1.0, 0.0);
            for _ in 0..pole.multiplicity() {
                factor /= base;
                design[(g, col)] = factor;
                col += 1;
            }
        }
        let mut zj = Complex64::new(1.0, 0.0);
        for _ in 0..m0 {
            zj *= z;
            design[(g, col)] = zj;
            col += 1;
        }
    }

    // right-hand side: -h_sharp(z_g)^{-1}, all d*d entry positions at once
    let mut rhs = CMatrix::zeros(n, d * d);
    for (g, sample) in sf.samples.iter().enumerate() {
        let inv = linalg::inverse(sample)?;
        for r in 0..d {
            for c in 0..d {
                rhs[(g, r * d + c)] = -inv[(r, c)];
            }
        }
    }

    let normal = design.adjoint() * &design;
    let cond = linalg::condition_number(&normal);
    if cond > 1e10 {
        return Err(Error::IllConditionedBasis { cond });
    }
    let coeffs = linalg::solve(&normal, &(design.adjoint() * &rhs))?;

    let fit = &design * &coeffs;
    let residual = (0..n)
        .map(|g| {
            (0..d * d)
                .map(|e| (fit[(g, e)] - rhs[(g, e)]).norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0f64, f64::max);
    if residual > tol.sharp_fit {
        return Err(Error::ResidualTooLarge { residual, tol: tol.sharp_fit });
    }

    let unpack = |row: usize| -> CMatrix {
        let mut m = CMatrix::zeros(d, d);
        for r in 0..d {
            for c in 0..d {
                m[(r, c)] = coeffs[(row, r * d + c)];
            }
        }
        m
    };

    let rho0 = unpack(0);
    let mut row = 1;
    let mut poles = Vec::with_capacity(pd.poles.len());
    for pole in &pd.poles {
        let mut residues = Vec::with_capacity(pole.multiplicity());
        for _ in 0..pole.multiplicity() {
            residues.push(unpack(row));
            row += 1;
        }
        poles.push(PoleTerm { p: pole.p, residues });
    }
    let mut rho0j = Vec::with_capacity(m0);
    for _ in 0..m0 {
        rho0j.push(unpack(row));
        row += 1;
    }

    let sharp_pd = InversePoleData { dim: d, rho0, poles, rho0j };
    sharp_pd.validate(tol)?;
    sf.pole_data = Some(sharp_pd.clone());
    sf.fit_residual = Some(residual);
    Ok(sharp_pd)
}

/// Pole-correspondence check
/// rho_{mu, m_mu} h_sharp(p_mu)^* = h(p_mu)^* rho^sharp_{mu, m_mu}
/// for mu = 1..K, and at p_0 := 0 when m0 >= 1.
#[derive(Debug, Clone)]
pub struct CorrespondenceReport {
    /// (mu, relative residual), mu = 0 reported last when present
    pub residuals: Vec<(usize, f64)>,
    pub max_residual: f64,
}

pub fn verify_pole_correspondence(
    h: &RationalMatrix,
    sf: &SharpFactor,
    pd: &InversePoleData,
    pd_sharp: &InversePoleData,
) -> Result<CorrespondenceReport> {
    let mut residuals = Vec::new();
    for (idx, pole) in pd.poles.iter().enumerate() {
        let mu = idx + 1;
        let m = pole.multiplicity();
        let h_at = h.eval(pole.p)?;
        let sharp_at = sf.eval_from_poledata(pole.p)?;
        let lhs = pole.residues[m - 1].clone() * sharp_at.adjoint();
        let rhs = h_at.adjoint() * &pd_sharp.poles[idx].residues[m - 1];
        let scale = linalg::op_norm(&lhs).max(linalg::op_norm(&rhs)).max(1e-30);
        residuals.push((mu, linalg::op_norm(&(lhs - rhs)) / scale));
    }
    let m0 = pd.poly_degree();
    if m0 >= 1 {
        let zero = Complex64::new(0.0, 0.0);
        let h_at = h.eval(zero)?;
        let sharp_at = sf.eval_from_poledata(zero)?;
        let lhs = pd.rho0j[m0 - 1].clone() * sharp_at.adjoint();
        let rhs = h_at.adjoint() * &pd_sharp.rho0j[m0 - 1];
        let scale = linalg::op_norm(&lhs).max(linalg::op_norm(&rhs)).max(1e-30);
        residuals.push((0, linalg::op_norm(&(lhs - rhs)) / scale));
    }
    let max_residual = residuals.iter().map(|(_, r)| *r).fold(0.0f64, f64::max);
    Ok(CorrespondenceReport { residuals, max_residual })
}

/// Validate user-supplied second-factor pole data instead of factorizing:
/// same poles and multiplicities as pd, and the reconstructed factor must
/// reproduce the density on the grid.
pub fn sharp_from_supplied(
    h: &RationalMatrix,
    pd: &InversePoleData,
    supplied: &InversePoleData,
    grid_size: usize,
    tol: &Tolerances,
) -> Result<SharpFactor> {
    if supplied.dim != pd.dim
        || supplied.poly_degree() != pd.poly_degree()
        || supplied.pole_count() != pd.pole_count()
    {
        return Err(Error::InvalidInput(
            "supplied second-factor pole data has a different pole structure".into(),
        ));
    }
    for (a, b) in pd.poles.iter().zip(&supplied.poles) {
        if (a.p - b.p).norm() > 1e-6 || a.multiplicity() != b.multiplicity() {
            return Err(Error::InvalidInput(
                "supplied second-factor poles do not match the model's poles".into(),
            ));
        }
    }
    supplied.validate(tol)?;
    let samples: Vec<CMatrix> = crate::poly::circle_points(grid_size, 1.0)
        .map(|z| -> Result<CMatrix> { linalg::inverse(&supplied.eval(z)?) })
        .collect::<Result<_>>()?;
    // w-reconstruction check
    let mut worst = 0.0f64;
    for (g, z) in crate::poly::circle_points(grid_size, 1.0).enumerate() {
        let hv = h.eval(z)?;
        let w = &hv * hv.adjoint();
        let rec = samples[g].adjoint() * &samples[g];
        worst = worst.max(linalg::op_norm(&(rec - &w)) / linalg::op_norm(&w).max(1e-30));
    }
    if worst > tol.sharp_fit.max(1e-8) {
        return Err(Error::ResidualTooLarge { residual: worst, tol: tol.sharp_fit });
    }
    let taylor = series::sharp_taylor(supplied, grid_size / 2)?;
    Ok(SharpFactor {
        grid_size,
        samples,
        taylor,
        pole_data: Some(supplied.clone()),
        gauge: linalg::eye(pd.dim),
        factor_residual: worst,
        fit_residual: Some(0.0),
    })
}

/// Attach pole data for the univariate case, where h_sharp = h means the
/// sharp pole data is exactly the model's own.
pub fn attach_univariate_poledata(sf: &mut SharpFactor, pd: &InversePoleData) {
    if sf.pole_data.is_none() {
        sf.pole_data = Some(pd.clone());
        sf.fit_residual = Some(0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cr, eye, from_rows, op_norm};
    use crate::poly::{circle_points, CPoly, PolyMatrix};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn ma1() -> RationalMatrix {
        let num = PolyMatrix::new(
            1,
            vec![from_rows(1, 1, &[cr(1.0)]), from_rows(1, 1, &[cr(0.5)])],
        )
        .unwrap();
        RationalMatrix::new(num, CPoly::one(), &tol()).unwrap()
    }

    fn bivariate_single_pole(p: f64) -> (RationalMatrix, InversePoleData) {
        let planted = InversePoleData {
            dim: 2,
            rho0: from_rows(2, 2, &[cr(-1.0), cr(0.0), cr(0.0), cr(-1.0)]),
            poles: vec![crate::model::PoleTerm {
                p: cr(p),
                residues: vec![from_rows(2, 2, &[cr(0.0), cr(0.0), cr(1.0), cr(0.0)])],
            }],
            rho0j: vec![],
        };
        let h = planted.to_rational(&tol()).unwrap();
        (h, planted)
    }

    #[test]
    fn univariate_sharp_equals_h() {
        let h = ma1();
        let sf = factorize_sharp(&h, 256, &tol()).unwrap();
        for (g, z) in circle_points(256, 1.0).enumerate() {
            let hv = h.eval(z).unwrap();
            assert!(op_norm(&(&sf.samples[g] - &hv)) < 1e-14);
        }
    }

    #[test]
    fn bivariate_factorization_reconstructs_w() {
        let (h, _) = bivariate_single_pole(0.4);
        let sf = factorize_sharp(&h, 256, &tol()).unwrap();
        let mut worst = 0.0f64;
        for (g, z) in circle_points(sf.grid_size, 1.0).enumerate() {
            let hv = h.eval(z).unwrap();
            let w = &hv * hv.adjoint();
            let rec = sf.samples[g].adjoint() * &sf.samples[g];
            worst = worst.max(op_norm(&(rec - &w)) / op_norm(&w));
        }
        assert!(worst < 1e-9, "w reconstruction {worst}");
        // gauge: h_sharp(0) Hermitian positive definite
        let s0 = &sf.taylor[0];
        assert!(op_norm(&(s0 - s0.adjoint())) < 1e-10);
        assert!(linalg::herm_min_eigenvalue(s0) > 0.0);
    }

    #[test]
    fn bivariate_sharp_matches_closed_form_up_to_gauge() {
        // the known closed form for this model, with
        // r = 1/sqrt(1 - p^2 + p^4): compare gauge-invariantly
        let p = 0.4;
        let (h, pd) = bivariate_single_pole(p);
        let mut sf = factorize_sharp(&h, 512, &tol()).unwrap();
        let sharp_pd = extract_sharp_poledata(&mut sf, &pd, &tol()).unwrap();
        assert!(sf.fit_residual.unwrap() < 1e-9);

        let r = 1.0 / (1.0 - p * p + p.powi(4)).sqrt();
        let rho_sharp_11 = from_rows(2, 2, &[cr(-r), cr(0.0), cr(r * (1.0 - p * p)), cr(0.0)]);
        // operator norm is unitary-invariant
        let got = op_norm(&sharp_pd.poles[0].residues[0]);
        let want = op_norm(&rho_sharp_11);
        assert!((got - want).abs() < 1e-8, "{got} vs {want}");
    }

    #[test]
    fn pole_correspondence_holds() {
        let (h, pd) = bivariate_single_pole(0.4);
        let mut sf = factorize_sharp(&h, 512, &tol()).unwrap();
        let sharp_pd = extract_sharp_poledata(&mut sf, &pd, &tol()).unwrap();
        let report = verify_pole_correspondence(&h, &sf, &pd, &sharp_pd).unwrap();
        assert!(report.max_residual < 1e-8, "residual {}", report.max_residual);
    }

    #[test]
    fn univariate_poledata_roundtrip() {
        let h = ma1();
        let pd = crate::decompose::decompose_inverse(&h, &tol()).unwrap();
        let mut sf = factorize_sharp(&h, 256, &tol()).unwrap();
        let sharp_pd = extract_sharp_poledata(&mut sf, &pd, &tol()).unwrap();
        // h_sharp = h, so the sharp pole data equals the model's own
        assert!(op_norm(&(&sharp_pd.rho0 - &pd.rho0)) < 1e-10);
        assert!(
            op_norm(&(&sharp_pd.poles[0].residues[0] - &pd.poles[0].residues[0])) < 1e-10
        );
        let report = verify_pole_correspondence(&h, &sf, &pd, &sharp_pd).unwrap();
        assert!(report.max_residual < 1e-10);
    }

    #[test]
    fn gauge_application_is_consistent() {
        let (h, pd) = bivariate_single_pole(0.4);
        let mut sf = factorize_sharp(&h, 256, &tol()).unwrap();
        extract_sharp_poledata(&mut sf, &pd, &tol()).unwrap();
        // a rotation by a non-trivial unitary
        let u = from_rows(
            2,
            2,
            &[
                Complex64::new(0.6, 0.0),
                Complex64::new(0.0, 0.8),
                Complex64::new(0.0, 0.8),
                Complex64::new(0.6, 0.0),
            ],
        );
        assert!(op_norm(&(u.adjoint() * &u - eye(2))) < 1e-12);
        let gauged = sf.apply_gauge(&u);
        // samples transform, the reconstructed w does not
        for g in [0usize, 10, 100] {
            let w0 = sf.samples[g].adjoint() * &sf.samples[g];
            let w1 = gauged.samples[g].adjoint() * &gauged.samples[g];
            assert!(op_norm(&(w0 - w1)) < 1e-12);
        }
        // ansatz inverse transforms consistently: (U h)^{-1} = h^{-1} U*
        let z = cr(0.3);
        let a = gauged.eval_from_poledata(z).unwrap();
        let b = &u * sf.eval_from_poledata(z).unwrap();
        assert!(op_norm(&(a - b)) < 1e-10);
    }
}
