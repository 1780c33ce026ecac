//! Forward/backward MA and AR coefficient series and autocovariances.
//!
//! The forward series come straight from h: c_k are the Taylor coefficients
//! of h and a_k those of -h^{-1}. The backward series belong to
//! h~(z) = {h_sharp(conj z)}^* and are produced from the second factor's
//! pole data. Closed forms for a_n in terms of the pole data are used both
//! as the production path and as a cross-check against the Taylor recursion.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::model::{InversePoleData, RationalMatrix};
use crate::Tolerances;

/// Truncated series data for one model, with a certified exponential tail.
#[derive(Debug, Clone)]
pub struct SeriesCoefficients {
    /// forward MA: h(z) = sum z^k c[k]
    pub c: Vec<CMatrix>,
    /// forward AR: -h(z)^{-1} = sum z^k a[k]
    pub a: Vec<CMatrix>,
    /// backward MA: h~(z) = sum z^k c_tilde[k]
    pub c_tilde: Vec<CMatrix>,
    /// backward AR: -h~(z)^{-1} = sum z^k a_tilde[k]
    pub a_tilde: Vec<CMatrix>,
    /// fitted envelope ||a_k||, ||c_k|| <= tail_coef * tail_ratio^k
    pub tail_coef: f64,
    pub tail_ratio: f64,
}

impl SeriesCoefficients {
    pub fn dim(&self) -> usize {
        self.c[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }
}

/// Closed-form a_n from the pole data (the production path for n >= 1):
/// a_n = sum_mu sum_j binom(n+j-1, j-1) conj(p_mu)^n rho_{mu,j}, plus
/// rho0_n while n <= m0. a_0 = rho0 + sum rho_{mu,j}.
pub fn ar_coefficient(pd: &InversePoleData, n: usize) -> CMatrix {
    ar_like(pd, n, false)
}

/// Backward analogue from the second factor's pole data:
/// a~_n = sum binom(n+j-1, j-1) p_mu^n rho~_{mu,j} with
/// rho~_{mu,j} = (rho^sharp_{mu,j})^*.
pub fn ar_coefficient_backward(pd_sharp: &InversePoleData, n: usize) -> CMatrix {
    ar_like(pd_sharp, n, true)
}

fn ar_like(pd: &InversePoleData, n: usize, backward: bool) -> CMatrix {
    let d = pd.dim;
    let mut acc = CMatrix::zeros(d, d);
    if n == 0 {
        let rho0 = if backward { pd.rho0.adjoint() } else { pd.rho0.clone() };
        acc += rho0;
        for pole in &pd.poles {
            for r in &pole.residues {
                acc += if backward { r.adjoint() } else { r.clone() };
            }
        }
        return acc;
    }
    for pole in &pd.poles {
        // forward uses conj(p)^n with rho; backward uses p^n with rho~ = rho^sharp*
        let base = if backward { pole.p } else { pole.p.conj() };
        let pn = base.powu(n as u32);
        let mut binom = 1.0f64; // binom(n + j - 1, j - 1), j = 1
        for (jm1, r) in pole.residues.iter().enumerate() {
            let j = jm1 + 1;
            if j > 1 {
                binom *= (n + j - 1) as f64 / (j - 1) as f64;
            }
            let factor = pn * binom;
            let term = if backward { r.adjoint() } else { r.clone() };
            acc += term.map(|e| e * factor);
        }
    }
    if n <= pd.rho0j.len() {
        let extra = &pd.rho0j[n - 1];
        acc += if backward { extra.adjoint() } else { extra.clone() };
    }
    acc
}

/// Taylor coefficients of h_sharp at 0 from its inverse's pole data, by
/// power-series inversion of the exactly known series of h_sharp^{-1}.
pub fn sharp_taylor(pd_sharp: &InversePoleData, count: usize) -> Result<Vec<CMatrix>> {
    let d = pd_sharp.dim;
    // g_k: h_sharp^{-1}(z) = sum z^k g_k, i.e. g_k = -a^sharp_k with the
    // same closed form as the forward AR coefficients of the sharp data
    let g: Vec<CMatrix> = (0..count).map(|k| -ar_coefficient(pd_sharp, k)).collect();
    let g0_inv = linalg::inverse(&g[0])
        .map_err(|_| Error::InvalidInput("h_sharp(0) is singular".into()))?;
    let mut s: Vec<CMatrix> = Vec::with_capacity(count);
    s.push(g0_inv.clone());
    for k in 1..count {
        let mut acc = CMatrix::zeros(d, d);
        for j in 1..=k {
            acc += &g[j] * &s[k - j];
        }
        s.push(-&g0_inv * acc);
    }
    Ok(s)
}

/// Build the full series set. `n_min` is a lower bound on the truncation;
/// the actual length extends until the fitted envelope certifies a tail
/// below `tol.series_tail`.
pub fn series_coefficients(
    h: &RationalMatrix,
    pd: &InversePoleData,
    pd_sharp: Option<&InversePoleData>,
    n_min: usize,
    tol: &Tolerances,
) -> Result<SeriesCoefficients> {
    let pd_sharp = pd_sharp.ok_or(Error::InsufficientSharpData)?;
    let m0 = pd.poly_degree();
    let mut n = n_min.max(m0 + 2).max(16);

    loop {
        let a: Vec<CMatrix> = (0..n).map(|k| ar_coefficient(pd, k)).collect();
        let a_tilde: Vec<CMatrix> = (0..n).map(|k| ar_coefficient_backward(pd_sharp, k)).collect();
        let c = h.taylor(n)?;
        let c_tilde = backward_ma(&a_tilde, n)?;

        let norms: Vec<f64> = a
            .iter()
            .zip(&c)
            .map(|(x, y)| linalg::op_norm(x).max(linalg::op_norm(y)))
            .collect();
        if let Some((coef, ratio)) = fit_envelope(&norms) {
            let tail = coef * ratio.powi(n as i32) / (1.0 - ratio);
            if tail < tol.series_tail {
                return Ok(SeriesCoefficients {
                    c,
                    a,
                    c_tilde,
                    a_tilde,
                    tail_coef: coef,
                    tail_ratio: ratio,
                });
            }
        }
        n *= 2;
        if n > 1 << 16 {
            return Err(Error::TailNotConverged { target: tol.series_tail });
        }
    }
}

/// c~ from a~ via h~ (-h~^{-1}) = -I: c~_0 = -a~_0^{-1},
/// c~_k = -(sum_{j<k} c~_j a~_{k-j}) a~_0^{-1}.
fn backward_ma(a_tilde: &[CMatrix], count: usize) -> Result<Vec<CMatrix>> {
    let d = a_tilde[0].nrows();
    let a0_inv = linalg::inverse(&a_tilde[0])
        .map_err(|_| Error::InvalidInput("backward AR coefficient a~_0 is singular".into()))?;
    let mut out: Vec<CMatrix> = Vec::with_capacity(count);
    out.push(-a0_inv.clone());
    for k in 1..count {
        let mut acc = CMatrix::zeros(d, d);
        for j in 0..k {
            acc += &out[j] * &a_tilde[k - j];
        }
        out.push(-acc * &a0_inv);
    }
    Ok(out)
}

/// Least-squares fit of log ||x_k|| ~ log C + k log r over the trailing
/// nonzero entries. All-zero tails count as a perfect fit with ratio ~0.
pub fn fit_envelope(norms: &[f64]) -> Option<(f64, f64)> {
    let window = 10.min(norms.len());
    let tail = &norms[norms.len() - window..];
    let floor = 1e-290;
    if tail.iter().all(|&v| v <= floor) {
        return Some((0.0, 1e-16));
    }
    let pts: Vec<(f64, f64)> = norms
        .iter()
        .enumerate()
        .skip(norms.len().saturating_sub(window))
        .filter(|(_, &v)| v > floor)
        .map(|(k, &v)| (k as f64, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let ratio = slope.exp();
    if !(0.0..1.0).contains(&ratio) {
        return None;
    }
    // inflate the envelope so it dominates every fitted point
    let mut coef = intercept.exp();
    for (k, v) in norms.iter().enumerate() {
        if *v > floor {
            coef = coef.max(v / ratio.powi(k as i32));
        }
    }
    Some((coef, ratio.max(1e-16)))
}

/// gamma(k) = sum_{j >= 0} c_{k+j} c_j^* for k >= 0, truncated with a
/// certified exponential tail; gamma(-k) = gamma(k)^*.
pub fn autocovariance(series: &SeriesCoefficients, k: i64, tol: f64) -> Result<CMatrix> {
    if k < 0 {
        return Ok(autocovariance(series, -k, tol)?.adjoint());
    }
    let k = k as usize;
    let d = series.dim();
    let n = series.c.len();
    let mut acc = CMatrix::zeros(d, d);
    if k < n {
        for j in 0..n - k {
            acc += &series.c[k + j] * series.c[j].adjoint();
        }
    }
    let tail = tail_bound(series, k, n);
    if tail > tol {
        return Err(Error::TailNotConverged { target: tol });
    }
    Ok(acc)
}

/// Bound sum over the uncomputed products ||c_{k+j}|| ||c_j|| by the fitted
/// envelope.
fn tail_bound(series: &SeriesCoefficients, k: usize, n: usize) -> f64 {
    let c = series.tail_coef;
    let r = series.tail_ratio;
    if c == 0.0 {
        return 0.0;
    }
    let start = n.saturating_sub(k);
    // sum_{j >= start} C^2 r^{k + 2j} = C^2 r^{k + 2 start} / (1 - r^2)
    c * c * r.powi((k + 2 * start) as i32) / (1.0 - r * r)
}

/// Cached gamma(k) table for |k| <= k_max.
#[derive(Debug, Clone)]
pub struct CovarianceTable {
    gammas: Vec<CMatrix>,
}

impl CovarianceTable {
    pub fn build(series: &SeriesCoefficients, k_max: usize, tol: f64) -> Result<Self> {
        let gammas = (0..=k_max)
            .map(|k| autocovariance(series, k as i64, tol))
            .collect::<Result<Vec<_>>>()?;
        Ok(CovarianceTable { gammas })
    }

    pub fn k_max(&self) -> usize {
        self.gammas.len() - 1
    }

    pub fn get(&self, k: i64) -> CMatrix {
        if k >= 0 {
            self.gammas[k as usize].clone()
        } else {
            self.gammas[(-k) as usize].adjoint()
        }
    }

    pub fn dim(&self) -> usize {
        self.gammas[0].nrows()
    }
}
