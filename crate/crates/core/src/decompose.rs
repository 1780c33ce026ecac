//! Extraction of the pole/residue decomposition of h^{-1}.
//!
//! Pole candidates are coarse clusters of the det(numerator) roots outside
//! the closed unit disk. A root of multiplicity m carries an intrinsic
//! eps^(1/m) location error when read from polynomial coefficients, so the
//! candidate center is only a seed: the true pole is relocated from contour
//! samples of h^{-1} itself (which are accurate to rounding away from the
//! pole) by a recentering iteration on contour moments, after which the
//! Laurent coefficients and residues follow from the same samples. The
//! polynomial part is read off by exact DFT interpolation after subtracting
//! every pole term on a circle that clears all poles.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::model::{InversePoleData, PoleTerm, RationalMatrix};
use crate::poly::circle_points;
use crate::Tolerances;

/// Relative single-linkage radius for grouping split root clouds. det(num)
/// can carry a pole with multiplicity up to d * m, whose computed roots
/// scatter by roughly |z| * eps^(1/(d m)).
const COARSE_CLUSTER_REL: f64 = 0.02;

/// Decompose h^{-1} into the partial-fraction pole data. Requires the
/// condition check to pass.
pub fn decompose_inverse(h: &RationalMatrix, tol: &Tolerances) -> Result<InversePoleData> {
    let d = h.dim();
    let det_num = h.numerator().determinant();
    let clusters = det_num.polished_clustered_roots(COARSE_CLUSTER_REL)?;
    let candidates: Vec<(Complex64, usize)> = clusters
        .into_iter()
        .filter(|(z, _)| z.norm() > 1.0 + tol.unit_disk)
        .collect();

    for i in 0..candidates.len() {
        for j in i + 1..candidates.len() {
            let (a, b) = (candidates[i].0, candidates[j].0);
            if (a - b).norm() <= 10.0 * tol.pole_cluster {
                return Err(Error::PoleClusterAmbiguous { a, b });
            }
        }
    }

    let mut poles: Vec<PoleTerm> = Vec::new();
    for (idx, &(center, order_bound)) in candidates.iter().enumerate() {
        let mut sep = center.norm() - 1.0;
        for (jdx, &(other, _)) in candidates.iter().enumerate() {
            if jdx != idx {
                sep = sep.min((center - other).norm());
            }
        }
        let radius = 0.25 * sep;
        let contour = ContourSamples::refine(h, center, radius, order_bound + 1, tol)?;

        let Some((z_star, top_order)) = contour.locate_pole(order_bound, tol)? else {
            continue; // removable cluster, no actual pole of h^{-1}
        };
        let laurent = contour.matrix_moments(z_star, top_order);
        let scale = laurent
            .iter()
            .map(linalg::op_norm)
            .fold(contour.sample_scale(), f64::max);
        let mut mult = 0;
        for j in (1..=top_order).rev() {
            if linalg::op_norm(&laurent[j - 1]) > tol.nonzero_floor * scale {
                mult = j;
                break;
            }
        }
        if mult == 0 {
            continue;
        }
        let p = Complex64::new(1.0, 0.0) / z_star.conj();
        let p_bar = p.conj();
        let mut residues = Vec::with_capacity(mult);
        for j in 1..=mult {
            // rho_{mu,j} = -(-conj(p))^j L_{-j}
            let factor = -(-p_bar).powu(j as u32);
            residues.push(laurent[j - 1].map(|e| e * factor));
        }
        let lead = linalg::op_norm(&residues[mult - 1]);
        if lead <= tol.nonzero_floor * scale {
            return Err(Error::DegenerateLeadingResidue { pole: p, norm: lead });
        }
        poles.push(PoleTerm { p, residues });
    }

    let (rho0, rho0j) = polynomial_part(h, &poles, tol)?;
    let mut pd = InversePoleData { dim: d, rho0, poles, rho0j };
    pd.sort_poles();
    pd.validate(tol)?;
    Ok(pd)
}

/// h^{-1} sampled on a circle, with enough nodes that the contour moments
/// are stable under node doubling.
struct ContourSamples {
    center: Complex64,
    radius: f64,
    /// z_g on the contour
    points: Vec<Complex64>,
    /// h^{-1}(z_g)
    values: Vec<CMatrix>,
    /// fixed generic scalarization of the matrix samples
    scalars: Vec<Complex64>,
}

impl ContourSamples {
    fn refine(
        h: &RationalMatrix,
        center: Complex64,
        radius: f64,
        orders: usize,
        tol: &Tolerances,
    ) -> Result<Self> {
        let weights = generic_weights(h.dim());
        let mut nodes = 256usize;
        let mut previous: Option<Vec<Complex64>> = None;
        loop {
            let points: Vec<Complex64> =
                circle_points(nodes, radius).map(|o| center + o).collect();
            let values: Vec<CMatrix> = points
                .iter()
                .map(|&z| h.eval_inverse(z))
                .collect::<Result<_>>()?;
            let scalars: Vec<Complex64> = values
                .iter()
                .map(|m| {
                    m.iter()
                        .zip(weights.iter())
                        .map(|(v, w)| v * w)
                        .sum::<Complex64>()
                })
                .collect();
            let contour = ContourSamples { center, radius, points, values, scalars };
            let moments = contour.scalar_moments(center, orders);
            if let Some(prev) = &previous {
                let scale = moments.iter().map(|m| m.norm()).fold(1.0f64, f64::max);
                let delta = prev
                    .iter()
                    .zip(&moments)
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0f64, f64::max);
                if delta <= tol.contour_agreement * scale {
                    return Ok(contour);
                }
            }
            previous = Some(moments);
            nodes *= 2;
            if nodes > 1 << 16 {
                return Err(Error::NoConvergence {
                    target: tol.contour_agreement,
                    achieved: f64::INFINITY,
                    iterations: 16,
                });
            }
        }
    }

    /// Radius-normalized moments J_j = (1/2 pi i R^{j-1}) \oint psi(z)
    /// (z - about)^{j-1} dz for j = 1..=orders.
    fn scalar_moments(&self, about: Complex64, orders: usize) -> Vec<Complex64> {
        let n = self.points.len() as f64;
        let mut out = vec![Complex64::new(0.0, 0.0); orders];
        for (g, &z) in self.points.iter().enumerate() {
            let dz = z - self.center; // contour tangent factor (z_g - c0)
            let base = (z - about) / self.radius;
            let mut w = dz;
            for item in out.iter_mut() {
                *item += self.scalars[g] * w;
                w *= base;
            }
        }
        for item in out.iter_mut() {
            *item /= n;
        }
        out
    }

    /// Matrix Laurent coefficients L_{-j}, j = 1..=orders, about `pole`
    /// (which must be the only singularity inside the contour).
    fn matrix_moments(&self, pole: Complex64, orders: usize) -> Vec<CMatrix> {
        let d = self.values[0].nrows();
        let n = self.points.len() as f64;
        let mut out = vec![CMatrix::zeros(d, d); orders];
        for (g, &z) in self.points.iter().enumerate() {
            let dz = z - self.center;
            let base = z - pole;
            let mut w = dz;
            for item in out.iter_mut() {
                *item += self.values[g].map(|e| e * w);
                w *= base;
            }
        }
        for item in out.iter_mut() {
            *item /= Complex64::new(n, 0.0);
        }
        out
    }

    fn sample_scale(&self) -> f64 {
        self.values
            .iter()
            .map(linalg::op_norm)
            .fold(1e-30, f64::max)
    }

    /// Find the pole inside the contour, if any, from the scalar moments.
    ///
    /// With psi(z) = sum_{k<=m} c_k (z - z*)^{-k} + analytic and an offset
    /// delta = z* - z_c, the moments about z_c satisfy
    /// I_j = sum_k binom(j-1, k-1) delta^{j-k} c_k, so the top-order ratio
    /// I_{B+1}/I_B = delta * B/(B - m + 1) points at the pole. Iterating the
    /// recentering contracts delta; the working order B steps down as the
    /// top moments sink into the noise floor, reaching B = m where the
    /// update becomes exact to O(delta^2).
    fn locate_pole(
        &self,
        order_bound: usize,
        tol: &Tolerances,
    ) -> Result<Option<(Complex64, usize)>> {
        let noise = 1e-12
            * self
                .scalars
                .iter()
                .map(|s| s.norm())
                .fold(1.0f64, f64::max);
        let mut b = order_bound;
        let mut z = self.center;
        let mut converged = false;
        for _ in 0..400 {
            let moments = self.scalar_moments(z, b + 1);
            let scale = moments.iter().map(|m| m.norm()).fold(noise, f64::max);
            // drop empty top orders
            while b > 0 && moments[b - 1].norm() <= 1e-9 * scale.max(noise) {
                b -= 1;
                if b == 0 {
                    return Ok(None);
                }
                if moments[b - 1].norm() > 1e-9 * scale.max(noise) {
                    break;
                }
            }
            if b == 0 {
                return Ok(None);
            }
            let top = moments[b - 1];
            let above = moments[b];
            if top.norm() <= noise {
                return Ok(None);
            }
            // normalized moments: I_{B+1}/I_B = R * J_{B+1}/J_B
            let mut step = self.radius * (above / top) / (b as f64);
            let cap = 0.5 * self.radius;
            if step.norm() > cap {
                step *= Complex64::new(cap / step.norm(), 0.0);
            }
            z += step;
            if (z - self.center).norm() > 0.9 * self.radius {
                // walked out of the contour: no single pole in here
                return Err(Error::PoleClusterAmbiguous { a: self.center, b: z });
            }
            if step.norm() <= 1e-14 * z.norm().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence {
                target: 1e-14,
                achieved: f64::INFINITY,
                iterations: 400,
            });
        }
        let _ = tol;
        Ok(Some((z, b)))
    }
}

/// Fixed generic weights for scalarizing matrix samples; chosen once so the
/// functional does not annihilate any particular residue direction.
fn generic_weights(d: usize) -> Vec<Complex64> {
    (0..d * d)
        .map(|i| {
            let t = 0.37 + 1.31 * (i as f64);
            Complex64::new(t.cos() + 0.25, t.sin() - 0.1)
        })
        .collect()
}

/// Recover rho0 and the polynomial part rho0j by sampling
/// g(z) = -h^{-1}(z) - sum pole terms on a circle clear of all poles and
/// interpolating the exact-degree polynomial.
fn polynomial_part(
    h: &RationalMatrix,
    poles: &[PoleTerm],
    tol: &Tolerances,
) -> Result<(CMatrix, Vec<CMatrix>)> {
    let d = h.dim();
    // degree bound of h^{-1} = den * adj(num) / det(num) at infinity
    let adj_deg = (d.saturating_sub(1)) * h.numerator().degree();
    let det_deg = h.numerator().determinant().degree();
    let bound_i = h.denominator().degree() as i64 + adj_deg as i64 - det_deg as i64;
    let bound = bound_i.max(0) as usize;

    // a fixed large circle, nudged outward until it clears every pole of
    // h^{-1} by a safe margin (a pole can land exactly on |z| = 2)
    let mut radius = 2.0f64;
    let pole_moduli: Vec<f64> = poles.iter().map(|t| (1.0 / t.p.conj()).norm()).collect();
    while pole_moduli.iter().any(|m| (m - radius).abs() < 0.25) {
        radius *= 1.37;
    }

    let n = (bound + 8).next_power_of_two();
    let samples: Vec<CMatrix> = circle_points(n, radius)
        .map(|z| -> Result<CMatrix> {
            let mut g = -h.eval_inverse(z)?;
            for pole in poles {
                let base = Complex64::new(1.0, 0.0) - pole.p.conj() * z;
                let mut factor = Complex64::new(1.0, 0.0);
                for j in 1..=pole.multiplicity() {
                    factor /= base;
                    g -= pole.residues[j - 1].map(|e| e * factor);
                }
            }
            Ok(g)
        })
        .collect::<Result<_>>()?;

    // entrywise inverse DFT
    let mut coeffs = vec![CMatrix::zeros(d, d); n];
    for r in 0..d {
        for c in 0..d {
            let entry: Vec<Complex64> = samples.iter().map(|m| m[(r, c)]).collect();
            for (k, v) in crate::poly::inverse_dft(&entry, radius).into_iter().enumerate() {
                coeffs[k][(r, c)] = v;
            }
        }
    }

    let scale = coeffs
        .iter()
        .map(linalg::op_norm)
        .fold(1.0f64, f64::max);
    let mut m0 = 0usize;
    for j in (1..=bound.min(n - 1)).rev() {
        if linalg::op_norm(&coeffs[j]) > tol.nonzero_floor * scale {
            m0 = j;
            break;
        }
    }
    let rho0 = coeffs[0].clone();
    let rho0j = coeffs[1..=m0].to_vec();
    Ok((rho0, rho0j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cr, from_rows, op_norm};
    use crate::poly::{CPoly, PolyMatrix};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn univariate(num: &[f64], den: &[f64]) -> RationalMatrix {
        let num = PolyMatrix::new(1, num.iter().map(|&c| from_rows(1, 1, &[cr(c)])).collect()).unwrap();
        let den = CPoly::new(den.iter().map(|&c| cr(c)).collect());
        RationalMatrix::new(num, den, &tol()).unwrap()
    }

    #[test]
    fn ma1_decomposition() {
        // h = 1 + 0.5 z: K=1, m0=0, p1=-0.5, rho0=0, rho_{1,1}=-1
        let h = univariate(&[1.0, 0.5], &[1.0]);
        let pd = decompose_inverse(&h, &tol()).unwrap();
        assert_eq!(pd.pole_count(), 1);
        assert_eq!(pd.poly_degree(), 0);
        assert_eq!(pd.poles[0].multiplicity(), 1);
        assert!((pd.poles[0].p - cr(-0.5)).norm() < 1e-10);
        assert!(op_norm(&pd.rho0) < 1e-10);
        assert!((pd.poles[0].residues[0][(0, 0)] - cr(-1.0)).norm() < 1e-10);
    }

    #[test]
    fn quadratic_over_linear_has_poly_part() {
        // h = (1 + 0.5 z)/((1 - 0.3 z)(1 - 0.2 z)):
        // h^{-1} = 0.12 z - 1.24 + 2.24/(1 + 0.5 z)
        // => rho0 = 1.24, rho_{1,1} = -2.24, rho01 = -0.12, p1 = -0.5
        let h = univariate(&[1.0, 0.5], &[1.0, -0.5, 0.06]);
        let pd = decompose_inverse(&h, &tol()).unwrap();
        assert_eq!(pd.pole_count(), 1);
        assert_eq!(pd.poly_degree(), 1);
        assert!((pd.poles[0].p - cr(-0.5)).norm() < 1e-10);
        assert!((pd.rho0[(0, 0)] - cr(1.24)).norm() < 1e-9);
        assert!((pd.poles[0].residues[0][(0, 0)] - cr(-2.24)).norm() < 1e-9);
        assert!((pd.rho0j[0][(0, 0)] - cr(-0.12)).norm() < 1e-9);
    }

    #[test]
    fn bivariate_single_pole_decomposition() {
        // lower-triangular bivariate model: K=1, m0=0, m1=1, p1=p,
        // rho0 = -I, rho_{1,1} = [[0,0],[1,0]]
        let p = cr(0.4);
        let planted = InversePoleData {
            dim: 2,
            rho0: from_rows(2, 2, &[cr(-1.0), cr(0.0), cr(0.0), cr(-1.0)]),
            poles: vec![PoleTerm {
                p,
                residues: vec![from_rows(2, 2, &[cr(0.0), cr(0.0), cr(1.0), cr(0.0)])],
            }],
            rho0j: vec![],
        };
        let h = planted.to_rational(&tol()).unwrap();
        assert!(h.check_condition_c(&tol()).passed());
        let pd = decompose_inverse(&h, &tol()).unwrap();
        assert_eq!(pd.pole_count(), 1);
        assert_eq!(pd.poly_degree(), 0);
        assert!((pd.poles[0].p - p).norm() < 1e-9);
        assert!(op_norm(&(&pd.rho0 - &planted.rho0)) < 1e-9);
        assert!(op_norm(&(&pd.poles[0].residues[0] - &planted.poles[0].residues[0])) < 1e-9);
    }

    #[test]
    fn reconstruction_matches_on_inner_circle() {
        for h in [
            univariate(&[1.0, 0.5], &[1.0]),
            univariate(&[1.0, 0.5], &[1.0, -0.5, 0.06]),
        ] {
            let pd = decompose_inverse(&h, &tol()).unwrap();
            let mut worst: f64 = 0.0;
            for z in circle_points(64, 0.95) {
                let direct = h.eval_inverse(z).unwrap();
                let from_pd = pd.eval(z).unwrap();
                worst = worst.max(op_norm(&(&direct - &from_pd)) / op_norm(&direct));
            }
            assert!(worst < 1e-9, "reconstruction error {worst}");
        }
    }

    #[test]
    fn double_pole_multiplicity() {
        // plant a genuine double pole; the residues are chosen so the
        // resulting h still has no zeros of det h in the closed disk
        let planted = InversePoleData {
            dim: 1,
            rho0: from_rows(1, 1, &[cr(-1.0)]),
            poles: vec![PoleTerm {
                p: cr(0.5),
                residues: vec![from_rows(1, 1, &[cr(-0.3)]), from_rows(1, 1, &[cr(-0.05)])],
            }],
            rho0j: vec![],
        };
        let h = planted.to_rational(&tol()).unwrap();
        assert!(h.check_condition_c(&tol()).passed());
        let pd = decompose_inverse(&h, &tol()).unwrap();
        assert_eq!(pd.pole_count(), 1);
        assert_eq!(pd.poles[0].multiplicity(), 2);
        assert!((pd.poles[0].p - cr(0.5)).norm() < 1e-10);
        assert!((pd.poles[0].residues[0][(0, 0)] - cr(-0.3)).norm() < 1e-8);
        assert!((pd.poles[0].residues[1][(0, 0)] - cr(-0.05)).norm() < 1e-8);
    }
}
