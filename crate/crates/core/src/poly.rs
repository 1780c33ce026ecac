//! Scalar complex polynomials and polynomial matrices.
//!
//! Roots come from companion-matrix eigenvalues; determinants and adjugates
//! of polynomial matrices are recovered by exact DFT interpolation from
//! samples on a circle, which keeps everything numeric (no symbolic
//! arithmetic) while remaining exact for polynomial data.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// Scalar polynomial sum_k coeffs[k] z^k with no high-order zero padding.
#[derive(Debug, Clone, PartialEq)]
pub struct CPoly {
    pub coeffs: Vec<Complex64>,
}

impl CPoly {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        let mut p = CPoly { coeffs };
        p.trim_exact();
        p
    }

    pub fn constant(c: Complex64) -> Self {
        CPoly::new(vec![c])
    }

    pub fn one() -> Self {
        CPoly::constant(Complex64::new(1.0, 0.0))
    }

    /// 1 - q z, the elementary factor used throughout the pole algebra.
    pub fn linear_factor(q: Complex64) -> Self {
        CPoly::new(vec![Complex64::new(1.0, 0.0), -q])
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm() == 0.0)
    }

    fn trim_exact(&mut self) {
        while self.coeffs.len() > 1 && self.coeffs.last().map_or(false, |c| c.norm() == 0.0) {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(Complex64::new(0.0, 0.0));
        }
    }

    /// Drop trailing coefficients below `tol` relative to the largest one.
    pub fn trim(&mut self, tol: f64) {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
        if scale == 0.0 {
            self.coeffs.truncate(1);
            return;
        }
        while self.coeffs.len() > 1
            && self.coeffs.last().map_or(false, |c| c.norm() <= tol * scale)
        {
            self.coeffs.pop();
        }
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn derivative(&self) -> CPoly {
        if self.coeffs.len() <= 1 {
            return CPoly::constant(Complex64::new(0.0, 0.0));
        }
        CPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * Complex64::new(k as f64, 0.0))
                .collect(),
        )
    }

    pub fn mul(&self, other: &CPoly) -> CPoly {
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        CPoly::new(out)
    }

    pub fn scale(&self, s: Complex64) -> CPoly {
        CPoly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Synthetic division by (z - root); returns (quotient, remainder).
    pub fn deflate(&self, root: Complex64) -> (CPoly, Complex64) {
        let n = self.coeffs.len();
        if n == 1 {
            return (CPoly::constant(Complex64::new(0.0, 0.0)), self.coeffs[0]);
        }
        let mut q = vec![Complex64::new(0.0, 0.0); n - 1];
        let mut carry = self.coeffs[n - 1];
        for k in (0..n - 1).rev() {
            q[k] = carry;
            carry = self.coeffs[k] + carry * root;
        }
        (CPoly::new(q), carry)
    }

    /// All roots, via the eigenvalues of the companion matrix.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        let mut c = self.coeffs.clone();
        let scale = c.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        if scale == 0.0 {
            return Err(Error::InvalidInput("root finding on the zero polynomial".into()));
        }
        // strip a numerically negligible leading coefficient rather than
        // producing a huge spurious root
        while c.len() > 1 && c.last().unwrap().norm() <= 1e-14 * scale {
            c.pop();
        }
        let deg = c.len() - 1;
        if deg == 0 {
            return Ok(Vec::new());
        }
        if deg == 1 {
            return Ok(vec![-c[0] / c[1]]);
        }
        let lead = c[deg];
        let mut companion = CMatrix::zeros(deg, deg);
        for i in 1..deg {
            companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        for i in 0..deg {
            companion[(i, deg - 1)] = -c[i] / lead;
        }
        linalg::eigenvalues(&companion)
    }

    /// Roots merged into (center, multiplicity) clusters. Roots closer than
    /// `merge_tol` are averaged into one center with summed multiplicity.
    pub fn clustered_roots(&self, merge_tol: f64) -> Result<Vec<(Complex64, usize)>> {
        Ok(cluster_points(&self.roots()?, merge_tol))
    }

    /// Clusters with a relative single-linkage radius and a Newton polish of
    /// each center. An m-fold root computed in doubles splits into a cloud of
    /// diameter ~ eps^(1/m), so the linkage radius must scale with |z|, and
    /// the cloud centroid (then polished) is far more accurate than any
    /// individual root.
    pub fn polished_clustered_roots(&self, rel_tol: f64) -> Result<Vec<(Complex64, usize)>> {
        let clusters = cluster_points_rel(&self.roots()?, rel_tol);
        let deriv = self.derivative();
        Ok(clusters
            .into_iter()
            .map(|(center, mult)| (self.polish_root(center, mult, &deriv), mult))
            .collect())
    }

    fn polish_root(&self, mut z: Complex64, mult: usize, deriv: &CPoly) -> Complex64 {
        for _ in 0..12 {
            let f = self.eval(z);
            let df = deriv.eval(z);
            if df.norm() < 1e-280 {
                break;
            }
            let step = f / df * Complex64::new(mult as f64, 0.0);
            if !step.re.is_finite() || !step.im.is_finite() {
                break;
            }
            z -= step;
            if step.norm() <= 1e-15 * z.norm().max(1.0) {
                break;
            }
        }
        z
    }
}

/// Single-linkage clustering with a relative radius: points a, b join the
/// same cluster when |a - b| <= rel_tol * max(1, |a|, |b|).
pub fn cluster_points_rel(points: &[Complex64], rel_tol: f64) -> Vec<(Complex64, usize)> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for i in 0..n {
        for j in i + 1..n {
            let scale = points[i].norm().max(points[j].norm()).max(1.0);
            if (points[i] - points[j]).norm() <= rel_tol * scale {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut sums: std::collections::BTreeMap<usize, (Complex64, usize)> = Default::default();
    for i in 0..n {
        let root = find(&mut parent, i);
        let e = sums.entry(root).or_insert((Complex64::new(0.0, 0.0), 0));
        e.0 += points[i];
        e.1 += 1;
    }
    let mut out: Vec<(Complex64, usize)> = sums
        .into_values()
        .map(|(sum, m)| (sum / (m as f64), m))
        .collect();
    out.sort_by(|a, b| {
        (a.0.norm(), a.0.arg())
            .partial_cmp(&(b.0.norm(), b.0.arg()))
            .unwrap()
    });
    out
}

/// Greedy union merge of nearby points into weighted clusters.
pub fn cluster_points(points: &[Complex64], merge_tol: f64) -> Vec<(Complex64, usize)> {
    let mut clusters: Vec<(Complex64, usize)> = Vec::new();
    for &p in points {
        match clusters
            .iter_mut()
            .find(|(c, m)| (p - *c / (*m as f64)).norm() <= merge_tol)
        {
            Some((c, m)) => {
                *c += p;
                *m += 1;
            }
            None => clusters.push((p, 1)),
        }
    }
    let mut out: Vec<(Complex64, usize)> = clusters
        .into_iter()
        .map(|(sum, m)| (sum / (m as f64), m))
        .collect();
    // deterministic presentation order
    out.sort_by(|a, b| {
        (a.0.norm(), a.0.arg())
            .partial_cmp(&(b.0.norm(), b.0.arg()))
            .unwrap()
    });
    out
}

/// d x d matrix polynomial sum_k coeffs[k] z^k.
#[derive(Debug, Clone)]
pub struct PolyMatrix {
    pub dim: usize,
    pub coeffs: Vec<CMatrix>,
}

impl PolyMatrix {
    pub fn new(dim: usize, coeffs: Vec<CMatrix>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("polynomial matrix needs a coefficient".into()));
        }
        for c in &coeffs {
            if c.nrows() != dim || c.ncols() != dim {
                return Err(Error::InvalidInput("polynomial matrix coefficients must be d x d".into()));
            }
            if !linalg::is_finite(c) {
                return Err(Error::InvalidInput("polynomial matrix has non-finite entries".into()));
            }
        }
        let mut pm = PolyMatrix { dim, coeffs };
        pm.trim(0.0);
        Ok(pm)
    }

    pub fn constant(m: CMatrix) -> Self {
        let dim = m.nrows();
        PolyMatrix { dim, coeffs: vec![m] }
    }

    pub fn identity(dim: usize) -> Self {
        PolyMatrix::constant(linalg::eye(dim))
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn trim(&mut self, tol: f64) {
        let scale = self
            .coeffs
            .iter()
            .map(linalg::op_norm)
            .fold(0.0f64, f64::max)
            .max(1e-300);
        while self.coeffs.len() > 1
            && linalg::op_norm(self.coeffs.last().unwrap()) <= tol * scale
        {
            self.coeffs.pop();
        }
    }

    pub fn eval(&self, z: Complex64) -> CMatrix {
        let mut acc = CMatrix::zeros(self.dim, self.dim);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn entry(&self, r: usize, c: usize) -> CPoly {
        CPoly::new(self.coeffs.iter().map(|m| m[(r, c)]).collect())
    }

    pub fn mul(&self, other: &PolyMatrix) -> PolyMatrix {
        let deg = self.degree() + other.degree();
        let mut out = vec![CMatrix::zeros(self.dim, self.dim); deg + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        PolyMatrix { dim: self.dim, coeffs: out }
    }

    pub fn mul_scalar_poly(&self, p: &CPoly) -> PolyMatrix {
        let deg = self.degree() + p.degree();
        let mut out = vec![CMatrix::zeros(self.dim, self.dim); deg + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in p.coeffs.iter().enumerate() {
                out[i + j] += a.scale_complex(*b);
            }
        }
        PolyMatrix { dim: self.dim, coeffs: out }
    }

    pub fn mul_matrix_right(&self, m: &CMatrix) -> PolyMatrix {
        PolyMatrix {
            dim: self.dim,
            coeffs: self.coeffs.iter().map(|c| c * m).collect(),
        }
    }

    /// det as a scalar polynomial, by sampling on a circle and inverse DFT.
    pub fn determinant(&self) -> CPoly {
        let bound = self.dim * self.degree();
        let n = (bound + 1).next_power_of_two().max(4);
        let samples: Vec<Complex64> = circle_points(n, 1.0)
            .map(|z| self.eval(z).determinant())
            .collect();
        let mut coeffs = inverse_dft(&samples, 1.0);
        coeffs.truncate(bound + 1);
        let mut p = CPoly::new(coeffs);
        p.trim(1e-12);
        p
    }

    /// Adjugate polynomial matrix, entry by entry from cofactor samples.
    /// Stable even where det vanishes, unlike det(P) P^{-1}.
    pub fn adjugate(&self) -> PolyMatrix {
        let d = self.dim;
        if d == 1 {
            return PolyMatrix::identity(1);
        }
        let bound = (d - 1) * self.degree();
        let n = (bound + 1).next_power_of_two().max(4);
        let points: Vec<Complex64> = circle_points(n, 1.0).collect();
        let evals: Vec<CMatrix> = points.iter().map(|&z| self.eval(z)).collect();

        let mut entry_samples = vec![vec![Complex64::new(0.0, 0.0); n]; d * d];
        for (g, m) in evals.iter().enumerate() {
            for r in 0..d {
                for c in 0..d {
                    // adj(M)[r][c] = (-1)^{r+c} minor(M, c, r)
                    let minor = strike_out(m, c, r).determinant();
                    let sign = if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
                    entry_samples[r * d + c][g] = minor * sign;
                }
            }
        }

        let mut coeffs = vec![CMatrix::zeros(d, d); bound + 1];
        for r in 0..d {
            for c in 0..d {
                let poly = inverse_dft(&entry_samples[r * d + c], 1.0);
                for (k, coeff) in poly.iter().take(bound + 1).enumerate() {
                    coeffs[k][(r, c)] = *coeff;
                }
            }
        }
        let mut pm = PolyMatrix { dim: d, coeffs };
        pm.trim(1e-12);
        pm
    }
}

fn strike_out(m: &CMatrix, row: usize, col: usize) -> CMatrix {
    let d = m.nrows();
    let mut out = CMatrix::zeros(d - 1, d - 1);
    let mut ri = 0;
    for r in 0..d {
        if r == row {
            continue;
        }
        let mut ci = 0;
        for c in 0..d {
            if c == col {
                continue;
            }
            out[(ri, ci)] = m[(r, c)];
            ci += 1;
        }
        ri += 1;
    }
    out
}

trait ScaleComplex {
    fn scale_complex(&self, s: Complex64) -> CMatrix;
}

impl ScaleComplex for CMatrix {
    fn scale_complex(&self, s: Complex64) -> CMatrix {
        self.map(|z| z * s)
    }
}

/// The n-th roots of unity scaled to radius r.
pub fn circle_points(n: usize, r: f64) -> impl Iterator<Item = Complex64> {
    (0..n).map(move |g| {
        let theta = 2.0 * std::f64::consts::PI * (g as f64) / (n as f64);
        Complex64::from_polar(r, theta)
    })
}

/// Coefficients c_k of a polynomial from its samples f(r w^g) at the n-th
/// roots of unity: c_k = r^{-k} (1/n) sum_g f_g w^{-gk}. Exact for
/// polynomials of degree < n. Plain O(n^2) DFT; sample counts stay small.
pub fn inverse_dft(samples: &[Complex64], r: f64) -> Vec<Complex64> {
    let n = samples.len();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for (g, f) in samples.iter().enumerate() {
            let theta = -2.0 * std::f64::consts::PI * (g as f64) * (k as f64) / (n as f64);
            acc += f * Complex64::from_polar(1.0, theta);
        }
        out.push(acc / (n as f64) / r.powi(k as i32));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cr, from_rows};

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn roots_of_cubic() {
        // (z - 2)(z - (1+i))(z + 0.5)
        let p = CPoly::linear_factor(cr(0.5))
            .scale(cr(-2.0)) // (z-2) = -2 (1 - z/2)
            .mul(&CPoly::new(vec![Complex64::new(-1.0, -1.0), cr(1.0)]))
            .mul(&CPoly::new(vec![cr(0.5), cr(1.0)]));
        let mut roots = p.roots().unwrap();
        roots.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!(close(roots[0], cr(-0.5), 1e-10));
        assert!(close(roots[1], Complex64::new(1.0, 1.0), 1e-10));
        assert!(close(roots[2], cr(2.0), 1e-10));
    }

    #[test]
    fn clustered_double_root() {
        let two = CPoly::new(vec![cr(4.0), cr(-4.0), cr(1.0)]); // (z-2)^2
        let clusters = two.clustered_roots(1e-6).unwrap();
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].1, 2);
        assert!(close(clusters[0].0, cr(2.0), 1e-6));
    }

    #[test]
    fn deflation_reduces_degree() {
        let p = CPoly::new(vec![cr(-6.0), cr(11.0), cr(-6.0), cr(1.0)]); // (z-1)(z-2)(z-3)
        let (q, rem) = p.deflate(cr(2.0));
        assert!(rem.norm() < 1e-12);
        assert_eq!(q.degree(), 2);
        assert!(close(q.eval(cr(1.0)), cr(0.0), 1e-12));
    }

    #[test]
    fn determinant_and_adjugate_of_poly_matrix() {
        // P(z) = [[1, z], [z, 1]]: det = 1 - z^2, adj = [[1, -z], [-z, 1]]
        let z0 = from_rows(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(1.0)]);
        let z1 = from_rows(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)]);
        let p = PolyMatrix::new(2, vec![z0, z1]).unwrap();
        let det = p.determinant();
        assert_eq!(det.degree(), 2);
        assert!(close(det.coeffs[0], cr(1.0), 1e-12));
        assert!(close(det.coeffs[1], cr(0.0), 1e-12));
        assert!(close(det.coeffs[2], cr(-1.0), 1e-12));

        let adj = p.adjugate();
        for z in [cr(0.3), Complex64::new(0.2, 0.7), cr(-1.3)] {
            let lhs = adj.eval(z) * p.eval(z);
            let det_z = det.eval(z);
            let expect = linalg::eye(2).map(|e| e * det_z);
            assert!(linalg::op_norm(&(lhs - expect)) < 1e-10);
        }
    }

    #[test]
    fn inverse_dft_recovers_coefficients() {
        let p = CPoly::new(vec![cr(1.0), Complex64::new(0.0, 2.0), cr(-0.5)]);
        let samples: Vec<Complex64> = circle_points(8, 2.0).map(|z| p.eval(z)).collect();
        let coeffs = inverse_dft(&samples, 2.0);
        for k in 0..3 {
            assert!(close(coeffs[k], p.coeffs[k], 1e-12));
        }
        for k in 3..8 {
            assert!(coeffs[k].norm() < 1e-12);
        }
    }
}
