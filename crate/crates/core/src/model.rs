//! Rational matrix models and the pole data of their inverses.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::poly::{CPoly, PolyMatrix};
use crate::Tolerances;

/// A d x d matrix of rational functions, stored as a polynomial matrix
/// numerator over a scalar polynomial denominator, reduced so that no root
/// of the denominator is shared by every numerator entry.
#[derive(Debug, Clone)]
pub struct RationalMatrix {
    numerator: PolyMatrix,
    denominator: CPoly,
    den_roots: Vec<(Complex64, usize)>,
}

impl RationalMatrix {
    pub fn new(numerator: PolyMatrix, denominator: CPoly, tol: &Tolerances) -> Result<Self> {
        if denominator.is_zero() {
            return Err(Error::InvalidInput("denominator is identically zero".into()));
        }
        let (numerator, denominator) = reduce(numerator, denominator, tol)?;
        let den_roots = denominator.polished_clustered_roots(0.02)?;
        Ok(RationalMatrix { numerator, denominator, den_roots })
    }

    pub fn from_polynomial(p: PolyMatrix) -> Self {
        let den_roots = Vec::new();
        RationalMatrix { numerator: p, denominator: CPoly::one(), den_roots }
    }

    /// h = adj(Phi) Psi Sigma^{1/2} / det(Phi) from the ARMA equation
    /// polynomials, rejecting unstable or non-invertible inputs.
    pub fn from_arma_polynomials(
        phi: &PolyMatrix,
        psi: &PolyMatrix,
        sigma_half: &CMatrix,
        tol: &Tolerances,
    ) -> Result<Self> {
        let h = Self::from_arma_polynomials_unchecked(phi, psi, sigma_half, tol)?;
        let report = h.check_condition_c(tol);
        if let Some(root) = report.den_roots_in_disk.first() {
            return Err(Error::NotStable { factor: "det Phi", root: *root });
        }
        if let Some(root) = report.det_zeros_in_disk.first() {
            return Err(Error::NotStable { factor: "det h", root: *root });
        }
        Ok(h)
    }

    /// Same construction without the stability gate, so that a validation
    /// report can still be produced for a bad model.
    pub fn from_arma_polynomials_unchecked(
        phi: &PolyMatrix,
        psi: &PolyMatrix,
        sigma_half: &CMatrix,
        tol: &Tolerances,
    ) -> Result<Self> {
        let d = phi.dim;
        if psi.dim != d || sigma_half.nrows() != d || sigma_half.ncols() != d {
            return Err(Error::InvalidInput("phi, psi, sigma_half must share one dimension".into()));
        }
        let sigma_min = linalg::smallest_singular_value(sigma_half);
        let sigma_max = linalg::op_norm(sigma_half).max(1.0);
        if sigma_min <= tol.nonzero_floor * sigma_max {
            return Err(Error::SingularSigma { sigma_min });
        }
        let num = phi.adjugate().mul(psi).mul_matrix_right(sigma_half);
        let den = phi.determinant();
        RationalMatrix::new(num, den, tol)
    }

    pub fn dim(&self) -> usize {
        self.numerator.dim
    }

    pub fn numerator(&self) -> &PolyMatrix {
        &self.numerator
    }

    pub fn denominator(&self) -> &CPoly {
        &self.denominator
    }

    /// Poles of h (clustered roots of the reduced denominator).
    pub fn poles(&self) -> &[(Complex64, usize)] {
        &self.den_roots
    }

    pub fn eval(&self, z: Complex64) -> Result<CMatrix> {
        for (root, _) in &self.den_roots {
            let dist = (z - root).norm();
            if dist < 1e-8 {
                return Err(Error::NearPole { z, dist });
            }
        }
        let den = self.denominator.eval(z);
        Ok(self.numerator.eval(z).map(|e| e / den))
    }

    pub fn eval_inverse(&self, z: Complex64) -> Result<CMatrix> {
        let value = self.eval(z)?;
        linalg::inverse(&value).map_err(|_| Error::NearPole { z, dist: 0.0 })
    }

    /// Taylor coefficients of h at the origin, by the numerator/denominator
    /// recursion den_0 c_k = num_k - sum_{j=1..k} den_j c_{k-j}.
    pub fn taylor(&self, count: usize) -> Result<Vec<CMatrix>> {
        let d = self.dim();
        let den0 = self.denominator.coeffs[0];
        if den0.norm() == 0.0 {
            return Err(Error::InvalidInput("denominator vanishes at 0".into()));
        }
        let mut out: Vec<CMatrix> = Vec::with_capacity(count);
        for k in 0..count {
            let mut acc = if k <= self.numerator.degree() {
                self.numerator.coeffs[k].clone()
            } else {
                CMatrix::zeros(d, d)
            };
            for j in 1..=k.min(self.denominator.degree()) {
                let dj = self.denominator.coeffs[j];
                acc -= out[k - j].map(|e| e * dj);
            }
            out.push(acc.map(|e| e / den0));
        }
        Ok(out)
    }

    /// Condition check: no poles of h and no zeros of det h in the closed
    /// unit disk (within `tol.unit_disk` slack on the boundary).
    pub fn check_condition_c(&self, tol: &Tolerances) -> ConditionReport {
        let limit = 1.0 + tol.unit_disk;
        let den_roots_in_disk: Vec<Complex64> = self
            .den_roots
            .iter()
            .filter(|(r, _)| r.norm() <= limit)
            .map(|(r, _)| *r)
            .collect();

        // det h = det(num) / den^d; with no denominator roots in the disk,
        // zeros of det h inside it are exactly the det(num) roots there that
        // are not residues of the den^d cancellation.
        let det_num = self.numerator.determinant();
        let mut det_zeros_in_disk = Vec::new();
        if let Ok(clusters) = det_num.polished_clustered_roots(0.02) {
            for (root, mult) in clusters {
                if root.norm() > limit {
                    continue;
                }
                let cancelled = self
                    .den_roots
                    .iter()
                    .filter(|(r, _)| (r - root).norm() <= 1e-4 * root.norm().max(1.0))
                    .map(|(_, m)| m * self.dim())
                    .sum::<usize>();
                if mult > cancelled {
                    det_zeros_in_disk.push(root);
                }
            }
        }
        ConditionReport { den_roots_in_disk, det_zeros_in_disk }
    }
}

/// Outcome of the condition check; passes iff both lists are empty.
#[derive(Debug, Clone)]
pub struct ConditionReport {
    /// Poles of h with |z| <= 1 + tol.
    pub den_roots_in_disk: Vec<Complex64>,
    /// Zeros of det h with |z| <= 1 + tol.
    pub det_zeros_in_disk: Vec<Complex64>,
}

impl ConditionReport {
    pub fn passed(&self) -> bool {
        self.den_roots_in_disk.is_empty() && self.det_zeros_in_disk.is_empty()
    }
}

/// Cancel denominator roots shared (to tolerance) by every numerator entry.
fn reduce(num: PolyMatrix, den: CPoly, tol: &Tolerances) -> Result<(PolyMatrix, CPoly)> {
    let mut num = num;
    let mut den = den;
    let _ = tol;
    let clusters = den.polished_clustered_roots(0.02)?;
    for (root, mult) in clusters {
        let mut shared = mult;
        for r in 0..num.dim {
            for c in 0..num.dim {
                shared = shared.min(vanishing_order(&num.entry(r, c), root, shared, 1e-7));
                if shared == 0 {
                    break;
                }
            }
            if shared == 0 {
                break;
            }
        }
        for _ in 0..shared {
            den = den.deflate(root).0;
            let mut coeffs = Vec::with_capacity(num.coeffs.len().saturating_sub(1).max(1));
            let mut entries: Vec<CPoly> = Vec::new();
            for r in 0..num.dim {
                for c in 0..num.dim {
                    entries.push(num.entry(r, c).deflate(root).0);
                }
            }
            let deg = entries.iter().map(|p| p.degree()).max().unwrap_or(0);
            for k in 0..=deg {
                let mut m = CMatrix::zeros(num.dim, num.dim);
                for r in 0..num.dim {
                    for c in 0..num.dim {
                        let e = &entries[r * num.dim + c];
                        if k <= e.degree() {
                            m[(r, c)] = e.coeffs[k];
                        }
                    }
                }
                coeffs.push(m);
            }
            num = PolyMatrix { dim: num.dim, coeffs };
        }
    }
    // scale so den(0) = 1 when possible (the usual normalization for these
    // models; harmless otherwise)
    let den0 = den.coeffs[0];
    if den0.norm() > 1e-300 {
        let inv = Complex64::new(1.0, 0.0) / den0;
        den = den.scale(inv);
        num = PolyMatrix {
            dim: num.dim,
            coeffs: num.coeffs.iter().map(|c| c.map(|e| e * inv)).collect(),
        };
    }
    Ok((num, den))
}

/// How many times (z - root) divides p, up to `cap`, with a relative
/// remainder tolerance.
fn vanishing_order(p: &CPoly, root: Complex64, cap: usize, rel_tol: f64) -> usize {
    let scale = p.coeffs.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
    if scale == 0.0 {
        return cap;
    }
    let mut current = p.clone();
    let mut order = 0;
    while order < cap {
        let (q, rem) = current.deflate(root);
        if rem.norm() > rel_tol * scale {
            break;
        }
        current = q;
        order += 1;
    }
    order
}

/// Pole data of the partial-fraction form of an inverse outer function:
///
/// h(z)^{-1} = -rho0 - sum_{mu,j} (1 - conj(p_mu) z)^{-j} rho_{mu,j}
///             - sum_j z^j rho0j[j-1]
#[derive(Debug, Clone)]
pub struct InversePoleData {
    pub dim: usize,
    pub rho0: CMatrix,
    pub poles: Vec<PoleTerm>,
    pub rho0j: Vec<CMatrix>,
}

/// One pole p in the open unit disk with residues rho_{mu,1..m}.
#[derive(Debug, Clone)]
pub struct PoleTerm {
    pub p: Complex64,
    pub residues: Vec<CMatrix>,
}

impl PoleTerm {
    pub fn multiplicity(&self) -> usize {
        self.residues.len()
    }
}

impl InversePoleData {
    pub fn pole_count(&self) -> usize {
        self.poles.len()
    }

    /// m0, the degree of the polynomial part.
    pub fn poly_degree(&self) -> usize {
        self.rho0j.len()
    }

    /// M = sum of pole multiplicities.
    pub fn m_total(&self) -> usize {
        self.poles.iter().map(|p| p.multiplicity()).sum()
    }

    /// Residue rho_{mu,j} (mu, j both 1-based, matching the block layout).
    pub fn rho(&self, mu: usize, j: usize) -> &CMatrix {
        &self.poles[mu - 1].residues[j - 1]
    }

    /// Sort poles by decreasing modulus (ties by argument), the canonical
    /// order assumed by the asymptotics.
    pub fn sort_poles(&mut self) {
        self.poles.sort_by(|a, b| {
            (-a.p.norm(), a.p.arg())
                .partial_cmp(&(-b.p.norm(), b.p.arg()))
                .unwrap()
        });
    }

    /// Evaluate the partial-fraction form at z.
    pub fn eval(&self, z: Complex64) -> Result<CMatrix> {
        let d = self.dim;
        let mut acc = -self.rho0.clone();
        for pole in &self.poles {
            let base = Complex64::new(1.0, 0.0) - pole.p.conj() * z;
            let pole_pos = Complex64::new(1.0, 0.0) / pole.p.conj();
            let dist = (z - pole_pos).norm();
            if dist < 1e-8 {
                return Err(Error::NearPole { z, dist });
            }
            let mut factor = Complex64::new(1.0, 0.0);
            for j in 1..=pole.multiplicity() {
                factor /= base;
                acc -= pole.residues[j - 1].map(|e| e * factor);
            }
        }
        let mut zj = Complex64::new(1.0, 0.0);
        for rho in &self.rho0j {
            zj *= z;
            acc -= rho.map(|e| e * zj);
        }
        debug_assert_eq!(acc.nrows(), d);
        Ok(acc)
    }

    /// c0 = h(0) = -(rho0 + sum rho_{mu,j})^{-1}.
    pub fn c0(&self) -> Result<CMatrix> {
        let mut acc = self.rho0.clone();
        for pole in &self.poles {
            for r in &pole.residues {
                acc += r;
            }
        }
        linalg::inverse(&acc).map(|m| -m)
    }

    /// Structural invariants: distinct poles in the punctured disk with
    /// nonzero leading residues.
    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        if self.rho0.nrows() != self.dim || self.rho0.ncols() != self.dim {
            return Err(Error::InvalidInput("rho0 has the wrong shape".into()));
        }
        for pole in &self.poles {
            let r = pole.p.norm();
            if r <= tol.pole_cluster || r >= 1.0 - tol.unit_disk {
                return Err(Error::InvalidInput(format!(
                    "pole {} is outside the open punctured unit disk",
                    pole.p
                )));
            }
            if pole.residues.is_empty() {
                return Err(Error::InvalidInput("pole with no residues".into()));
            }
            let lead = linalg::op_norm(pole.residues.last().unwrap());
            if lead <= tol.nonzero_floor {
                return Err(Error::DegenerateLeadingResidue { pole: pole.p, norm: lead });
            }
            for m in pole.residues.iter().chain([&self.rho0]) {
                if m.nrows() != self.dim || m.ncols() != self.dim || !linalg::is_finite(m) {
                    return Err(Error::InvalidInput("residue with bad shape or entries".into()));
                }
            }
        }
        for (a, b) in pairs(&self.poles) {
            if (a.p - b.p).norm() <= tol.pole_cluster {
                return Err(Error::PoleClusterAmbiguous { a: a.p, b: b.p });
            }
        }
        if let Some(last) = self.rho0j.last() {
            if linalg::op_norm(last) <= tol.nonzero_floor {
                return Err(Error::InvalidInput(
                    "leading polynomial-part coefficient is numerically zero".into(),
                ));
            }
        }
        Ok(())
    }

    /// Reconstruct the rational h whose inverse has this pole data:
    /// h^{-1} = P/q with q = prod (1 - conj(p) z)^m, so h = q adj(P)/det(P).
    pub fn to_rational(&self, tol: &Tolerances) -> Result<RationalMatrix> {
        let d = self.dim;
        let mut q = CPoly::one();
        for pole in &self.poles {
            for _ in 0..pole.multiplicity() {
                q = q.mul(&CPoly::linear_factor(pole.p.conj()));
            }
        }
        // P = -(rho0 q + sum (q / (1 - conj(p) z)^j) rho_{mu,j} + sum z^j q rho0j)
        let mut p = PolyMatrix::constant(CMatrix::zeros(d, d));
        p = add_poly(&p, &PolyMatrix::constant(self.rho0.clone()).mul_scalar_poly(&q));
        for (mu, pole) in self.poles.iter().enumerate() {
            // q with j powers of this pole's factor removed
            for j in 1..=pole.multiplicity() {
                let mut partial = CPoly::one();
                for (nu, other) in self.poles.iter().enumerate() {
                    let power = if nu == mu {
                        other.multiplicity() - j
                    } else {
                        other.multiplicity()
                    };
                    for _ in 0..power {
                        partial = partial.mul(&CPoly::linear_factor(other.p.conj()));
                    }
                }
                p = add_poly(
                    &p,
                    &PolyMatrix::constant(pole.residues[j - 1].clone()).mul_scalar_poly(&partial),
                );
            }
        }
        let mut zj = CPoly::one();
        let z = CPoly::new(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
        for rho in &self.rho0j {
            zj = zj.mul(&z);
            let term = PolyMatrix::constant(rho.clone()).mul_scalar_poly(&zj.mul(&q));
            p = add_poly(&p, &term);
        }
        let p = PolyMatrix {
            dim: d,
            coeffs: p.coeffs.iter().map(|c| -c).collect(),
        };
        let num = p.adjugate().mul_scalar_poly(&q);
        let den = p.determinant();
        RationalMatrix::new(num, den, tol)
    }
}

fn add_poly(a: &PolyMatrix, b: &PolyMatrix) -> PolyMatrix {
    let d = a.dim;
    let deg = a.degree().max(b.degree());
    let mut coeffs = vec![CMatrix::zeros(d, d); deg + 1];
    for (k, c) in a.coeffs.iter().enumerate() {
        coeffs[k] += c;
    }
    for (k, c) in b.coeffs.iter().enumerate() {
        coeffs[k] += c;
    }
    PolyMatrix { dim: d, coeffs }
}

fn pairs<T>(items: &[T]) -> impl Iterator<Item = (&T, &T)> {
    items
        .iter()
        .enumerate()
        .flat_map(move |(i, a)| items[i + 1..].iter().map(move |b| (a, b)))
}
