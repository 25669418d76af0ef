//! Dense complex matrix primitives for small `n`.
//!
//! Everything here is a pure function of its inputs. The SVD is a one-sided
//! Jacobi iteration with complex plane rotations; Hermitian eigenproblems use
//! the two-sided cyclic Jacobi method.

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Largest supported matrix dimension.
pub const MAX_DIM: usize = 64;

const MAX_SWEEPS: usize = 80;

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major data, rejecting empty shapes and
    /// non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!("empty shape {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain("non-finite matrix entry".into()));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::from_vec(r, c, rows.iter().flatten().copied().collect())
    }

    /// Convenience constructor from real row slices.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let d: Vec<C64> = diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diag(&d)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: C64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: C64, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, col: &[C64]) {
        for (i, &z) in col.iter().enumerate() {
            self[(i, j)] = z;
        }
    }

    /// Multiplies column `j` by `s` in place.
    pub fn scale_column(&mut self, j: usize, s: C64) {
        for i in 0..self.rows {
            self[(i, j)] *= s;
        }
    }

    /// `(column a of self)^* (column b of other)`.
    pub fn column_dot(&self, a: usize, other: &Self, b: usize) -> C64 {
        (0..self.rows)
            .map(|i| self[(i, a)].conj() * other[(i, b)])
            .sum()
    }

    /// `self * other^*` without forming the adjoint explicitly.
    pub fn mul_adjoint(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols);
        let mut out = Self::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            for j in 0..other.rows {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..self.cols {
                    acc += self[(i, k)] * other[(j, k)].conj();
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    /// `self^* * other`.
    pub fn adjoint_mul(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows);
        let mut out = Self::zeros(self.cols, other.cols);
        for i in 0..self.cols {
            for j in 0..other.cols {
                out[(i, j)] = self.column_dot(i, other, j);
            }
        }
        out
    }

    /// Multiplies each column `j` by the real scalar `d[j]`.
    pub fn scale_columns_real(&self, d: &[f64]) -> Self {
        let mut out = self.clone();
        for (j, &dj) in d.iter().enumerate() {
            out.scale_column(j, C64::new(dj, 0.0));
        }
        out
    }

    /// Sum of squared moduli of the off-diagonal entries.
    pub fn off_diagonal_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j {
                    acc += self[(i, j)].norm_sqr();
                }
            }
        }
        acc.sqrt()
    }

    pub fn max_abs_off_diagonal(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j {
                    m = m.max(self[(i, j)].norm());
                }
            }
        }
        m
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .collect()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

/// `‖Q^*Q − I‖_F`.
pub fn unitarity_defect(q: &ComplexMatrix) -> f64 {
    q.adjoint_mul(q)
        .sub(&ComplexMatrix::identity(q.cols()))
        .frobenius_norm()
}

/// Singular value decomposition `A = U diag(sigma) V^*` of a square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SvdTriple {
    pub u: ComplexMatrix,
    pub sigma: Vec<f64>,
    pub v: ComplexMatrix,
}

impl SvdTriple {
    pub fn n(&self) -> usize {
        self.sigma.len()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.u.scale_columns_real(&self.sigma).mul_adjoint(&self.v)
    }

    /// `min_j (sigma_j − sigma_{j+1})`, or 0 for a 1×1 matrix.
    pub fn min_gap(&self) -> f64 {
        if self.sigma.len() < 2 {
            return 0.0;
        }
        self.sigma
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn sigma_min(&self) -> f64 {
        *self.sigma.last().expect("empty SVD")
    }

    /// Multiplies column pair `(u_j, v_j)` by the unimodular factor `e^{i phase}`.
    pub fn rephase_column(&mut self, j: usize, phase: f64) {
        let z = C64::from_polar(1.0, phase);
        self.u.scale_column(j, z);
        self.v.scale_column(j, z);
    }
}

fn check_square(a: &ComplexMatrix, what: &str) -> Result<usize> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "{what} requires a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if a.rows() > MAX_DIM {
        return Err(Error::Dimension(format!(
            "{what}: n = {} exceeds the supported maximum {MAX_DIM}",
            a.rows()
        )));
    }
    if !a.is_finite() {
        return Err(Error::Domain(format!("{what}: non-finite entries")));
    }
    Ok(a.rows())
}

/// Rotation `J = diag(1, e^{-i theta}) [[c, s], [-s, c]]` that diagonalises
/// the 2×2 Hermitian block `[[alpha, gamma], [conj(gamma), beta]]`.
#[derive(Clone, Copy)]
struct PlaneRotation {
    c: f64,
    s: f64,
    /// `e^{-i theta}` where `gamma = |gamma| e^{i theta}`.
    phase: C64,
}

impl PlaneRotation {
    fn new(alpha: f64, beta: f64, gamma: C64) -> Self {
        let g = gamma.norm();
        let zeta = (beta - alpha) / (2.0 * g);
        let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
        let c = 1.0 / (1.0 + t * t).sqrt();
        PlaneRotation {
            c,
            s: c * t,
            phase: (gamma / g).conj(),
        }
    }

    /// Right-multiplies columns `p`, `q` of `m` by `J`.
    fn apply_right(&self, m: &mut ComplexMatrix, p: usize, q: usize) {
        for i in 0..m.rows() {
            let bp = m[(i, p)];
            let bq = m[(i, q)] * self.phase;
            m[(i, p)] = bp * self.c - bq * self.s;
            m[(i, q)] = bp * self.s + bq * self.c;
        }
    }

    /// Left-multiplies rows `p`, `q` of `m` by `J^*`.
    fn apply_left_adjoint(&self, m: &mut ComplexMatrix, p: usize, q: usize) {
        let ph = self.phase.conj();
        for j in 0..m.cols() {
            let rp = m[(p, j)];
            let rq = m[(q, j)] * ph;
            m[(p, j)] = rp * self.c - rq * self.s;
            m[(q, j)] = rp * self.s + rq * self.c;
        }
    }
}

/// Pointwise SVD by one-sided Jacobi.
///
/// Singular values are returned in descending order. The phase of each
/// singular-vector pair is fixed by making the largest-magnitude entry of the
/// right singular vector real and positive (first index on ties), so the
/// result is a deterministic function of `a`.
pub fn svd_point(a: &ComplexMatrix) -> Result<SvdTriple> {
    let n = check_square(a, "svd_point")?;
    let mut b = a.clone();
    let mut v = ComplexMatrix::identity(n);
    let tol = f64::EPSILON * n as f64;

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = b.column_dot(p, &b, p).re;
                let beta = b.column_dot(q, &b, q).re;
                let gamma = b.column_dot(p, &b, q);
                let g = gamma.norm();
                if g == 0.0 || g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let rot = PlaneRotation::new(alpha, beta, gamma);
                rot.apply_right(&mut b, p, q);
                rot.apply_right(&mut v, p, q);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..n).map(|j| b.column_dot(j, &b, j).re.sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let sigma: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let mut u = ComplexMatrix::zeros(n, n);
    let mut vs = ComplexMatrix::zeros(n, n);
    let small = sigma[0] * 1e-8;
    for (k, &j) in order.iter().enumerate() {
        vs.set_column(k, &v.column(j));
        let col = b.column(j);
        if sigma[k] > 0.0 {
            let inv = 1.0 / sigma[k];
            let scaled: Vec<C64> = col.iter().map(|z| z * inv).collect();
            u.set_column(k, &scaled);
        }
        if sigma[k] <= small || sigma[k] == 0.0 {
            complete_column(&mut u, k);
        }
    }

    // Phase convention on the right singular vectors.
    for k in 0..n {
        let mut best = 0;
        let mut best_abs = -1.0;
        for i in 0..n {
            let m = vs[(i, k)].norm();
            if m > best_abs {
                best_abs = m;
                best = i;
            }
        }
        let z = vs[(best, k)];
        let ph = z.conj() / z.norm();
        vs.scale_column(k, ph);
        u.scale_column(k, ph);
        vs[(best, k)] = C64::new(best_abs, 0.0);
    }

    Ok(SvdTriple { u, sigma, v: vs })
}

/// Re-orthogonalises column `k` of `u` against columns `0..k` (twice), falling
/// back to canonical basis vectors when the column carries no information.
fn complete_column(u: &mut ComplexMatrix, k: usize) {
    let n = u.rows();
    let orthonormalise = |u: &ComplexMatrix, mut col: Vec<C64>| -> (Vec<C64>, f64) {
        for _ in 0..2 {
            for j in 0..k {
                let proj: C64 = (0..n).map(|i| u[(i, j)].conj() * col[i]).sum();
                for i in 0..n {
                    col[i] -= proj * u[(i, j)];
                }
            }
        }
        let nrm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        (col, nrm)
    };
    let (col, nrm) = orthonormalise(u, u.column(k));
    if nrm > 0.5 {
        let col: Vec<C64> = col.iter().map(|z| z / nrm).collect();
        u.set_column(k, &col);
        return;
    }
    for e in 0..n {
        let mut basis = vec![C64::new(0.0, 0.0); n];
        basis[e] = C64::new(1.0, 0.0);
        let (col, nrm) = orthonormalise(u, basis);
        if nrm > 0.5 {
            let col: Vec<C64> = col.iter().map(|z| z / nrm).collect();
            u.set_column(k, &col);
            return;
        }
    }
}

/// Eigendecomposition `H = Q diag(lambda) Q^*` of a Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HermEig {
    pub q: ComplexMatrix,
    pub lambda: Vec<f64>,
}

/// Hermitian eigendecomposition by cyclic Jacobi, eigenvalues descending.
pub fn herm_eig(h: &ComplexMatrix) -> Result<HermEig> {
    let n = check_square(h, "herm_eig")?;
    let scale = h.frobenius_norm();
    let skew = h.sub(&h.adjoint()).frobenius_norm();
    if skew > 1e-12 * scale {
        return Err(Error::Domain(format!(
            "matrix is not Hermitian: ‖H − H*‖_F = {skew:e}"
        )));
    }
    let mut a = h.add(&h.adjoint()).scale(C64::new(0.5, 0.0));
    let mut q = ComplexMatrix::identity(n);

    for _ in 0..MAX_SWEEPS {
        if a.off_diagonal_norm() <= f64::EPSILON * scale {
            break;
        }
        for p in 0..n {
            for r in (p + 1)..n {
                let gamma = a[(p, r)];
                if gamma.norm() == 0.0 {
                    continue;
                }
                let rot = PlaneRotation::new(a[(p, p)].re, a[(r, r)].re, gamma);
                rot.apply_right(&mut a, p, r);
                rot.apply_left_adjoint(&mut a, p, r);
                a[(p, r)] = C64::new(0.0, 0.0);
                a[(r, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(r, r)] = C64::new(a[(r, r)].re, 0.0);
                rot.apply_right(&mut q, p, r);
            }
        }
    }

    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));
    let mut qs = ComplexMatrix::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        qs.set_column(k, &q.column(j));
    }
    Ok(HermEig {
        q: qs,
        lambda: order.iter().map(|&j| diag[j]).collect(),
    })
}

/// Determinant by LU factorisation with partial pivoting.
pub fn det(a: &ComplexMatrix) -> Result<C64> {
    let n = check_square(a, "det")?;
    let mut m = a.clone();
    let mut d = C64::new(1.0, 0.0);
    for k in 0..n {
        let pivot = (k..n)
            .max_by(|&i, &j| m[(i, k)].norm().total_cmp(&m[(j, k)].norm()))
            .unwrap_or(k);
        let p = m[(pivot, k)];
        if p.norm() == 0.0 {
            return Ok(C64::new(0.0, 0.0));
        }
        if pivot != k {
            for j in 0..n {
                let tmp = m[(k, j)];
                m[(k, j)] = m[(pivot, j)];
                m[(pivot, j)] = tmp;
            }
            d = -d;
        }
        d *= p;
        for i in (k + 1)..n {
            let f = m[(i, k)] / p;
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            for j in (k + 1)..n {
                let t = m[(k, j)];
                m[(i, j)] -= f * t;
            }
        }
    }
    Ok(d)
}

/// `prod_{l<j} (lambda_j − lambda_l)^2`.
pub fn discriminant(lambda: &[f64]) -> f64 {
    let mut acc = 1.0;
    for j in 0..lambda.len() {
        for l in 0..j {
            let d = lambda[j] - lambda[l];
            acc *= d * d;
        }
    }
    acc
}

/// Closest unitary matrix in Frobenius norm (polar factor `P Q^*` of `x = P S Q^*`).
pub fn polar_unitary(x: &ComplexMatrix) -> Result<ComplexMatrix> {
    let s = svd_point(x)?;
    Ok(s.u.mul_adjoint(&s.v))
}
