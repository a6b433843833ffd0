//! Dense complex linear algebra for small operators.
//!
//! Everything here is sized for system dimensions up to 64: row-major dense
//! storage, naive products, and a cyclic Jacobi eigensolver for Hermitian
//! matrices. No sparse formats and no BLAS.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

pub use num_complex::Complex64 as Complex;

use crate::error::{Error, Result};

/// Tolerance used to decide Hermiticity of eigensolver input.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalues closer than this are treated as one degenerate eigenspace.
pub const DEGENERACY_TOL: f64 = 1e-8;

const JACOBI_OFF_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

#[inline]
pub fn c(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

#[inline]
pub fn re(x: f64) -> Complex {
    Complex::new(x, 0.0)
}

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:>10.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = re(1.0);
        }
        m
    }

    /// Builds a matrix from row-major data, rejecting non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix must be non-empty, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows. All rows must have equal length.
    pub fn from_rows(rows: &[Vec<Complex>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::from_vec(nrows, ncols, rows.concat())
    }

    /// Real-valued convenience constructor used heavily in tests and fixtures.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self {
            rows,
            cols,
            data: data.iter().map(|&x| re(x)).collect(),
        }
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &x) in diag.iter().enumerate() {
            m[(i, i)] = re(x);
        }
        m
    }

    /// `|v><v|` for a column vector `v`.
    pub fn outer(u: &[Complex], v: &[Complex]) -> Self {
        let mut m = Self::zeros(u.len(), v.len());
        for (i, a) in u.iter().enumerate() {
            for (j, b) in v.iter().enumerate() {
                m[(i, j)] = a * b.conj();
            }
        }
        m
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

    pub fn as_slice(&self) -> &[Complex] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Complex] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Complex> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<Complex>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn scale(&self, s: Complex) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(re(s))
    }

    /// Entrywise complex conjugate (not transposed).
    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)];
            }
        }
        out
    }

    pub fn dagger(&self) -> Self {
        dagger(self)
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        matmul(self, other)
    }

    pub fn trace(&self) -> Result<Complex> {
        trace(self)
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius_norm(self)
    }

    /// `A B - B A`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        Ok(&matmul(self, other)? - &matmul(other, self)?)
    }

    /// Largest entrywise deviation from Hermiticity (0 for Hermitian input).
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for r in 0..self.rows {
            for c in r..self.cols {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// Frobenius distance `‖A − B‖₂`, infinite on shape mismatch.
    pub fn distance(&self, other: &Self) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.distance(other) <= tol
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Complex]) -> Result<Vec<Complex>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix times length-{} vector",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// Row-major vectorisation `|A>> = Σ A_mn |m>|n>`.
    pub fn vectorize(&self) -> Vec<Complex> {
        self.data.clone()
    }

    pub fn unvectorize(v: &[Complex], rows: usize, cols: usize) -> Result<Self> {
        Self::from_vec(rows, cols, v.to_vec())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex {
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "shape mismatch in add"
        );
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "shape mismatch in sub"
        );
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

/// Panicking product for call sites where shapes are already validated.
impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        matmul(self, rhs).expect("shape mismatch in mul")
    }
}

pub fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = ComplexMatrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let out_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for k in 0..a.cols {
            let aik = a.data[i * a.cols + k];
            if aik.re == 0.0 && aik.im == 0.0 {
                continue;
            }
            let b_row = &b.data[k * b.cols..(k + 1) * b.cols];
            for (o, bkj) in out_row.iter_mut().zip(b_row) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

pub fn dagger(a: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(a.cols, a.rows);
    for r in 0..a.rows {
        for c in 0..a.cols {
            out[(c, r)] = a[(r, c)].conj();
        }
    }
    out
}

pub fn trace(a: &ComplexMatrix) -> Result<Complex> {
    if !a.is_square() {
        return Err(Error::NotSquare(a.rows, a.cols));
    }
    Ok((0..a.rows).map(|i| a[(i, i)]).sum())
}

/// `Tr[A B]` without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Complex> {
    if a.cols != b.rows || a.rows != b.cols {
        return Err(Error::DimensionMismatch(format!(
            "Tr[AB] with A {}x{} and B {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut acc = Complex::new(0.0, 0.0);
    for i in 0..a.rows {
        for k in 0..a.cols {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    Ok(acc)
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ar in 0..a.rows {
        for ac in 0..a.cols {
            let x = a[(ar, ac)];
            if x.re == 0.0 && x.im == 0.0 {
                continue;
            }
            for br in 0..b.rows {
                for bc in 0..b.cols {
                    out[(ar * b.rows + br, ac * b.cols + bc)] = x * b[(br, bc)];
                }
            }
        }
    }
    out
}

/// Traces out the tensor factors listed in `traced`. Factors are ordered with
/// the first entry of `dims` as the most significant index.
pub fn partial_trace(a: &ComplexMatrix, dims: &[usize], traced: &[usize]) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::NotSquare(a.rows, a.cols));
    }
    if dims.contains(&0) {
        return Err(Error::DimensionMismatch("zero-dimensional factor".into()));
    }
    let total: usize = dims.iter().product();
    if total != a.rows {
        return Err(Error::DimensionMismatch(format!(
            "factor dimensions {dims:?} multiply to {total}, matrix is {}x{}",
            a.rows, a.cols
        )));
    }
    let mut is_traced = vec![false; dims.len()];
    for &t in traced {
        if t >= dims.len() || is_traced[t] {
            return Err(Error::InvalidArgument(format!(
                "traced index {t} invalid for {} factors",
                dims.len()
            )));
        }
        is_traced[t] = true;
    }
    let kept_dim: usize = dims
        .iter()
        .zip(&is_traced)
        .filter(|(_, &t)| !t)
        .map(|(d, _)| d)
        .product();

    // split a full index into (kept index, traced index)
    let split = |mut idx: usize| -> (usize, usize) {
        let mut kept = 0;
        let mut kept_stride = 1;
        let mut tr = 0;
        let mut tr_stride = 1;
        for (f, &d) in dims.iter().enumerate().rev() {
            let digit = idx % d;
            idx /= d;
            if is_traced[f] {
                tr += digit * tr_stride;
                tr_stride *= d;
            } else {
                kept += digit * kept_stride;
                kept_stride *= d;
            }
        }
        (kept, tr)
    };
    let parts: Vec<(usize, usize)> = (0..total).map(split).collect();

    let mut out = ComplexMatrix::zeros(kept_dim, kept_dim);
    for i in 0..total {
        let (ki, ti) = parts[i];
        for j in 0..total {
            let (kj, tj) = parts[j];
            if ti == tj {
                out[(ki, kj)] += a[(i, j)];
            }
        }
    }
    Ok(out)
}

pub fn frobenius_norm(a: &ComplexMatrix) -> f64 {
    a.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in the order of `eigenvalues`.
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn eigenvector(&self, k: usize) -> Vec<Complex> {
        self.eigenvectors.column(k)
    }

    /// `V f(Λ) V†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            for r in 0..n {
                let vr = v[(r, k)] * w;
                for col in 0..n {
                    out[(r, col)] += vr * v[(col, k)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|x| x)
    }

    /// Groups eigenvalue indices into clusters of near-equal eigenvalues.
    pub fn degenerate_groups(&self, tol: f64) -> Vec<Vec<usize>> {
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            match groups.last_mut() {
                Some(g) if (lam - self.eigenvalues[*g.last().unwrap()]).abs() <= tol => g.push(k),
                _ => groups.push(vec![k]),
            }
        }
        groups
    }
}

/// Cyclic complex Jacobi eigensolver.
///
/// Each rotation first removes the phase of the pivot `a_pq` and then applies
/// the classical real Jacobi rotation, so the combined 2x2 transform is unitary.
/// Sweeps continue until the off-diagonal Frobenius mass drops below `1e-12`.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<EigenDecomposition> {
    if !a.is_square() {
        return Err(Error::NotSquare(a.rows, a.cols));
    }
    let dev = a.hermitian_deviation();
    if dev > HERMITIAN_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let n = a.rows;
    // symmetrise so rounding noise in the input does not leak into the result
    let mut m = ComplexMatrix::zeros(n, n);
    for r in 0..n {
        for col in 0..n {
            m[(r, col)] = (a[(r, col)] + a[(col, r)].conj()) * 0.5;
        }
    }
    let mut v = ComplexMatrix::identity(n);

    let off_norm = |m: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for r in 0..n {
            for col in 0..n {
                if r != col {
                    s += m[(r, col)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut converged = off_norm(&m) < JACOBI_OFF_TOL;
    let mut sweeps = 0;
    while !converged && sweeps < JACOBI_MAX_SWEEPS {
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r < 1e-300 {
                    continue;
                }
                let phase = apq / r; // e^{iφ}
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let theta = (aqq - app) / (2.0 * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                // G = diag(1, e^{-iφ}) · [[c, s], [-s, c]]
                let g00 = re(cs);
                let g01 = re(sn);
                let g10 = -phase.conj() * sn;
                let g11 = phase.conj() * cs;

                // M ← M G
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = mkp * g00 + mkq * g10;
                    m[(k, q)] = mkp * g01 + mkq * g11;
                }
                // M ← G† M
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = g00.conj() * mpk + g10.conj() * mqk;
                    m[(q, k)] = g01.conj() * mpk + g11.conj() * mqk;
                }
                m[(p, q)] = re(0.0);
                m[(q, p)] = re(0.0);
                m[(p, p)] = re(m[(p, p)].re);
                m[(q, q)] = re(m[(q, q)].re);
                // V ← V G
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * g00 + vkq * g10;
                    v[(k, q)] = vkp * g01 + vkq * g11;
                }
            }
        }
        sweeps += 1;
        converged = off_norm(&m) < JACOBI_OFF_TOL;
    }
    if !converged {
        return Err(Error::NoConvergence(sweeps));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let eigenvalues = order.iter().map(|&i| m[(i, i)].re).collect();
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        for r in 0..n {
            eigenvectors[(r, new)] = v[(r, old)];
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Hermitian positive square root. Eigenvalues in `[-1e-8, 0)` are clamped to
/// 0, and so are positive ones at rounding level (`≤ 1e-14` relative to the
/// spectral radius), since the square root would blow them up to `~1e-7`.
pub fn psd_sqrt(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(a)?;
    let min = eig.eigenvalues.first().copied().unwrap_or(0.0);
    if min < -1e-8 {
        return Err(Error::NotPsd(min));
    }
    let scale = eig.eigenvalues.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let floor = 1e-14 * scale;
    Ok(eig.reconstruct_with(|x| if x <= floor { 0.0 } else { x.sqrt() }))
}

/// Inner product `<u|v>`.
pub fn inner(u: &[Complex], v: &[Complex]) -> Complex {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn vec_norm(v: &[Complex]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0])
    }
    fn z() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0])
    }

    // small deterministic LCG so the unit tests do not depend on the rng module
    struct Lcg(u64);
    impl Lcg {
        fn next(&mut self) -> f64 {
            self.0 = self
                .0
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((self.0 >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        }
        fn matrix(&mut self, r: usize, cl: usize) -> ComplexMatrix {
            let data = (0..r * cl).map(|_| c(self.next(), self.next())).collect();
            ComplexMatrix::from_vec(r, cl, data).unwrap()
        }
        fn hermitian(&mut self, n: usize) -> ComplexMatrix {
            let g = self.matrix(n, n);
            (&g + &g.dagger()).scale_real(0.5)
        }
    }

    #[test]
    fn matmul_pauli() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(matmul(&i2, &x()).unwrap(), x());
        let xz = matmul(&x(), &z()).unwrap();
        assert_eq!(xz, ComplexMatrix::from_real(2, 2, &[0.0, -1.0, 1.0, 0.0]));
    }

    #[test]
    fn matmul_matches_triple_loop() {
        let mut g = Lcg(7);
        let a = g.matrix(3, 3);
        let b = g.matrix(3, 3);
        let p = matmul(&a, &b).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = c(0.0, 0.0);
                for k in 0..3 {
                    s += a[(i, k)] * b[(k, j)];
                }
                assert!((p[(i, j)] - s).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn matmul_shape_error() {
        let a = ComplexMatrix::zeros(2, 3);
        assert!(matches!(matmul(&a, &a), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn dagger_cases() {
        assert_eq!(x().dagger(), x());
        let n = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(
            n.dagger(),
            ComplexMatrix::from_real(2, 2, &[0.0, 0.0, 1.0, 0.0])
        );
        let mut g = Lcg(11);
        let a = g.matrix(3, 4);
        let b = g.matrix(4, 2);
        let lhs = matmul(&a, &b).unwrap().dagger();
        let rhs = matmul(&b.dagger(), &a.dagger()).unwrap();
        assert!(lhs.approx_eq(&rhs, 1e-13));
    }

    #[test]
    fn trace_cases() {
        assert_eq!(trace(&ComplexMatrix::identity(4)).unwrap(), re(4.0));
        assert_eq!(trace(&x()).unwrap(), re(0.0));
        assert!(matches!(
            trace(&ComplexMatrix::zeros(2, 3)),
            Err(Error::NotSquare(2, 3))
        ));
        let mut g = Lcg(3);
        let a = g.matrix(4, 4);
        let b = g.matrix(4, 4);
        let ab = trace(&matmul(&a, &b).unwrap()).unwrap();
        let ba = trace(&matmul(&b, &a).unwrap()).unwrap();
        assert!((ab - ba).norm() < 1e-13);
        assert!((trace_product(&a, &b).unwrap() - ab).norm() < 1e-13);
    }

    #[test]
    fn kron_cases() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));
        assert_eq!(
            kron(&z(), &z()),
            ComplexMatrix::diagonal(&[1.0, -1.0, -1.0, 1.0])
        );
        let mut g = Lcg(5);
        let (a, b, cc, d) = (
            g.matrix(2, 2),
            g.matrix(2, 2),
            g.matrix(2, 2),
            g.matrix(2, 2),
        );
        let lhs = matmul(&kron(&a, &b), &kron(&cc, &d)).unwrap();
        let rhs = kron(&matmul(&a, &cc).unwrap(), &matmul(&b, &d).unwrap());
        assert!(lhs.approx_eq(&rhs, 1e-12));
    }

    #[test]
    fn partial_trace_product_state() {
        let rho = ComplexMatrix::from_real(2, 2, &[0.7, 0.2, 0.2, 0.3]);
        let sigma = ComplexMatrix::from_real(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let pt = partial_trace(&kron(&rho, &sigma), &[2, 2], &[1]).unwrap();
        assert!(pt.approx_eq(&rho.scale_real(3.0), 1e-14));
        let pt0 = partial_trace(&kron(&rho, &sigma), &[2, 2], &[0]).unwrap();
        assert!(pt0.approx_eq(&sigma, 1e-14));
    }

    #[test]
    fn partial_trace_bell() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi = vec![re(s), re(0.0), re(0.0), re(s)];
        let bell = ComplexMatrix::outer(&phi, &phi);
        let pt = partial_trace(&bell, &[2, 2], &[1]).unwrap();
        assert!(pt.approx_eq(&ComplexMatrix::identity(2).scale_real(0.5), 1e-14));
        let all = partial_trace(&bell, &[2, 2], &[0, 1]).unwrap();
        assert_eq!(all.rows(), 1);
        assert!((all[(0, 0)] - re(1.0)).norm() < 1e-14);
    }

    #[test]
    fn partial_trace_matches_index_sum() {
        let mut g = Lcg(17);
        let h = g.matrix(4, 4);
        let rho = matmul(&h, &h.dagger()).unwrap();
        let tr = trace(&rho).unwrap();
        let rho = rho.scale(tr.inv());
        // explicit 4-index sum: (Tr_B ρ)_{ac} = Σ_b ρ_{(a,b),(c,b)}
        let pt = partial_trace(&rho, &[2, 2], &[1]).unwrap();
        let pt_a = partial_trace(&rho, &[2, 2], &[0]).unwrap();
        for a in 0..2 {
            for cc in 0..2 {
                let mut sb = c(0.0, 0.0);
                let mut sa = c(0.0, 0.0);
                for b in 0..2 {
                    sb += rho[(a * 2 + b, cc * 2 + b)];
                    sa += rho[(b * 2 + a, b * 2 + cc)];
                }
                assert!((pt[(a, cc)] - sb).norm() < 1e-14);
                assert!((pt_a[(a, cc)] - sa).norm() < 1e-14);
            }
        }
        assert!((trace(&pt).unwrap() - re(1.0)).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_errors() {
        let a = ComplexMatrix::identity(4);
        assert!(partial_trace(&a, &[2, 3], &[0]).is_err());
        assert!(partial_trace(&a, &[2, 2], &[2]).is_err());
        assert!(partial_trace(&a, &[2, 2], &[0, 0]).is_err());
    }

    #[test]
    fn eig_paulis() {
        let e = hermitian_eig(&z()).unwrap();
        assert_eq!(e.eigenvalues.len(), 2);
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-14 && (e.eigenvalues[1] - 1.0).abs() < 1e-14);
        assert!((e.eigenvectors[(1, 0)].norm() - 1.0).abs() < 1e-14);
        assert!((e.eigenvectors[(0, 1)].norm() - 1.0).abs() < 1e-14);

        let e = hermitian_eig(&x()).unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-14 && (e.eigenvalues[1] - 1.0).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let minus = [re(s), re(-s)];
        let plus = [re(s), re(s)];
        assert!((inner(&minus, &e.eigenvector(0)).norm() - 1.0).abs() < 1e-12);
        assert!((inner(&plus, &e.eigenvector(1)).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let n = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(hermitian_eig(&n), Err(Error::NotHermitian(_))));
    }

    /// Determinant of a complex matrix by Gaussian elimination with pivoting.
    fn det(mut m: ComplexMatrix) -> Complex {
        let n = m.rows();
        let mut d = re(1.0);
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&a, &b| m[(a, col)].norm().total_cmp(&m[(b, col)].norm()))
                .unwrap();
            if m[(piv, col)].norm() == 0.0 {
                return re(0.0);
            }
            if piv != col {
                for k in 0..n {
                    let t = m[(piv, k)];
                    m[(piv, k)] = m[(col, k)];
                    m[(col, k)] = t;
                }
                d = -d;
            }
            d *= m[(col, col)];
            for r in (col + 1)..n {
                let f = m[(r, col)] / m[(col, col)];
                for k in col..n {
                    let v = m[(col, k)];
                    m[(r, k)] -= f * v;
                }
            }
        }
        d
    }

    /// Independent oracle: roots of det(A − xI), which is real on the real
    /// axis for Hermitian A, located by sign-change scanning plus bisection.
    fn char_poly_roots(a: &ComplexMatrix) -> Vec<f64> {
        let n = a.rows();
        let p = |x: f64| det(&a.clone() - &ComplexMatrix::identity(n).scale_real(x)).re;
        let bound = (0..n)
            .map(|r| a.row(r).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
            + 1.0;
        let steps = 20000;
        let h = 2.0 * bound / steps as f64;
        let mut roots = Vec::new();
        let mut x0 = -bound;
        let mut f0 = p(x0);
        for s in 1..=steps {
            let x1 = -bound + s as f64 * h;
            let f1 = p(x1);
            if f0 == 0.0 {
                roots.push(x0);
            } else if f0 * f1 < 0.0 {
                let (mut lo, mut hi, mut flo) = (x0, x1, f0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let fm = p(mid);
                    if fm * flo <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                        flo = fm;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            x0 = x1;
            f0 = f1;
        }
        roots
    }

    #[test]
    fn eig_matches_characteristic_polynomial() {
        let mut g = Lcg(99);
        let h = g.hermitian(8);
        let e = hermitian_eig(&h).unwrap();
        let roots = char_poly_roots(&h);
        assert_eq!(roots.len(), 8, "oracle found {roots:?}");
        for (a, b) in e.eigenvalues.iter().zip(&roots) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn eig_reconstruction_and_orthonormality() {
        let mut g = Lcg(1234);
        for n in [1, 2, 3, 5, 8, 16, 32] {
            let h = g.hermitian(n);
            let e = hermitian_eig(&h).unwrap();
            assert!(e.reconstruct().distance(&h) <= 1e-9);
            let vtv = matmul(&e.eigenvectors.dagger(), &e.eigenvectors).unwrap();
            assert!(vtv.approx_eq(&ComplexMatrix::identity(n), 1e-10));
            assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            for k in 0..n {
                let v = e.eigenvector(k);
                let hv = h.apply(&v).unwrap();
                let res: f64 = hv
                    .iter()
                    .zip(&v)
                    .map(|(a, b)| (a - b * e.eigenvalues[k]).norm_sqr())
                    .sum();
                assert!(res.sqrt() < 1e-10);
            }
        }
    }

    #[test]
    fn eig_degenerate() {
        let zz = kron(&z(), &z());
        let e = hermitian_eig(&zz).unwrap();
        let groups = e.degenerate_groups(DEGENERACY_TOL);
        assert_eq!(groups, vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn psd_sqrt_cases() {
        assert!(psd_sqrt(&ComplexMatrix::identity(3))
            .unwrap()
            .approx_eq(&ComplexMatrix::identity(3), 1e-12));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = [re(s), re(s)];
        let p = ComplexMatrix::outer(&plus, &plus);
        assert!(psd_sqrt(&p.scale_real(4.0))
            .unwrap()
            .approx_eq(&p.scale_real(2.0), 1e-12));
        assert!(psd_sqrt(&p).unwrap().approx_eq(&p, 1e-12));
        let mut g = Lcg(42);
        let h = g.matrix(4, 4);
        let a = matmul(&h, &h.dagger()).unwrap();
        let r = psd_sqrt(&a).unwrap();
        assert!(r.is_hermitian(1e-12));
        assert!(matmul(&r, &r).unwrap().distance(&a) <= 1e-9);
        assert!(matches!(psd_sqrt(&z()), Err(Error::NotPsd(_))));
    }

    #[test]
    fn frobenius_cases() {
        assert!((frobenius_norm(&ComplexMatrix::identity(5)) - 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(frobenius_norm(&ComplexMatrix::zeros(3, 3)), 0.0);
        let mut g = Lcg(8);
        let a = g.matrix(3, 5);
        let sum: f64 = (0..3)
            .flat_map(|r| (0..5).map(move |cc| (r, cc)))
            .map(|ix| a[ix].re.powi(2) + a[ix].im.powi(2))
            .sum();
        assert!((frobenius_norm(&a) - sum.sqrt()).abs() < 1e-14);
        let tr = trace(&matmul(&a.dagger(), &a).unwrap()).unwrap().re;
        assert!((frobenius_norm(&a) - tr.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn associativity() {
        let mut g = Lcg(21);
        for _ in 0..20 {
            let (a, b, cc) = (g.matrix(4, 4), g.matrix(4, 4), g.matrix(4, 4));
            let l = matmul(&matmul(&a, &b).unwrap(), &cc).unwrap();
            let r = matmul(&a, &matmul(&b, &cc).unwrap()).unwrap();
            assert!(l.approx_eq(&r, 1e-10));
        }
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(
            ComplexMatrix::from_vec(1, 1, vec![c(f64::NAN, 0.0)]),
            Err(Error::NonFinite)
        ));
    }
}
