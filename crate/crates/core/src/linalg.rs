//! Dense complex matrix substrate: Hermitian eigendecomposition (cyclic
//! complex Jacobi), Kronecker products, partial traces, fractional powers of
//! positive matrices, and projection onto the PSD cone.
//!
//! Everything here is desk-scale (matrices up to ~100×100) and deterministic:
//! fixed sweep order, no randomized pivoting, no parallelism.

use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

pub const ZERO: C64 = Complex::new(0.0, 0.0);
pub const ONE: C64 = Complex::new(1.0, 0.0);
pub const IM: C64 = Complex::new(0.0, 1.0);

/// Hermiticity / reconstruction tolerance, relative to `1 + ‖input‖_F`.
pub const HERM_TOL: f64 = 1e-12;

const MAX_JACOBI_SWEEPS: usize = 64;

/// Dense complex matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Matrix unit e_{ij} of size n.
    pub fn unit(n: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m[(i, j)] = ONE;
        m
    }

    /// Diagonal matrix from real entries.
    pub fn diag(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &x) in entries.iter().enumerate() {
            m[(i, i)] = C64::new(x, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    /// Row-major flattening; the vec(·) convention used by all superoperators,
    /// so that vec(A X B) = (A ⊗ Bᵀ) vec(X).
    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn from_vec_square(n: usize, data: Vec<C64>) -> Result<Self> {
        Self::new(n, n, data)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C64 {
        debug_assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul dimension mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self[(i, k)];
                if aik == ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += aik * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, x.len(), "mul_vec dimension mismatch");
        let mut out = vec![ZERO; self.rows];
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            *o = row.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn dist_fro(&self, other: &Self) -> f64 {
        self.sub(other).norm_fro()
    }

    /// ‖M − M†‖_F / (1 + ‖M‖_F)
    pub fn hermitian_residual(&self) -> f64 {
        debug_assert!(self.is_square());
        self.sub(&self.adjoint()).norm_fro() / (1.0 + self.norm_fro())
    }

    pub fn is_hermitian(&self) -> bool {
        self.is_square() && self.hermitian_residual() <= HERM_TOL
    }

    /// (M + M†)/2
    pub fn hermitize(&self) -> Self {
        self.add(&self.adjoint()).scale_re(0.5)
    }

    /// Hilbert–Schmidt inner product Tr(A† B).
    pub fn hs_inner(&self, other: &Self) -> C64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl std::ops::Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        CMatrix::add(self, rhs)
    }
}

impl std::ops::Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        CMatrix::sub(self, rhs)
    }
}

impl std::ops::Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

/// Hermitian eigendecomposition H = V·diag(λ)·V†, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl HermEig {
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues
            .iter()
            .fold(f64::INFINITY, |m, &x| m.min(x))
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues
            .iter()
            .fold(f64::NEG_INFINITY, |m, &x| m.max(x))
    }

    /// V·diag(f(λ))·V†
    pub fn apply_fn(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let n = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for j in 0..n {
            let fj = f(self.eigenvalues[j]);
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        scaled.matmul(&v.adjoint())
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.apply_fn(|x| C64::new(x, 0.0))
    }
}

/// Hermitian eigendecomposition via cyclic complex Jacobi rotations.
pub fn herm_eig(h: &CMatrix) -> Result<HermEig> {
    if !h.is_square() {
        return Err(Error::Dimension(format!(
            "herm_eig needs a square matrix, got {}x{}",
            h.rows, h.cols
        )));
    }
    let res = h.hermitian_residual();
    if res > HERM_TOL {
        return Err(Error::NotHermitian { residual: res });
    }
    let n = h.rows;
    let mut a = h.hermitize();
    let mut v = CMatrix::identity(n);
    let scale = 1.0 + a.norm_fro();
    let off_tol = 1e-15 * scale;

    if n > 1 {
        let mut sweep = 0;
        loop {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[(p, q)].norm_sqr();
                }
            }
            if (2.0 * off).sqrt() <= off_tol {
                break;
            }
            if sweep >= MAX_JACOBI_SWEEPS {
                return Err(Error::EigNonConvergence {
                    sweeps: MAX_JACOBI_SWEEPS,
                });
            }
            sweep += 1;
            for p in 0..(n - 1) {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    let r = apq.norm();
                    if r <= 1e-18 * scale {
                        a[(p, q)] = ZERO;
                        a[(q, p)] = ZERO;
                        continue;
                    }
                    let w = apq / r;
                    let app = a[(p, p)].re;
                    let aqq = a[(q, q)].re;
                    let tau = (aqq - app) / (2.0 * r);
                    let t = if tau >= 0.0 {
                        1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    // Rotation U: U[p][p]=c, U[p][q]=s·w, U[q][p]=−s·w̄, U[q][q]=c,
                    // chosen to annihilate a_pq in A ← U†AU; accumulate V ← VU.
                    let sw = w.scale(s);
                    let swc = sw.conj();
                    for i in 0..n {
                        let aip = a[(i, p)];
                        let aiq = a[(i, q)];
                        a[(i, p)] = aip.scale(c) - aiq * swc;
                        a[(i, q)] = aip * sw + aiq.scale(c);
                    }
                    for j in 0..n {
                        let apj = a[(p, j)];
                        let aqj = a[(q, j)];
                        a[(p, j)] = apj.scale(c) - aqj * sw;
                        a[(q, j)] = apj * swc + aqj.scale(c);
                    }
                    a[(p, q)] = ZERO;
                    a[(q, p)] = ZERO;
                    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                    for i in 0..n {
                        let vip = v[(i, p)];
                        let viq = v[(i, q)];
                        v[(i, p)] = vip.scale(c) - viq * swc;
                        v[(i, q)] = vip * sw + viq.scale(c);
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(HermEig {
        eigenvalues,
        eigenvectors,
    })
}

/// P^s for positive-definite P and real s, via the eigendecomposition.
pub fn matrix_power(p: &CMatrix, s: f64) -> Result<CMatrix> {
    let eig = herm_eig(p)?;
    let floor = 1e-14 * (1.0 + eig.max_eigenvalue().abs());
    if eig.min_eigenvalue() <= floor {
        return Err(Error::NotPositiveDefinite {
            min_eig: eig.min_eigenvalue(),
        });
    }
    Ok(eig.apply_fn(|x| C64::new(x.powf(s), 0.0)).hermitize())
}

/// P^{it} = exp(it·log P) for positive-definite P; always unitary.
pub fn unitary_power(p: &CMatrix, t: f64) -> Result<CMatrix> {
    let eig = herm_eig(p)?;
    let floor = 1e-14 * (1.0 + eig.max_eigenvalue().abs());
    if eig.min_eigenvalue() <= floor {
        return Err(Error::NotPositiveDefinite {
            min_eig: eig.min_eigenvalue(),
        });
    }
    Ok(eig.apply_fn(|x| (IM.scale(t * x.ln())).exp()))
}

/// Kronecker product A ⊗ B.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca) = (a.rows(), a.cols());
    let (rb, cb) = (b.rows(), b.cols());
    let mut out = CMatrix::zeros(ra * rb, ca * cb);
    for i1 in 0..ra {
        for j1 in 0..ca {
            let aij = a[(i1, j1)];
            if aij == ZERO {
                continue;
            }
            for i2 in 0..rb {
                for j2 in 0..cb {
                    out[(i1 * rb + i2, j1 * cb + j2)] = aij * b[(i2, j2)];
                }
            }
        }
    }
    out
}

/// Tensor leg to trace out of a bipartite operator on C^{d₁} ⊗ C^{d₂}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Leg {
    First,
    Second,
}

/// Partial trace on C^{d₁}⊗C^{d₂}: Tr_first(A⊗B) = Tr(A)·B and
/// Tr_second(A⊗B) = Tr(B)·A.
pub fn partial_trace(m: &CMatrix, leg: Leg, dims: (usize, usize)) -> Result<CMatrix> {
    let (d1, d2) = dims;
    let n = d1 * d2;
    if m.rows() != n || m.cols() != n {
        return Err(Error::Dimension(format!(
            "partial_trace expects a {}x{} matrix for dims ({},{}), got {}x{}",
            n,
            n,
            d1,
            d2,
            m.rows(),
            m.cols()
        )));
    }
    Ok(match leg {
        Leg::First => CMatrix::from_fn(d2, d2, |k, l| {
            (0..d1).map(|i| m[(i * d2 + k, i * d2 + l)]).sum()
        }),
        Leg::Second => CMatrix::from_fn(d1, d1, |i, j| {
            (0..d2).map(|k| m[(i * d2 + k, j * d2 + k)]).sum()
        }),
    })
}

/// Frobenius-nearest PSD matrix: eigenvalue clipping at zero.
pub fn psd_project(h: &CMatrix) -> Result<CMatrix> {
    let eig = herm_eig(h)?;
    Ok(eig.apply_fn(|x| C64::new(x.max(0.0), 0.0)).hermitize())
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eig(h: &CMatrix) -> Result<f64> {
    Ok(herm_eig(h)?.min_eigenvalue())
}
