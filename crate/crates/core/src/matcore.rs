//! Dense complex-matrix kernel.
//!
//! Storage is row-major. Tensor products follow the A-major convention: for
//! `kron(a, b)` the composite row index of `(i, j)` is `i * b.rows() + j`, so
//! the computational basis of `H_A ⊗ H_B` is ordered `|i⟩⊗|j⟩` with `i`
//! varying slowest. Every module relies on this ordering.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default absolute tolerance for structural checks.
pub const TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Below this many multiply-adds a plain triple loop beats the packed kernel.
const GEMM_THRESHOLD: usize = 32 * 32 * 32;

#[derive(Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    /// Builds a matrix from row-major entries, rejecting wrong lengths and
    /// non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!("empty {rows}x{cols} matrix")));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
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

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    /// Real-valued matrix from row-major entries. Panics on a length mismatch.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count");
        Self::from_fn(rows, cols, |r, c| Complex64::new(entries[r * cols + c], 0.0))
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |r, c| {
            if r == c {
                Complex64::new(values[r], 0.0)
            } else {
                ZERO
            }
        })
    }

    /// `|u⟩⟨v|`.
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Self {
        Self::from_fn(u.len(), v.len(), |r, c| u[r] * v[c].conj())
    }

    /// `|k⟩⟨l|` in dimension `rows × cols`.
    pub fn unit(rows: usize, cols: usize, k: usize, l: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        m[(k, l)] = ONE;
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn column(&self, c: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    /// Entrywise complex conjugate.
    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square(), "trace of a non-square matrix");
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape(), "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Frobenius norm of `self - other`.
    pub fn frobenius_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape(), "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Max entrywise deviation `|m - m†|`; infinite for non-square input.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut dev: f64 = 0.0;
        for r in 0..n {
            for c in r..n {
                dev = dev.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// `(m + m†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        (self + &self.dagger()).scale_real(0.5)
    }

    /// `Tr[self · other]` without forming the product.
    pub fn trace_product(&self, other: &CMatrix) -> Complex64 {
        assert_eq!(self.cols, other.rows, "trace_product shape");
        assert_eq!(self.rows, other.cols, "trace_product shape");
        let mut acc = ZERO;
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    /// Checked matrix product.
    pub fn matmul(&self, other: &CMatrix) -> Result<CMatrix> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(gemm(self, other))
    }
}

fn gemm(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut c = CMatrix::zeros(m, n);
    if m * k * n < GEMM_THRESHOLD {
        for i in 0..m {
            let crow = &mut c.data[i * n..(i + 1) * n];
            for p in 0..k {
                let aip = a.data[i * k + p];
                if aip == ZERO {
                    continue;
                }
                let brow = &b.data[p * n..(p + 1) * n];
                for (cij, bpj) in crow.iter_mut().zip(brow) {
                    *cij += aip * bpj;
                }
            }
        }
        return c;
    }
    // SAFETY: Complex64 is #[repr(C)] { re, im }, layout-identical to [f64; 2].
    // Pointers and row/column strides describe the full row-major buffers of
    // a (m×k), b (k×n) and c (m×n), all of which outlive the call.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.data.as_ptr() as *const [f64; 2],
            k as isize,
            1,
            b.data.as_ptr() as *const [f64; 2],
            n as isize,
            1,
            [0.0, 0.0],
            c.data.as_mut_ptr() as *mut [f64; 2],
            n as isize,
            1,
        );
    }
    c
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;

    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "add shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;

    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.shape(), rhs.shape(), "sub shape mismatch");
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &CMatrix {
    type Output = CMatrix;

    fn neg(self) -> CMatrix {
        self.scale_real(-1.0)
    }
}

/// Panics on inner-dimension mismatch; use [`CMatrix::matmul`] for a checked product.
impl Mul for &CMatrix {
    type Output = CMatrix;

    fn mul(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "mul shape mismatch");
        gemm(self, rhs)
    }
}

/// `{a, b} = ab + ba`.
pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if !a.is_square() || a.shape() != b.shape() {
        return Err(Error::Shape(format!(
            "anticommutator needs equal square matrices, got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let ab = a * b;
    let ba = b * a;
    Ok(&ab + &ba)
}

/// Kronecker product under the A-major index convention.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = CMatrix::zeros(ra * rb, ca * cb);
    let ocols = ca * cb;
    for i in 0..ra {
        for k in 0..ca {
            let aik = a[(i, k)];
            if aik == ZERO {
                continue;
            }
            for j in 0..rb {
                let row = (i * rb + j) * ocols + k * cb;
                for l in 0..cb {
                    out.data[row + l] = aik * b[(j, l)];
                }
            }
        }
    }
    out
}

/// Which tensor factor an operation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Party {
    A,
    B,
}

/// Traces out `which` from a square matrix on `H_A ⊗ H_B`.
pub fn partial_trace(m: &CMatrix, dims: (usize, usize), which: Party) -> Result<CMatrix> {
    let (da, db) = dims;
    if !m.is_square() || da == 0 || db == 0 || m.rows() != da * db {
        return Err(Error::Shape(format!(
            "partial trace of {:?} with dims ({da}, {db})",
            m.shape()
        )));
    }
    let out = match which {
        Party::B => CMatrix::from_fn(da, da, |i, k| {
            (0..db).map(|j| m[(i * db + j, k * db + j)]).sum()
        }),
        Party::A => CMatrix::from_fn(db, db, |j, l| {
            (0..da).map(|i| m[(i * db + j, i * db + l)]).sum()
        }),
    };
    Ok(out)
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermEig {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, one per column, matching `values`.
    pub vectors: CMatrix,
}

impl HermEig {
    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        self.vectors.column(k)
    }

    /// `V diag(λ) V†`.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.values.len();
        let scaled = CMatrix::from_fn(n, n, |r, c| self.vectors[(r, c)] * self.values[c]);
        &scaled * &self.vectors.dagger()
    }
}

/// Eigenvalues closer than this (relative to the spectral radius, floored
/// at 1) are treated as one degenerate eigenspace.
const DEGENERACY_TOL: f64 = 1e-12;
/// Minimum residual norm for a projected basis vector to enter a degenerate
/// eigenspace basis.
const GRAM_SCHMIDT_MIN: f64 = 1e-3;
/// Smallest modulus counted as a nonzero component when fixing phases.
const PHASE_TOL: f64 = 1e-10;

/// Hermitian eigendecomposition with deterministic output.
///
/// Eigenvalues are sorted descending. Inside each degenerate eigenspace the
/// basis is rebuilt by projecting `e_0, e_1, …` onto the space and running
/// Gram-Schmidt in index order. Every eigenvector is then rotated so that its
/// first nonzero component is real and positive.
pub fn herm_eig(m: &CMatrix) -> Result<HermEig> {
    let deviation = m.hermitian_deviation();
    if deviation > TOL {
        return Err(Error::NotHermitian { deviation });
    }
    let n = m.rows();
    let h = m.hermitian_part();
    let nm = DMatrix::from_fn(n, n, |r, c| h[(r, c)]);
    let eig = SymmetricEigen::new(nm);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    let mut values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs: Vec<Vec<Complex64>> = order
        .iter()
        .map(|&k| (0..n).map(|r| eig.eigenvectors[(r, k)]).collect())
        .collect();

    let scale = values.iter().fold(1.0_f64, |s, v| s.max(v.abs()));
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end - 1] - values[end] <= DEGENERACY_TOL * scale {
            end += 1;
        }
        if end - start > 1 {
            let mean = values[start..end].iter().sum::<f64>() / (end - start) as f64;
            values[start..end].iter_mut().for_each(|v| *v = mean);
            let basis = canonical_basis(&vecs[start..end], n);
            vecs.splice(start..end, basis);
        }
        start = end;
    }

    for v in &mut vecs {
        fix_phase(v);
    }
    let vectors = CMatrix::from_fn(n, n, |r, c| vecs[c][r]);
    Ok(HermEig { values, vectors })
}

fn dot(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn orthogonalize(v: &mut [Complex64], against: &[Vec<Complex64>]) {
    // two passes keep the result orthogonal to machine precision
    for _ in 0..2 {
        for u in against {
            let c = dot(u, v);
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= c * ui;
            }
        }
    }
}

fn canonical_basis(space: &[Vec<Complex64>], n: usize) -> Vec<Vec<Complex64>> {
    let k = space.len();
    let mut chosen: Vec<Vec<Complex64>> = Vec::with_capacity(k);
    for i in 0..n {
        if chosen.len() == k {
            break;
        }
        // P e_i = Σ_c u_c conj(u_c[i])
        let mut v = vec![ZERO; n];
        for u in space {
            let w = u[i].conj();
            for (vr, ur) in v.iter_mut().zip(u) {
                *vr += ur * w;
            }
        }
        orthogonalize(&mut v, &chosen);
        let nv = norm(&v);
        if nv > GRAM_SCHMIDT_MIN {
            v.iter_mut().for_each(|z| *z /= nv);
            chosen.push(v);
        }
    }
    // fall back to the solver's own vectors if the threshold starved us
    for u in space {
        if chosen.len() == k {
            break;
        }
        let mut v = u.clone();
        orthogonalize(&mut v, &chosen);
        let nv = norm(&v);
        if nv > GRAM_SCHMIDT_MIN {
            v.iter_mut().for_each(|z| *z /= nv);
            chosen.push(v);
        }
    }
    chosen
}

fn fix_phase(v: &mut [Complex64]) {
    if let Some(first) = v.iter().find(|z| z.norm() > PHASE_TOL).copied() {
        let phase = first.conj() / first.norm();
        v.iter_mut().for_each(|z| *z *= phase);
    }
}

/// Pauli matrices and small helpers shared by tests and examples.
pub mod pauli {
    use super::CMatrix;
    use num_complex::Complex64;

    pub fn x() -> CMatrix {
        CMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0])
    }

    pub fn y() -> CMatrix {
        let i = Complex64::new(0.0, 1.0);
        CMatrix::new(2, 2, vec![Complex64::new(0.0, 0.0), -i, i, Complex64::new(0.0, 0.0)])
            .expect("valid")
    }

    pub fn z() -> CMatrix {
        CMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0])
    }
}
