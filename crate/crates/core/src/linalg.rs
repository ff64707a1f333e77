//! Complex-matrix plumbing: vectorization, Hilbert-Schmidt geometry, Schatten
//! norms and the Hermitian eigendecomposition every other module builds on.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative tolerance for `A = A†`.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Smallest eigenvalue still accepted as positive semidefinite.
pub const PSD_FLOOR: f64 = -1e-8;
/// Relative residual accepted for `AV = VΛ`.
pub const RECONSTRUCTION_TOL: f64 = 1e-9;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn zeros(d: usize) -> CMatrix {
    CMatrix::zeros(d, d)
}

/// `|v⟩⟨v|`.
pub fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

pub fn ensure_square(a: &CMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare(a.nrows(), a.ncols()));
    }
    Ok(a.nrows())
}

pub fn ensure_dim(a: &CMatrix, d: usize) -> Result<()> {
    let n = ensure_square(a)?;
    if n != d {
        return Err(Error::DimensionMismatch { expected: d, got: n });
    }
    Ok(())
}

pub fn trace(a: &CMatrix) -> C64 {
    a.diagonal().iter().sum()
}

/// `⟨A, B⟩ = Tr[A†B]`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn hs_norm(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖A − A†‖_HS`.
pub fn hermitian_residual(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a[(i, j)] - a[(j, i)].conj()).norm_sqr();
        }
    }
    acc.sqrt()
}

pub fn is_hermitian(a: &CMatrix) -> bool {
    a.nrows() == a.ncols() && hermitian_residual(a) <= HERMITIAN_TOL * hs_norm(a).max(1.0)
}

/// Symmetrize to `(A + A†)/2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * c64(0.5, 0.0)
}

/// Column-stacking vectorization: `vec(|i⟩⟨j|) = |j⟩⊗|i⟩`, i.e. entry
/// `(i, j)` lands at index `j·d + i`.
pub fn vectorize(a: &CMatrix) -> Result<CVector> {
    ensure_square(a)?;
    // nalgebra storage is column-major, which is exactly this convention.
    Ok(CVector::from_column_slice(a.as_slice()))
}

pub fn devectorize(v: &CVector, d: usize) -> Result<CMatrix> {
    if v.len() != d * d {
        return Err(Error::DimensionMismatch { expected: d * d, got: v.len() });
    }
    Ok(CMatrix::from_column_slice(d, d, v.as_slice()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schatten {
    One,
    Two,
    Inf,
}

fn to_faer(a: &CMatrix) -> faer::Mat<C64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    to_faer(a).singular_values().expect("SVD did not converge")
}

/// Schatten p-norm (l_p norm of the singular values) for p ∈ {1, 2, ∞}.
pub fn schatten_norm(a: &CMatrix, p: Schatten) -> f64 {
    let sv = singular_values(a);
    match p {
        Schatten::One => sv.iter().sum(),
        Schatten::Two => sv.iter().map(|s| s * s).sum::<f64>().sqrt(),
        Schatten::Inf => sv.iter().copied().fold(0.0, f64::max),
    }
}

/// Schatten norm of a Hermitian matrix from its spectrum.
pub fn schatten_norm_hermitian(a: &CMatrix, p: Schatten) -> Result<f64> {
    let eig = eig_hermitian(a)?;
    let abs = eig.values.iter().map(|v| v.abs());
    Ok(match p {
        Schatten::One => abs.sum(),
        Schatten::Two => abs.map(|s| s * s).sum::<f64>().sqrt(),
        Schatten::Inf => abs.fold(0.0, f64::max),
    })
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `values`.
    pub vectors: CMatrix,
}

impl Eigh {
    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(f64::NAN)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::NAN)
    }

    /// `‖AV − VΛ‖_HS`.
    pub fn residual(&self, a: &CMatrix) -> f64 {
        let av = a * &self.vectors;
        let mut vl = self.vectors.clone();
        for (j, lam) in self.values.iter().enumerate() {
            vl.column_mut(j).scale_mut(*lam);
        }
        hs_norm(&(av - vl))
    }

    pub fn reconstruct(&self) -> CMatrix {
        let mut vl = self.vectors.clone();
        for (j, lam) in self.values.iter().enumerate() {
            vl.column_mut(j).scale_mut(*lam);
        }
        vl * self.vectors.adjoint()
    }
}

/// Eigendecomposition of a Hermitian matrix. Eigenvalues ascending; ties keep
/// the order the solver produced them in (stable sort).
pub fn eig_hermitian(a: &CMatrix) -> Result<Eigh> {
    let n = ensure_square(a)?;
    let res = hermitian_residual(a);
    if res > HERMITIAN_TOL * hs_norm(a).max(1.0) {
        return Err(Error::NotHermitian(res));
    }
    if n == 0 {
        return Ok(Eigh { values: Vec::new(), vectors: CMatrix::zeros(0, 0) });
    }
    let sym = hermitian_part(a);
    let eig = to_faer(&sym)
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigensolver failed: {e:?}")))?;
    let (s, u) = (eig.S(), eig.U());
    let raw: Vec<f64> = (0..n).map(|i| s[i].re).collect();
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite eigenvalue".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| raw[i].total_cmp(&raw[j]));
    let values: Vec<f64> = order.iter().map(|&i| raw[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| u[(i, order[j])]);
    Ok(Eigh { values, vectors })
}

pub fn min_eigenvalue(a: &CMatrix) -> Result<f64> {
    Ok(eig_hermitian(a)?.min())
}

/// Apply `f` to the spectrum of a Hermitian matrix.
pub fn hermitian_function(a: &CMatrix, f: impl Fn(f64) -> f64) -> Result<CMatrix> {
    let eig = eig_hermitian(a)?;
    let mut vf = eig.vectors.clone();
    for (j, lam) in eig.values.iter().enumerate() {
        vf.column_mut(j).scale_mut(f(*lam));
    }
    Ok(vf * eig.vectors.adjoint())
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `‖V†V − I‖_HS` for a matrix whose columns should be orthonormal.
pub fn orthonormality_residual(v: &CMatrix) -> f64 {
    let g = v.adjoint() * v;
    hs_norm(&(g - CMatrix::identity(v.ncols(), v.ncols())))
}

/// Entrywise real part, for matrices known to be real up to rounding.
pub fn real_parts(a: &CMatrix) -> DMatrix<f64> {
    a.map(|z| z.re)
}
