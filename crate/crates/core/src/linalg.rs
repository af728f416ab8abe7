//! Dense complex matrix core: Hermitian and general eigendecomposition,
//! resolvents, normalized traces and operator norms.
//!
//! All types are immutable value types and every operation is a pure function,
//! so everything here is safe to call concurrently from independent workers.
//! Eigenvalue problems are delegated to LAPACK (zheev / zgeev / zgesdd) through
//! `ndarray-linalg`; resolvents of a fixed Hermitian matrix are built from one
//! cached eigendecomposition so that many spectral parameters z can be served
//! cheaply (see [`HermitianEigen`]).

use ndarray::prelude::*;
use ndarray_linalg::{Determinant, Eig, Eigh, EigValsh, SVD, UPLO};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not Hermitian at ({row}, {col})")]
    NotHermitian { row: usize, col: usize },
    #[error("spectral parameter must have Im z != 0, got z = {z}")]
    RealSpectralParameter { z: Complex64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("eigensolver failed on a {n}x{n} matrix (max |entry| ~ {scale:.3e}): {source}")]
    Eigensolver {
        n: usize,
        scale: f64,
        #[source]
        source: ndarray_linalg::error::LinalgError,
    },
}

fn check_square_finite(data: &Array2<Complex64>) -> Result<(), LinalgError> {
    let (rows, cols) = data.dim();
    if rows != cols {
        return Err(LinalgError::NotSquare { rows, cols });
    }
    for ((i, j), v) in data.indexed_iter() {
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(LinalgError::NonFinite { row: i, col: j });
        }
    }
    Ok(())
}

fn max_abs(data: &Array2<Complex64>) -> f64 {
    data.iter().fold(0.0f64, |m, v| m.max(v.norm()))
}

/// A square complex matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    data: Array2<Complex64>,
}

impl ComplexMatrix {
    pub fn new(data: Array2<Complex64>) -> Result<Self, LinalgError> {
        check_square_finite(&data)?;
        Ok(Self { data })
    }

    pub fn from_fn<F: FnMut(usize, usize) -> Complex64>(
        n: usize,
        mut f: F,
    ) -> Result<Self, LinalgError> {
        Self::new(Array2::from_shape_fn((n, n), |(i, j)| f(i, j)))
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            data: Array2::zeros((n, n)),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            data: Array2::eye(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[[i, j]]
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim();
        Self {
            data: Array2::from_shape_fn((n, n), |(i, j)| self.data[[j, i]].conj()),
        }
    }

    /// self + s * other
    pub fn add_scaled(&self, s: Complex64, other: &Self) -> Result<Self, LinalgError> {
        if self.dim() != other.dim() {
            return Err(LinalgError::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(Self {
            data: &self.data + &other.data.mapv(|v| s * v),
        })
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self {
            data: self.data.mapv(|v| s * v),
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self, LinalgError> {
        if self.dim() != rhs.dim() {
            return Err(LinalgError::DimensionMismatch {
                left: self.dim(),
                right: rhs.dim(),
            });
        }
        Ok(Self {
            data: self.data.dot(&rhs.data),
        })
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.dim();
        for i in 0..n {
            for j in i..n {
                let d = self.data[[i, j]] - self.data[[j, i]].conj();
                if d.norm() > tol {
                    return false;
                }
            }
        }
        true
    }
}

/// A Hermitian matrix: entries[i][j] == conj(entries[j][i]) exactly, real diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    data: Array2<Complex64>,
}

impl HermitianMatrix {
    /// Accepts the matrix only if it is exactly Hermitian (bitwise on entries).
    pub fn try_new(data: Array2<Complex64>) -> Result<Self, LinalgError> {
        check_square_finite(&data)?;
        let n = data.nrows();
        for i in 0..n {
            for j in i..n {
                let upper = data[[i, j]];
                let lower = data[[j, i]];
                if upper.re != lower.re || upper.im != -lower.im {
                    return Err(LinalgError::NotHermitian { row: i, col: j });
                }
            }
        }
        Ok(Self { data })
    }

    /// Enforce Hermiticity by symmetrization: (M + M*) / 2 with the diagonal made real.
    pub fn symmetrized(m: &ComplexMatrix) -> Self {
        let n = m.dim();
        let mut data = Array2::zeros((n, n));
        for i in 0..n {
            data[[i, i]] = Complex64::new(m.get(i, i).re, 0.0);
            for j in (i + 1)..n {
                let v = 0.5 * (m.get(i, j) + m.get(j, i).conj());
                data[[i, j]] = v;
                data[[j, i]] = v.conj();
            }
        }
        Self { data }
    }

    /// Build from the upper triangle: `f(i, j)` is consulted for i <= j; the
    /// diagonal keeps only its real part and the lower triangle mirrors the
    /// conjugate, so the result is Hermitian by construction.
    pub fn from_upper<F: FnMut(usize, usize) -> Complex64>(n: usize, mut f: F) -> Self {
        let mut data = Array2::zeros((n, n));
        for i in 0..n {
            data[[i, i]] = Complex64::new(f(i, i).re, 0.0);
            for j in (i + 1)..n {
                let v = f(i, j);
                data[[i, j]] = v;
                data[[j, i]] = v.conj();
            }
        }
        Self { data }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            data: Array2::zeros((n, n)),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            data: Array2::eye(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[[i, j]]
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        ComplexMatrix {
            data: self.data.clone(),
        }
    }

    /// Real scaling preserves Hermiticity.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            data: self.data.mapv(|v| s * v),
        }
    }

    /// <W> = tr(W) / n; real because the diagonal is real.
    pub fn normalized_trace(&self) -> f64 {
        let n = self.dim();
        (0..n).map(|i| self.data[[i, i]].re).sum::<f64>() / n as f64
    }

    /// Largest |eigenvalue|, computed without eigenvectors (zheev 'N').
    pub fn operator_norm(&self) -> Result<f64, LinalgError> {
        let vals = self
            .data
            .eigvalsh(UPLO::Lower)
            .map_err(|source| LinalgError::Eigensolver {
                n: self.dim(),
                scale: max_abs(&self.data),
                source,
            })?;
        Ok(vals.iter().fold(0.0f64, |m, &v| m.max(v.abs())))
    }
}

/// Which kind of spectrum a [`Spectrum`] holds, fixing its canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    /// Real eigenvalues of a Hermitian matrix, sorted ascending.
    HermitianReal,
    /// Complex eigenvalues, sorted lexicographically by (Re, Im).
    GeneralComplex,
}

/// Canonically ordered eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<Complex64>,
    kind: SpectrumKind,
}

impl Spectrum {
    pub fn hermitian(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        Self {
            values: values
                .into_iter()
                .map(|v| Complex64::new(v, 0.0))
                .collect(),
            kind: SpectrumKind::HermitianReal,
        }
    }

    pub fn general(mut values: Vec<Complex64>) -> Self {
        values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        Self {
            values,
            kind: SpectrumKind::GeneralComplex,
        }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn kind(&self) -> SpectrumKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Real parts, only meaningful for `HermitianReal` spectra.
    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }
}

/// Cached eigendecomposition H = U diag(lambda) U* of a Hermitian matrix.
///
/// One decomposition serves many spectral parameters: resolvents, Stieltjes
/// transforms and their derivatives are all O(n) or O(n^2) per z from here.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    values: Vec<f64>,
    vectors: Array2<Complex64>,
}

impl HermitianEigen {
    pub fn new(h: &HermitianMatrix) -> Result<Self, LinalgError> {
        let (vals, mut vecs) = h
            .entries()
            .eigh(UPLO::Lower)
            .map_err(|source| LinalgError::Eigensolver {
                n: h.dim(),
                scale: max_abs(h.entries()),
                source,
            })?;
        // LAPACK sees the row-major buffer as its transpose, i.e. conj(H) for a
        // Hermitian matrix, so depending on the backend wiring the returned
        // eigenvectors may belong to conj(H). Pick the orientation whose first
        // column is actually an eigenvector of H (one matvec each, O(n^2)).
        let col0 = vecs.column(0).to_owned();
        let lam0 = Complex64::new(vals[0], 0.0);
        let resid = |u: &Array1<Complex64>| -> f64 {
            let hu = h.entries().dot(u);
            (&hu - &u.mapv(|v| lam0 * v))
                .iter()
                .map(|v| v.norm_sqr())
                .sum::<f64>()
                .sqrt()
        };
        let plain = resid(&col0);
        let conjugated = resid(&col0.mapv(|v| v.conj()));
        if conjugated < plain {
            vecs.mapv_inplace(|v| v.conj());
        }
        Ok(Self {
            values: vals.to_vec(),
            vectors: vecs,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Ascending real eigenvalues.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    /// Unitary eigenvector matrix (columns are eigenvectors).
    pub fn vectors(&self) -> &Array2<Complex64> {
        &self.vectors
    }

    pub fn spectrum(&self) -> Spectrum {
        Spectrum::hermitian(self.values.clone())
    }

    /// U diag(f(lambda)) U*
    fn apply_spectral<F: Fn(f64) -> Complex64>(&self, f: F) -> Array2<Complex64> {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for (k, mut col) in scaled.columns_mut().into_iter().enumerate() {
            let fv = f(self.values[k]);
            col.mapv_inplace(|v| v * fv);
        }
        let mut out = Array2::zeros((n, n));
        ndarray::linalg::general_mat_mul(
            Complex64::new(1.0, 0.0),
            &scaled,
            &self.vectors.t().mapv(|v| v.conj()),
            Complex64::new(0.0, 0.0),
            &mut out,
        );
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        ComplexMatrix {
            data: self.apply_spectral(|l| Complex64::new(l, 0.0)),
        }
    }

    /// G_z = (H - z)^{-1} via the cached eigenbasis. Im z must be nonzero.
    pub fn resolvent(&self, z: Complex64) -> Result<ComplexMatrix, LinalgError> {
        if z.im == 0.0 {
            return Err(LinalgError::RealSpectralParameter { z });
        }
        Ok(ComplexMatrix {
            data: self.apply_spectral(|l| (Complex64::new(l, 0.0) - z).inv()),
        })
    }

    /// m(z) = <G_z> = n^{-1} sum_i (lambda_i - z)^{-1}
    pub fn stieltjes(&self, z: Complex64) -> Result<Complex64, LinalgError> {
        if z.im == 0.0 {
            return Err(LinalgError::RealSpectralParameter { z });
        }
        let sum: Complex64 = self
            .values
            .iter()
            .map(|&l| (Complex64::new(l, 0.0) - z).inv())
            .sum();
        Ok(sum / self.dim() as f64)
    }

    /// m'(z) = <G_z^2> = n^{-1} sum_i (lambda_i - z)^{-2}
    pub fn stieltjes_prime(&self, z: Complex64) -> Result<Complex64, LinalgError> {
        if z.im == 0.0 {
            return Err(LinalgError::RealSpectralParameter { z });
        }
        let sum: Complex64 = self
            .values
            .iter()
            .map(|&l| {
                let d = Complex64::new(l, 0.0) - z;
                (d * d).inv()
            })
            .sum();
        Ok(sum / self.dim() as f64)
    }

    /// U* M U — the matrix M expressed in the eigenbasis of H.
    pub fn rotate_to_eigenbasis(&self, m: &Array2<Complex64>) -> Array2<Complex64> {
        let uh = self.vectors.t().mapv(|v| v.conj());
        uh.dot(m).dot(&self.vectors)
    }
}

/// Eigendecomposition of a Hermitian matrix: ascending spectrum plus the
/// unitary eigenvector matrix, with H = U diag(lambda) U*.
pub fn hermitian_eigen(h: &HermitianMatrix) -> Result<(Spectrum, ComplexMatrix), LinalgError> {
    let eig = HermitianEigen::new(h)?;
    let vectors = ComplexMatrix {
        data: eig.vectors.clone(),
    };
    Ok((eig.spectrum(), vectors))
}

/// Eigenvalues of a general complex matrix in canonical (Re, Im) order.
pub fn general_eigen(m: &ComplexMatrix) -> Result<Spectrum, LinalgError> {
    let (vals, _) = m
        .entries()
        .eig()
        .map_err(|source| LinalgError::Eigensolver {
            n: m.dim(),
            scale: max_abs(m.entries()),
            source,
        })?;
    Ok(Spectrum::general(vals.to_vec()))
}

/// G_z = (H - z)^{-1}, computed from a fresh eigendecomposition of H.
///
/// Callers that need many z for the same H should hold a [`HermitianEigen`].
pub fn resolvent(h: &HermitianMatrix, z: Complex64) -> Result<ComplexMatrix, LinalgError> {
    HermitianEigen::new(h)?.resolvent(z)
}

/// <M> = tr(M) / n
pub fn normalized_trace(m: &ComplexMatrix) -> Complex64 {
    let n = m.dim();
    (0..n).map(|i| m.get(i, i)).sum::<Complex64>() / n as f64
}

/// W - <W> (the traceless part); differs from W by a real multiple of the identity.
pub fn traceless_part(w: &HermitianMatrix) -> HermitianMatrix {
    let mean = w.normalized_trace();
    let mut data = w.entries().clone();
    for i in 0..w.dim() {
        data[[i, i]] -= Complex64::new(mean, 0.0);
    }
    HermitianMatrix { data }
}

/// Largest singular value via LAPACK SVD.
pub fn operator_norm(m: &ComplexMatrix) -> Result<f64, LinalgError> {
    let (_, sigma, _) = m
        .entries()
        .svd(false, false)
        .map_err(|source| LinalgError::Eigensolver {
            n: m.dim(),
            scale: max_abs(m.entries()),
            source,
        })?;
    Ok(sigma.iter().fold(0.0f64, |a, &s| a.max(s)))
}

/// det(M), via LU. Used for small kernel matrices and test oracles.
pub fn determinant(m: &ComplexMatrix) -> Result<Complex64, LinalgError> {
    m.entries().det().map_err(|source| LinalgError::Eigensolver {
        n: m.dim(),
        scale: max_abs(m.entries()),
        source,
    })
}
