//! Dense decompositions backed by `faer`: Hermitian eigensolver, SVD and what is built on them.

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use super::matrix::{ComplexMatrix, C64};
use crate::error::{Error, Result};

fn to_faer(a: &ComplexMatrix) -> Mat<C64> {
    Mat::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)])
}

fn to_faer_real(a: &ComplexMatrix) -> Mat<f64> {
    Mat::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)].re)
}

/// Full spectrum of a Hermitian matrix, ascending, with optional eigenvectors as columns.
///
/// Real symmetric input is routed through the real solver.
pub fn eigh(a: &ComplexMatrix, want_vectors: bool) -> Result<(Vec<f64>, Option<ComplexMatrix>)> {
    if !a.is_square() {
        return Err(Error::Shape(format!("eigh on {}x{}", a.rows(), a.cols())));
    }
    let n = a.rows();
    if a.is_real() {
        let m = to_faer_real(a);
        if !want_vectors {
            let vals = m
                .self_adjoint_eigenvalues(Side::Lower)
                .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
            return Ok((vals, None));
        }
        let evd = m
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
        let vals: Vec<f64> = (0..n).map(|i| evd.S().column_vector()[i]).collect();
        let u = evd.U();
        let vecs = ComplexMatrix::from_fn(n, n, |i, j| C64::new(u[(i, j)], 0.0));
        return Ok((vals, Some(vecs)));
    }
    let m = to_faer(a);
    if !want_vectors {
        let vals = m
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
        return Ok((vals, None));
    }
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    let vals: Vec<f64> = (0..n).map(|i| evd.S().column_vector()[i].re).collect();
    let u = evd.U();
    let vecs = ComplexMatrix::from_fn(n, n, |i, j| u[(i, j)]);
    Ok((vals, Some(vecs)))
}

/// Real symmetric eigendecomposition of a small dense matrix given row-major.
pub(crate) fn eigh_real_small(n: usize, a: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = Mat::<f64>::from_fn(n, n, |i, j| a[i * n + j]);
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    let vals: Vec<f64> = (0..n).map(|i| evd.S().column_vector()[i]).collect();
    let u = evd.U();
    let mut vecs = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            vecs[i * n + j] = u[(i, j)];
        }
    }
    Ok((vals, vecs))
}

/// Singular values, nonincreasing.
pub fn singular_values(a: &ComplexMatrix) -> Result<Vec<f64>> {
    let m = to_faer(a);
    let s = m
        .singular_values()
        .map_err(|e| Error::Decomposition(format!("SVD did not converge: {e:?}")))?;
    Ok(s)
}

/// Full SVD `A = U diag(s) V^dag`.
pub fn svd(a: &ComplexMatrix) -> Result<(ComplexMatrix, Vec<f64>, ComplexMatrix)> {
    let m = to_faer(a);
    let dec = m
        .svd()
        .map_err(|e| Error::Decomposition(format!("SVD did not converge: {e:?}")))?;
    let u = dec.U();
    let v = dec.V();
    let k = a.rows().min(a.cols());
    let s: Vec<f64> = (0..k).map(|i| dec.S().column_vector()[i].re).collect();
    let uu = ComplexMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)]);
    let vv = ComplexMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)]);
    Ok((uu, s, vv))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchattenP {
    One,
    Two,
    Infinity,
}

/// Schatten norm from singular values.
pub fn schatten_norm(a: &ComplexMatrix, p: SchattenP) -> Result<f64> {
    let s = singular_values(a)?;
    Ok(match p {
        SchattenP::One => s.iter().sum(),
        SchattenP::Two => s.iter().map(|x| x * x).sum::<f64>().sqrt(),
        SchattenP::Infinity => s.first().copied().unwrap_or(0.0),
    })
}

/// Operator norm of a Hermitian matrix via its spectrum (cheaper than an SVD).
pub fn hermitian_operator_norm(a: &ComplexMatrix) -> Result<f64> {
    let (vals, _) = eigh(a, false)?;
    Ok(vals.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

#[derive(Clone, Debug)]
pub struct PolarResult {
    pub unitary: ComplexMatrix,
    /// Set when the smallest singular value is below `1e-12` times the largest; the
    /// unitary factor is then completed from the SVD bases, deterministically.
    pub rank_deficient: bool,
    pub singular_values: Vec<f64>,
}

/// Unitary factor `U` of `A = U P`, the maximizer of `Re Tr(V^dag A)` over unitaries.
pub fn polar_unitary(a: &ComplexMatrix) -> Result<PolarResult> {
    if !a.is_square() {
        return Err(Error::Shape(format!("polar decomposition of {}x{}", a.rows(), a.cols())));
    }
    let (u, s, v) = svd(a)?;
    let unitary = u.matmul(&v.adjoint());
    let smax = s.first().copied().unwrap_or(0.0);
    let smin = s.last().copied().unwrap_or(0.0);
    Ok(PolarResult {
        unitary,
        rank_deficient: smin <= 1e-12 * smax.max(f64::MIN_POSITIVE),
        singular_values: s,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdReport {
    pub psd: bool,
    pub min_eigenvalue: f64,
}

/// Positive-semidefiniteness test: `λ_min(A) >= -tol`.
pub fn psd_check(a: &ComplexMatrix, tol: f64) -> Result<PsdReport> {
    let dev = a.hermitian_deviation();
    if dev > tol {
        return Err(Error::NotHermitian { deviation: dev, tolerance: tol });
    }
    // symmetrize away sub-tolerance asymmetry before handing to the solver
    let h = (&a.clone() + &a.adjoint()).scaled_real(0.5);
    let (vals, _) = eigh(&h, false)?;
    let min = vals.first().copied().unwrap_or(0.0);
    Ok(PsdReport { psd: min >= -tol, min_eigenvalue: min })
}
