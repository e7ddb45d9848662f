//! Small helpers on complex vectors plus [`Isometry`], an orthonormal column set.

use rand::Rng;
use rand_distr::StandardNormal;

use super::matrix::{ComplexMatrix, C64, ZERO};

/// Conjugate-linear in the first argument: `<a|b>`.
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: C64, x: &mut [C64]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

pub fn distance(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

pub fn basis_vector(dim: usize, index: usize) -> Vec<C64> {
    let mut v = vec![ZERO; dim];
    v[index] = C64::new(1.0, 0.0);
    v
}

pub fn random_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C64> {
    (0..dim)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C64> {
    let mut v = random_vector(dim, rng);
    let n = norm(&v);
    scale(C64::new(1.0 / n, 0.0), &mut v);
    v
}

/// A set of orthonormal vectors in `C^dim`, i.e. the columns of an isometry `Q`.
///
/// `Q Q^dag` is the orthogonal projector onto their span.
#[derive(Clone, Debug)]
pub struct Isometry {
    dim: usize,
    cols: Vec<Vec<C64>>,
}

impl Isometry {
    pub fn empty(dim: usize) -> Self {
        Self { dim, cols: Vec::new() }
    }

    /// Wraps vectors that are already orthonormal. Only checked in debug builds.
    pub fn from_orthonormal(dim: usize, cols: Vec<Vec<C64>>) -> Self {
        debug_assert!(cols.iter().all(|c| c.len() == dim));
        Self { dim, cols }
    }

    /// Orthonormalizes `vectors` with two passes of modified Gram-Schmidt, dropping
    /// any vector whose remaining norm falls below `rel_tol` times its original norm.
    pub fn orthonormalize(dim: usize, vectors: impl IntoIterator<Item = Vec<C64>>, rel_tol: f64) -> Self {
        let mut iso = Self::empty(dim);
        for v in vectors {
            iso.try_push(v, rel_tol);
        }
        iso
    }

    /// Adds `v` orthogonalized against the current columns. Returns whether it was kept.
    pub fn try_push(&mut self, mut v: Vec<C64>, rel_tol: f64) -> bool {
        assert_eq!(v.len(), self.dim);
        let original = norm(&v);
        if original == 0.0 {
            return false;
        }
        for _ in 0..2 {
            for q in &self.cols {
                let c = dot(q, &v);
                axpy(-c, q, &mut v);
            }
        }
        let n = norm(&v);
        if n <= rel_tol * original {
            return false;
        }
        scale(C64::new(1.0 / n, 0.0), &mut v);
        self.cols.push(v);
        true
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.cols.len()
    }

    pub fn columns(&self) -> &[Vec<C64>] {
        &self.cols
    }

    pub fn into_columns(self) -> Vec<Vec<C64>> {
        self.cols
    }

    /// Coefficients `Q^dag x`.
    pub fn coefficients(&self, x: &[C64]) -> Vec<C64> {
        self.cols.iter().map(|q| dot(q, x)).collect()
    }

    /// `Q Q^dag x`
    pub fn project(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.dim];
        for q in &self.cols {
            let c = dot(q, x);
            axpy(c, q, &mut y);
        }
        y
    }

    /// `(1 - Q Q^dag) x`, in place, applied twice for stability.
    pub fn project_out(&self, x: &mut [C64]) {
        for _ in 0..2 {
            for q in &self.cols {
                let c = dot(q, x);
                axpy(-c, q, x);
            }
        }
    }

    /// Dense `Q Q^dag`.
    pub fn projector_matrix(&self) -> ComplexMatrix {
        let mut p = ComplexMatrix::zeros(self.dim, self.dim);
        for q in &self.cols {
            for i in 0..self.dim {
                if q[i] == ZERO {
                    continue;
                }
                for j in 0..self.dim {
                    p[(i, j)] += q[i] * q[j].conj();
                }
            }
        }
        p
    }

    /// Dense `Q` as a `dim x rank` matrix.
    pub fn matrix(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.dim, self.rank());
        for (j, q) in self.cols.iter().enumerate() {
            m.set_column(j, q);
        }
        m
    }

    /// Applies `f` to every column.
    pub fn map_columns(&self, new_dim: usize, f: impl Fn(&[C64]) -> Vec<C64>) -> Self {
        Self {
            dim: new_dim,
            cols: self.cols.iter().map(|c| f(c)).collect(),
        }
    }
}
