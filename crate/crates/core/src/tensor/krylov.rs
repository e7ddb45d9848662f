//! Hermitian eigensolvers: a dense path through `faer` and a thick-restart Lanczos
//! (Krylov-Schur for Hermitian operators) path for large matrix-free operators.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dense::{eigh, eigh_real_small};
use super::matrix::{ComplexMatrix, C64, ZERO};
use super::operator::{densify, LinearOperator};
use super::vector::{axpy, dot, norm, random_vector, scale, Isometry};
use crate::error::{Error, Result};

/// Largest dimension the dense path accepts.
pub const DEFAULT_DENSE_CAP: usize = 1 << 13;

/// Below this dimension `SolverChoice::Auto` goes dense.
pub const AUTO_DENSE_LIMIT: usize = 1 << 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Which {
    /// The `k` algebraically largest eigenvalues, descending.
    Largest(usize),
    /// The `k` algebraically smallest eigenvalues, ascending.
    Smallest(usize),
    /// Whole spectrum, ascending. Dense only.
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    /// Dense when `dim <= dense_cap`, Krylov otherwise.
    Auto,
    Dense,
    Krylov,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverMethod {
    Dense,
    Krylov,
}

#[derive(Clone, Debug)]
pub struct EigOptions {
    pub which: Which,
    /// Orthonormal basis of a subspace removed from the search.
    pub deflate: Option<Isometry>,
    pub dense_cap: usize,
    pub solver: SolverChoice,
    /// Ritz residual tolerance relative to `max(1, |theta|)`.
    pub tol: f64,
    pub krylov_dim: Option<usize>,
    pub max_restarts: usize,
    pub seed: u64,
    pub want_vectors: bool,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self {
            which: Which::Largest(1),
            deflate: None,
            dense_cap: AUTO_DENSE_LIMIT,
            solver: SolverChoice::Auto,
            tol: 1e-11,
            krylov_dim: None,
            max_restarts: 1000,
            seed: 0x5eed,
            want_vectors: false,
        }
    }
}

impl EigOptions {
    pub fn largest(k: usize) -> Self {
        Self { which: Which::Largest(k), ..Self::default() }
    }

    pub fn smallest(k: usize) -> Self {
        Self { which: Which::Smallest(k), ..Self::default() }
    }

    pub fn full() -> Self {
        Self { which: Which::Full, ..Self::default() }
    }

    pub fn deflating(mut self, basis: Isometry) -> Self {
        self.deflate = Some(basis);
        self
    }

    pub fn with_solver(mut self, solver: SolverChoice) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_dense_cap(mut self, cap: usize) -> Self {
        self.dense_cap = cap;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_vectors(mut self) -> Self {
        self.want_vectors = true;
        self
    }
}

#[derive(Clone, Debug)]
pub struct EigResult {
    pub values: Vec<f64>,
    pub vectors: Option<Vec<Vec<C64>>>,
    /// Ritz residual norms for the Krylov path; zeros for the dense path.
    pub residuals: Vec<f64>,
    pub method: SolverMethod,
    pub restarts: usize,
    pub matvecs: usize,
}

/// Extremal (or all) eigenvalues of a Hermitian operator, optionally on the orthogonal
/// complement of `opts.deflate`.
pub fn hermitian_eigs(op: &dyn LinearOperator, opts: &EigOptions) -> Result<EigResult> {
    let n = op.dim();
    if let Some(q) = &opts.deflate {
        if q.dim() != n {
            return Err(Error::Shape(format!("deflation basis of dim {} for operator of dim {n}", q.dim())));
        }
    }
    let dense = match opts.solver {
        SolverChoice::Dense => true,
        SolverChoice::Krylov => false,
        SolverChoice::Auto => n <= opts.dense_cap,
    };
    if dense || matches!(opts.which, Which::Full) {
        if n > opts.dense_cap.max(DEFAULT_DENSE_CAP) && !matches!(opts.solver, SolverChoice::Dense) {
            return Err(Error::CapExceeded { dim: n, cap: opts.dense_cap });
        }
        return dense_eigs(op, opts);
    }
    krylov_eigs(op, opts)
}

fn dense_eigs(op: &dyn LinearOperator, opts: &EigOptions) -> Result<EigResult> {
    let n = op.dim();
    let mut a = densify(op);
    let scale_a = a.max_abs().max(1.0);
    let dev = a.hermitian_deviation();
    if dev > 1e-10 * scale_a {
        return Err(Error::NotHermitian { deviation: dev, tolerance: 1e-10 * scale_a });
    }
    let rank = opts.deflate.as_ref().map_or(0, |q| q.rank());
    if let Some(q) = opts.deflate.as_ref().filter(|q| q.rank() > 0) {
        // (1-P) A (1-P) + s P, with s below the spectrum so the deflated block sorts first
        let shift = -(a.frobenius_norm() + 1.0);
        a = deflated_dense(&a, q, shift);
    }
    // remove sub-tolerance asymmetry
    a = (&a + &a.adjoint()).scaled_real(0.5);
    let (vals, vecs) = eigh(&a, opts.want_vectors)?;
    let kept: Vec<usize> = (rank..n).collect();
    let order: Vec<usize> = match opts.which {
        Which::Full => kept,
        Which::Smallest(k) => kept.into_iter().take(k).collect(),
        Which::Largest(k) => kept.into_iter().rev().take(k).collect(),
    };
    let values = order.iter().map(|&i| vals[i]).collect::<Vec<_>>();
    let vectors = vecs.map(|v| order.iter().map(|&i| v.column(i)).collect());
    Ok(EigResult {
        residuals: vec![0.0; values.len()],
        values,
        vectors,
        method: SolverMethod::Dense,
        restarts: 0,
        matvecs: n,
    })
}

fn deflated_dense(a: &ComplexMatrix, q: &Isometry, shift: f64) -> ComplexMatrix {
    let n = a.rows();
    let qm = q.matrix();
    let qa = qm.adjoint().matmul(a);
    let aq = a.matmul(&qm);
    let qaq = qm.adjoint().matmul(&aq);
    let r = q.rank();
    let mut out = a.clone();
    // qaq_shifted = Q^dag A Q + s 1
    let mut inner = qaq;
    for i in 0..r {
        inner[(i, i)] += C64::new(shift, 0.0);
    }
    let q_inner = qm.matmul(&inner);
    for i in 0..n {
        for j in 0..n {
            let mut v = out[(i, j)];
            for l in 0..r {
                let qil = qm[(i, l)];
                let qjl = qm[(j, l)].conj();
                v -= qil * qa[(l, j)] + aq[(i, l)] * qjl;
                v += q_inner[(i, l)] * qjl;
            }
            out[(i, j)] = v;
        }
    }
    out
}

fn krylov_eigs(op: &dyn LinearOperator, opts: &EigOptions) -> Result<EigResult> {
    let n = op.dim();
    let (k, sign) = match opts.which {
        Which::Largest(k) => (k, 1.0),
        Which::Smallest(k) => (k, -1.0),
        Which::Full => unreachable!("full spectra go through the dense path"),
    };
    let deflate = opts.deflate.as_ref().filter(|q| q.rank() > 0);
    let n_eff = n - deflate.map_or(0, |q| q.rank());
    let k = k.min(n_eff);
    if k == 0 {
        return Ok(EigResult {
            values: vec![],
            vectors: opts.want_vectors.then(Vec::new),
            residuals: vec![],
            method: SolverMethod::Krylov,
            restarts: 0,
            matvecs: 0,
        });
    }
    let m = opts.krylov_dim.unwrap_or((2 * k + 16).max(32)).max(k + 2).min(n_eff);
    let mut matvecs = 0usize;
    let mut tmp = vec![ZERO; n];
    let mut apply = |x: &[C64], y: &mut Vec<C64>| {
        op.apply(x, &mut tmp);
        for (yi, ti) in y.iter_mut().zip(&tmp) {
            *yi = ti * sign;
        }
        if let Some(q) = deflate {
            q.project_out(y);
        }
        matvecs += 1;
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let fresh = |basis: &[Vec<C64>], rng: &mut ChaCha8Rng| -> Option<Vec<C64>> {
        let mut v = random_vector(n, rng);
        if let Some(q) = deflate {
            q.project_out(&mut v);
        }
        let original = norm(&v);
        for _ in 0..2 {
            for b in basis {
                let c = dot(b, &v);
                axpy(-c, b, &mut v);
            }
        }
        let nv = norm(&v);
        if nv <= 1e-10 * original {
            return None;
        }
        scale(C64::new(1.0 / nv, 0.0), &mut v);
        Some(v)
    };

    let mut basis: Vec<Vec<C64>> = vec![fresh(&[], &mut rng).ok_or_else(|| Error::Decomposition("empty search space".into()))?];
    let mut t = vec![0.0f64; m * m];
    let mut kept = 0usize;
    let mut w = vec![ZERO; n];
    let mut residual_vec: Vec<C64>;
    let mut last_residuals = Vec::new();
    for restart in 0..=opts.max_restarts {
        let mut size = m;
        let mut beta_last = 0.0;
        residual_vec = Vec::new();
        let mut j = kept;
        while j < m {
            apply(&basis[j], &mut w);
            t[j * m + j] = dot(&basis[j], &w).re;
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(b, &w);
                    axpy(-c, b, &mut w);
                }
            }
            // reorthogonalization reintroduces rounding-level pieces of the deflated space,
            // which a near-breakdown normalization would amplify
            if let Some(q) = deflate {
                q.project_out(&mut w);
            }
            let beta = norm(&w);
            let scale_t = t[j * m + j].abs().max(1.0);
            if j + 1 == m {
                beta_last = beta;
                residual_vec = w.clone();
                break;
            }
            if beta <= 1e-12 * scale_t {
                match fresh(&basis, &mut rng) {
                    Some(v) => {
                        t[j * m + j + 1] = 0.0;
                        t[(j + 1) * m + j] = 0.0;
                        basis.push(v);
                    }
                    None => {
                        size = j + 1;
                        break;
                    }
                }
            } else {
                t[j * m + j + 1] = beta;
                t[(j + 1) * m + j] = beta;
                let mut v = w.clone();
                scale(C64::new(1.0 / beta, 0.0), &mut v);
                basis.push(v);
            }
            j += 1;
        }

        let sub: Vec<f64> = (0..size * size).map(|idx| t[(idx / size) * m + idx % size]).collect();
        let (theta, y) = eigh_real_small(size, &sub)?;
        // descending order of the signed operator
        let order: Vec<usize> = (0..size).rev().collect();
        let resid: Vec<f64> = order.iter().map(|&i| (beta_last * y[(size - 1) * size + i]).abs()).collect();
        let scale_theta = theta.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let kk = k.min(size);
        let converged = resid[..kk].iter().all(|r| *r <= opts.tol * scale_theta);
        last_residuals = resid[..kk].to_vec();
        if converged || size < m {
            let values: Vec<f64> = order[..kk].iter().map(|&i| sign * theta[i]).collect();
            let vectors = opts.want_vectors.then(|| {
                order[..kk]
                    .iter()
                    .map(|&i| ritz_vector(&basis[..size], &y, size, i, n))
                    .collect()
            });
            return Ok(EigResult {
                values,
                vectors,
                residuals: last_residuals,
                method: SolverMethod::Krylov,
                restarts: restart,
                matvecs,
            });
        }
        if restart == opts.max_restarts {
            break;
        }
        // thick restart: keep p Ritz vectors plus the residual direction
        let p = (k + (m - k) / 2).min(m - 1);
        let new_basis: Vec<Vec<C64>> = order[..p]
            .iter()
            .map(|&i| ritz_vector(&basis[..size], &y, size, i, n))
            .collect();
        t.iter_mut().for_each(|x| *x = 0.0);
        for (slot, &i) in order[..p].iter().enumerate() {
            t[slot * m + slot] = theta[i];
            let b = beta_last * y[(size - 1) * size + i];
            t[slot * m + p] = b;
            t[p * m + slot] = b;
        }
        basis = new_basis;
        scale(C64::new(1.0 / beta_last, 0.0), &mut residual_vec);
        basis.push(residual_vec);
        kept = p;
    }
    Err(Error::NonConvergence {
        iterations: opts.max_restarts,
        residuals: last_residuals,
    })
}

fn ritz_vector(basis: &[Vec<C64>], y: &[f64], size: usize, col: usize, n: usize) -> Vec<C64> {
    let mut x = vec![ZERO; n];
    for (l, b) in basis.iter().enumerate() {
        let c = y[l * size + col];
        if c != 0.0 {
            axpy(C64::new(c, 0.0), b, &mut x);
        }
    }
    x
}

/// `‖A - P‖_∞` for Hermitian `A` whose top eigenspace contains the range of `P`, computed as
/// the largest absolute eigenvalue of `A` on the complement of `fixed`.
pub fn deflated_norm(op: &dyn LinearOperator, fixed: &Isometry, opts: &EigOptions) -> Result<EigResult> {
    let dense = match opts.solver {
        SolverChoice::Dense => true,
        SolverChoice::Krylov => false,
        SolverChoice::Auto => op.dim() <= opts.dense_cap,
    };
    if dense {
        // one full decomposition gives both ends
        let mut full = hermitian_eigs(op, &EigOptions { which: Which::Full, deflate: Some(fixed.clone()), want_vectors: false, ..opts.clone() })?;
        let top = full.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        full.values = vec![top];
        full.residuals = vec![0.0];
        return Ok(full);
    }
    let hi = hermitian_eigs(op, &EigOptions { which: Which::Largest(1), deflate: Some(fixed.clone()), ..opts.clone() })?;
    let lo = hermitian_eigs(op, &EigOptions { which: Which::Smallest(1), deflate: Some(fixed.clone()), ..opts.clone() })?;
    let top = hi.values.first().copied().unwrap_or(0.0);
    let bottom = lo.values.first().copied().unwrap_or(0.0);
    let mut out = if bottom.abs() > top.abs() { lo } else { hi };
    out.values = vec![top.abs().max(bottom.abs())];
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::operator::{kron_lift, DenseOperator, LinearCombination, SharedOperator};
    use crate::tensor::vector::random_vector;
    use std::sync::Arc;

    #[test]
    fn diagonal_spectrum() {
        let op = DenseOperator::new(ComplexMatrix::real_diagonal(&[0.0, 1.0, 2.0])).unwrap();
        let r = hermitian_eigs(&op, &EigOptions::full()).unwrap();
        assert_eq!(r.method, SolverMethod::Dense);
        for (v, e) in r.values.iter().zip([0.0, 1.0, 2.0]) {
            assert!((v - e).abs() < 1e-14);
        }
    }

    fn random_projector_sum(seed: u64, sites: usize, local: usize, rank: usize) -> LinearCombination {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = vec![local; sites];
        let mut sum = LinearCombination::new(local.pow(sites as u32), 0.0);
        for s in 0..sites {
            let vs: Vec<_> = (0..rank).map(|_| random_vector(local * local, &mut rng)).collect();
            let q = Isometry::orthonormalize(local * local, vs, 1e-10);
            let lift: SharedOperator = Arc::new(kron_lift(q, s, &dims).unwrap());
            sum = sum.with_term(1.0, lift).unwrap();
        }
        sum
    }

    #[test]
    fn krylov_matches_dense_on_lifted_projector_sum() {
        let op = random_projector_sum(31, 3, 4, 3);
        let dense = hermitian_eigs(&op, &EigOptions::largest(3)).unwrap();
        let kry = hermitian_eigs(&op, &EigOptions::largest(3).with_solver(SolverChoice::Krylov)).unwrap();
        assert_eq!(kry.method, SolverMethod::Krylov);
        for (a, b) in dense.values.iter().zip(&kry.values) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        let dense = hermitian_eigs(&op, &EigOptions::smallest(2)).unwrap();
        let kry = hermitian_eigs(&op, &EigOptions::smallest(2).with_solver(SolverChoice::Krylov)).unwrap();
        for (a, b) in dense.values.iter().zip(&kry.values) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn deflation_removes_known_eigenvectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let h = ComplexMatrix::random_hermitian(40, &mut rng);
        let op = DenseOperator::new(h.clone()).unwrap();
        let full = hermitian_eigs(&op, &EigOptions::full().with_vectors()).unwrap();
        let vecs = full.vectors.unwrap();
        // deflate the top two eigenvectors
        let q = Isometry::orthonormalize(40, vec![vecs[39].clone(), vecs[38].clone()], 1e-10);
        for solver in [SolverChoice::Dense, SolverChoice::Krylov] {
            let r = hermitian_eigs(&op, &EigOptions::largest(1).deflating(q.clone()).with_solver(solver)).unwrap();
            assert!((r.values[0] - full.values[37]).abs() < 1e-8, "{solver:?}");
            let r = hermitian_eigs(&op, &EigOptions::smallest(1).deflating(q.clone()).with_solver(solver)).unwrap();
            assert!((r.values[0] - full.values[0]).abs() < 1e-8, "{solver:?}");
        }
    }

    #[test]
    fn krylov_is_reproducible() {
        let op = random_projector_sum(33, 3, 4, 2);
        let opts = EigOptions::largest(2).with_solver(SolverChoice::Krylov).with_seed(9);
        let a = hermitian_eigs(&op, &opts).unwrap();
        let b = hermitian_eigs(&op, &opts).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.residuals, b.residuals);
    }

    #[test]
    fn krylov_handles_exhausted_space() {
        // rank-2 operator on C^6: the Krylov space becomes invariant immediately
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let q = Isometry::orthonormalize(6, (0..2).map(|_| random_vector(6, &mut rng)).collect::<Vec<_>>(), 1e-10);
        let op = DenseOperator::new(q.projector_matrix()).unwrap();
        let r = hermitian_eigs(&op, &EigOptions::largest(3).with_solver(SolverChoice::Krylov)).unwrap();
        assert!((r.values[0] - 1.0).abs() < 1e-10);
        assert!((r.values[1] - 1.0).abs() < 1e-10);
        assert!(r.values[2].abs() < 1e-10);
    }

    #[test]
    fn dense_rejects_non_hermitian() {
        let mut a = ComplexMatrix::identity(3);
        a[(0, 2)] = C64::new(1.0, 0.0);
        let op = DenseOperator::new(a).unwrap();
        assert!(matches!(hermitian_eigs(&op, &EigOptions::full()), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn non_convergence_carries_residuals() {
        let op = random_projector_sum(35, 3, 4, 3);
        let opts = EigOptions {
            max_restarts: 0,
            krylov_dim: Some(4),
            tol: 1e-15,
            ..EigOptions::largest(2).with_solver(SolverChoice::Krylov)
        };
        match hermitian_eigs(&op, &opts) {
            Err(Error::NonConvergence { residuals, .. }) => assert_eq!(residuals.len(), 2),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
