//! Haar sampling, permutation operators and exact Haar moment projectors.
//!
//! Moment vectors live on `(C^D)^{⊗t} ⊗ (C^D)^{⊗t}`. For `D = 2^n` registers there are two
//! orderings of the `2tn` qubit axes: copy-major (copy index outermost, the natural order of
//! `U^{⊗t} ⊗ Ū^{⊗t}`) and site-major (qubit index outermost, so every site carries a `4^t`
//! dimensional local space and `vec(r(π))` factorizes as `v_π^{⊗n}`).

use itertools::Itertools;
use rand::Rng;

use crate::error::{Error, Result};
use crate::tensor::dense::eigh_real_small;
use crate::tensor::krylov::DEFAULT_DENSE_CAP;
use crate::tensor::layout::{apply_on_axis, permute_axes};
use crate::tensor::matrix::{ComplexMatrix, C64, ONE, ZERO};
use crate::tensor::operator::LinearOperator;
use crate::tensor::vector::{axpy, dot, kron_vec, norm, scale, Isometry};
use crate::tensor::eigh;

/// Largest moment order handled by the exact permutation machinery.
pub const MAX_T: usize = 6;

/// A permutation of `0..t` as its image list: `p[k] = π(k)`.
pub type Permutation = Vec<usize>;

/// All permutations of `0..t` in lexicographic order (identity first).
pub fn permutations(t: usize) -> Vec<Permutation> {
    (0..t).permutations(t).collect()
}

/// `(p ∘ q)(k) = p(q(k))`
pub fn compose(p: &[usize], q: &[usize]) -> Permutation {
    q.iter().map(|&k| p[k]).collect()
}

pub fn inverse(p: &[usize]) -> Permutation {
    let mut inv = vec![0; p.len()];
    for (k, &pk) in p.iter().enumerate() {
        inv[pk] = k;
    }
    inv
}

pub fn cycle_count(p: &[usize]) -> usize {
    let mut seen = vec![false; p.len()];
    let mut cycles = 0;
    for start in 0..p.len() {
        if seen[start] {
            continue;
        }
        cycles += 1;
        let mut k = start;
        while !seen[k] {
            seen[k] = true;
            k = p[k];
        }
    }
    cycles
}

fn check_t(t: usize) -> Result<()> {
    if t == 0 || t > MAX_T {
        return Err(Error::InvalidParameter(format!("moment order t = {t} outside 1..={MAX_T}")));
    }
    Ok(())
}

fn check_permutation(pi: &[usize]) -> Result<()> {
    let mut seen = vec![false; pi.len()];
    for &p in pi {
        if p >= pi.len() || seen[p] {
            return Err(Error::InvalidParameter(format!("{pi:?} is not a permutation")));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Haar-random unitary: complex Ginibre matrix orthonormalized column by column, which fixes
/// the diagonal of the triangular factor to be positive.
pub fn sample_haar<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let g = ComplexMatrix::ginibre(d, d, rng);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
    for j in 0..d {
        let mut v = g.column(j);
        for _ in 0..2 {
            for q in &cols {
                let c = dot(q, &v);
                axpy(-c, q, &mut v);
            }
        }
        let n = norm(&v);
        scale(C64::new(1.0 / n, 0.0), &mut v);
        cols.push(v);
    }
    let mut u = ComplexMatrix::zeros(d, d);
    for (j, c) in cols.iter().enumerate() {
        u.set_column(j, c);
    }
    u
}

/// `r(π)|i_1 … i_t> = |i_{π^{-1}(1)} … i_{π^{-1}(t)}>` on `(C^D)^{⊗t}`, so `r(π) r(σ) = r(πσ)`.
#[derive(Clone, Debug)]
pub struct PermutationOperator {
    pub t: usize,
    pub d: usize,
    pub pi: Permutation,
    /// `image[i]` is the basis index that basis index `i` is sent to.
    image: Vec<usize>,
}

pub fn permutation_operator(pi: &[usize], d: usize, t: usize) -> Result<PermutationOperator> {
    check_t(t)?;
    if pi.len() != t {
        return Err(Error::InvalidParameter(format!("permutation {pi:?} has length != t = {t}")));
    }
    check_permutation(pi)?;
    let total = d.pow(t as u32);
    let image = (0..total)
        .map(|i| {
            let digits = crate::tensor::layout::unravel(i, &vec![d; t]);
            let mut out = vec![0; t];
            for k in 0..t {
                out[pi[k]] = digits[k];
            }
            out.iter().fold(0, |acc, &x| acc * d + x)
        })
        .collect();
    Ok(PermutationOperator { t, d, pi: pi.to_vec(), image })
}

impl PermutationOperator {
    pub fn matrix(&self) -> ComplexMatrix {
        let n = self.image.len();
        let mut m = ComplexMatrix::zeros(n, n);
        for (i, &j) in self.image.iter().enumerate() {
            m[(j, i)] = ONE;
        }
        m
    }

    /// `vec(r(π))` with the row-major convention.
    pub fn vectorized(&self) -> Vec<C64> {
        let n = self.image.len();
        let mut v = vec![ZERO; n * n];
        for (i, &j) in self.image.iter().enumerate() {
            v[j * n + i] = ONE;
        }
        v
    }

    pub fn trace(&self) -> usize {
        self.image.iter().enumerate().filter(|(i, j)| i == *j).count()
    }
}

impl LinearOperator for PermutationOperator {
    fn dim(&self) -> usize {
        self.image.len()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        for (i, &j) in self.image.iter().enumerate() {
            y[j] = x[i];
        }
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        for (i, &j) in self.image.iter().enumerate() {
            y[i] = x[j];
        }
    }
    fn is_hermitian(&self) -> bool {
        compose(&self.pi, &self.pi).iter().enumerate().all(|(k, &v)| k == v)
    }
}

/// `G_{π,σ} = Tr[r(π)^dag r(σ)] = D^{#cycles(π^{-1}σ)}`, rows in [`permutations`] order.
pub fn gram_matrix(d: usize, t: usize) -> Result<Vec<Vec<f64>>> {
    check_t(t)?;
    let perms = permutations(t);
    Ok(perms
        .iter()
        .map(|p| {
            let pinv = inverse(p);
            perms
                .iter()
                .map(|s| (d as f64).powi(cycle_count(&compose(&pinv, s)) as i32))
                .collect()
        })
        .collect())
}

fn symmetric_eigen(g: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = g.len();
    let flat: Vec<f64> = g.iter().flatten().copied().collect();
    eigh_real_small(n, &flat)
}

/// Numerical rank of a Gram matrix with the cutoff used throughout: `1e-10 · σ_max`.
pub fn gram_rank(g: &[Vec<f64>]) -> Result<usize> {
    let (vals, _) = symmetric_eigen(g)?;
    let smax = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(vals.iter().filter(|v| **v > 1e-10 * smax).count())
}

/// Orthonormal basis of `span{w_π}` from the Gram eigendecomposition: `q_a = Σ_π V_{πa} w_π / √λ_a`
/// over eigenvalues above `1e-10 · λ_max`.
pub fn span_from_gram(vectors: &[Vec<C64>], gram: &[Vec<f64>]) -> Result<Isometry> {
    let n = vectors.len();
    if gram.len() != n {
        return Err(Error::Shape(format!("{} vectors with a {}x{} Gram matrix", n, gram.len(), gram.len())));
    }
    let dim = vectors.first().map_or(0, |v| v.len());
    let (vals, vecs) = symmetric_eigen(gram)?;
    let smax = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut cols = Vec::new();
    for a in (0..n).rev() {
        if vals[a] <= 1e-10 * smax {
            continue;
        }
        let mut q = vec![ZERO; dim];
        for (p, w) in vectors.iter().enumerate() {
            let c = vecs[p * n + a];
            if c != 0.0 {
                axpy(C64::new(c, 0.0), w, &mut q);
            }
        }
        scale(C64::new(1.0 / vals[a].sqrt(), 0.0), &mut q);
        cols.push(q);
    }
    Ok(Isometry::from_orthonormal(dim, cols))
}

/// Vectors `vec(r(π))` for every permutation, copy-major, dimension `D^{2t}`.
pub fn permutation_vectors(d: usize, t: usize) -> Result<Vec<Vec<C64>>> {
    check_t(t)?;
    permutations(t)
        .iter()
        .map(|p| permutation_operator(p, d, t).map(|r| r.vectorized()))
        .collect()
}

/// Orthonormal basis of the Haar fixed space on `(C^D)^{⊗2t}`, copy-major.
pub fn haar_span(d: usize, t: usize) -> Result<Isometry> {
    let vs = permutation_vectors(d, t)?;
    span_from_gram(&vs, &gram_matrix(d, t)?)
}

/// Axis permutation taking a copy-major vector of an `n`-qubit, order-`t` moment space to
/// site-major: output axis `q·2t + c` is input axis `c·n + q`.
pub fn site_major_permutation(n: usize, t: usize) -> Vec<usize> {
    let mut perm = vec![0; 2 * t * n];
    for q in 0..n {
        for c in 0..2 * t {
            perm[q * 2 * t + c] = c * n + q;
        }
    }
    perm
}

pub fn to_site_major(x: &[C64], n: usize, t: usize) -> Result<Vec<C64>> {
    permute_axes(x, &vec![2; 2 * t * n], &site_major_permutation(n, t))
}

pub fn to_copy_major(x: &[C64], n: usize, t: usize) -> Result<Vec<C64>> {
    let inv = inverse(&site_major_permutation(n, t));
    permute_axes(x, &vec![2; 2 * t * n], &inv)
}

/// Single-qubit permutation vectors `v_π = vec(r_2(π))`, each of dimension `4^t`.
pub fn qubit_permutation_vectors(t: usize) -> Result<Vec<Vec<C64>>> {
    permutation_vectors(2, t)
}

/// Haar fixed space of an `n`-qubit register in site-major order, spanned by `v_π^{⊗n}`.
pub fn qubit_haar_span(n: usize, t: usize) -> Result<Isometry> {
    let local = qubit_permutation_vectors(t)?;
    let global: Vec<Vec<C64>> = local
        .iter()
        .map(|v| {
            let mut g = vec![ONE];
            for _ in 0..n {
                g = kron_vec(&g, v);
            }
            g
        })
        .collect();
    span_from_gram(&global, &gram_matrix(1usize << n, t)?)
}

/// Exact Haar moment projector `P_H = M(μ_H, t)` on `D^{2t}` dimensions.
#[derive(Clone, Debug)]
pub struct HaarProjector {
    pub d: usize,
    pub t: usize,
    pub rank: usize,
    pub basis: Isometry,
    pub matrix: ComplexMatrix,
}

pub fn haar_projector(d: usize, t: usize) -> Result<HaarProjector> {
    haar_projector_capped(d, t, DEFAULT_DENSE_CAP)
}

pub fn haar_projector_capped(d: usize, t: usize, cap: usize) -> Result<HaarProjector> {
    check_t(t)?;
    let dim = d.pow(2 * t as u32);
    if dim > cap {
        return Err(Error::CapExceeded { dim, cap });
    }
    let basis = haar_span(d, t)?;
    Ok(HaarProjector {
        d,
        t,
        rank: basis.rank(),
        matrix: basis.projector_matrix(),
        basis,
    })
}

/// `S = D^{-t} Σ_π vec(r(π)) vec(r(π))^dag`
pub fn frame_operator(d: usize, t: usize) -> Result<ComplexMatrix> {
    check_t(t)?;
    let dim = d.pow(2 * t as u32);
    if dim > DEFAULT_DENSE_CAP {
        return Err(Error::CapExceeded { dim, cap: DEFAULT_DENSE_CAP });
    }
    let mut s = ComplexMatrix::zeros(dim, dim);
    let norm = (d as f64).powi(-(t as i32));
    for v in permutation_vectors(d, t)? {
        let nz: Vec<usize> = (0..dim).filter(|&i| v[i] != ZERO).collect();
        for &i in &nz {
            for &j in &nz {
                s[(i, j)] += C64::new(norm, 0.0) * v[i] * v[j].conj();
            }
        }
    }
    Ok(s)
}

/// Nonzero spectrum of the frame operator, `spec(G)/D^t`, descending; zeros dropped.
pub fn frame_spectrum(d: usize, t: usize) -> Result<Vec<f64>> {
    let g = gram_matrix(d, t)?;
    let (vals, _) = symmetric_eigen(&g)?;
    let smax = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let norm = (d as f64).powi(-(t as i32));
    Ok(vals.iter().rev().filter(|v| **v > 1e-10 * smax).map(|v| v * norm).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OrthogonalityResidual {
    pub d: usize,
    pub t: usize,
    pub residual: f64,
    pub bound: f64,
    pub satisfied: bool,
}

/// `‖P_H - S‖_∞` against `t²/D`.
///
/// Both operators live on `span{vec(r(π))}`, so the norm is taken on the `rank`-dimensional
/// compression `1 - D^{-t} B B^dag` with `B = Q^dag W`, never forming `D^{2t}`-sized matrices.
pub fn orthogonality_residual(d: usize, t: usize) -> Result<OrthogonalityResidual> {
    let vs = permutation_vectors(d, t)?;
    let g = gram_matrix(d, t)?;
    let q = span_from_gram(&vs, &g)?;
    let r = q.rank();
    let b: Vec<Vec<C64>> = vs.iter().map(|w| q.coefficients(w)).collect();
    let norm = (d as f64).powi(-(t as i32));
    let k = ComplexMatrix::from_fn(r, r, |i, j| {
        let s: C64 = b.iter().map(|col| col[i] * col[j].conj()).sum();
        let id = if i == j { ONE } else { ZERO };
        id - s * norm
    });
    let (vals, _) = eigh(&(&k + &k.adjoint()).scaled_real(0.5), false)?;
    let residual = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let bound = (t * t) as f64 / d as f64;
    Ok(OrthogonalityResidual {
        d,
        t,
        residual,
        bound,
        satisfied: residual <= bound,
    })
}

/// Least-squares slope of `log residual` against `log D` over the supplied dimensions, an
/// optional diagnostic of how the residual scales. Dimensions with zero residual are skipped.
pub fn residual_scaling_exponent(t: usize, dims: &[usize]) -> Result<Option<f64>> {
    let mut pts = Vec::new();
    for &d in dims {
        let r = orthogonality_residual(d, t)?.residual;
        if r > 1e-14 {
            pts.push(((d as f64).ln(), r.ln()));
        }
    }
    if pts.len() < 2 {
        return Ok(None);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(Some(sxy / sxx))
}

/// Dense `U^{⊗t} ⊗ Ū^{⊗t}`, copy-major.
pub fn moment_matrix(u: &ComplexMatrix, t: usize) -> ComplexMatrix {
    u.kron_power(t).kron(&u.conj().kron_power(t))
}

/// `(U^{⊗t} ⊗ Ū^{⊗t}) x` for a copy-major vector, factor by factor.
pub fn apply_moment(u: &ComplexMatrix, t: usize, x: &[C64]) -> Vec<C64> {
    let d = u.rows();
    let dims = vec![d; 2 * t];
    let ubar = u.conj();
    let mut y = x.to_vec();
    for axis in 0..2 * t {
        y = apply_on_axis(&y, &dims, axis, if axis < t { u } else { &ubar });
    }
    y
}

/// Monte Carlo estimate of `E U^{⊗t} ⊗ Ū^{⊗t}` over Haar `U`.
pub fn empirical_moment<R: Rng + ?Sized>(d: usize, t: usize, samples: usize, rng: &mut R) -> ComplexMatrix {
    let dim = d.pow(2 * t as u32);
    let mut acc = ComplexMatrix::zeros(dim, dim);
    for _ in 0..samples {
        let m = moment_matrix(&sample_haar(d, rng), t);
        for (a, b) in acc.data_mut().iter_mut().zip(m.data()) {
            *a += b;
        }
    }
    acc.scaled_real(1.0 / samples as f64)
}

/// `‖A - B‖` in Frobenius norm, the distance used for Monte Carlo convergence checks.
pub fn frobenius_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a - b).frobenius_norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::dense::schatten_norm;
    use crate::tensor::SchattenP;
    use crate::tensor::vector::{distance, random_vector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn haar_sample_is_unitary_and_d1_is_a_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for d in 1..6 {
            let u = sample_haar(d, &mut rng);
            assert!(u.is_unitary(1e-12));
        }
        let u = sample_haar(1, &mut rng);
        assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn first_moment_of_entries() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let samples = 20000;
        let xs: Vec<f64> = (0..samples).map(|_| sample_haar(4, &mut rng)[(0, 0)].norm_sqr()).collect();
        let mean = xs.iter().sum::<f64>() / samples as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
        let se = (var / samples as f64).sqrt();
        assert!((mean - 0.25).abs() < 3.0 * se, "mean {mean}, se {se}");
    }

    #[test]
    fn t1_empirical_moment_approaches_identity_projector() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let m = empirical_moment(2, 1, 20000, &mut rng);
        let p = haar_projector(2, 1).unwrap();
        let err = schatten_norm(&(&m - &p.matrix), SchattenP::Infinity).unwrap();
        assert!(err < 3e-2, "{err}");
    }

    #[test]
    fn left_invariance_of_second_moment_statistic() {
        // E|(VU)_{00}|^4 matches E|U_{00}|^4 = 2/(d(d+1)) for a fixed V
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let v = sample_haar(3, &mut rng);
        let samples = 20000;
        let stat = |shift: bool, rng: &mut ChaCha8Rng| {
            let xs: Vec<f64> = (0..samples)
                .map(|_| {
                    let u = sample_haar(3, rng);
                    let w = if shift { v.matmul(&u) } else { u };
                    w[(0, 0)].norm_sqr().powi(2)
                })
                .collect();
            let mean = xs.iter().sum::<f64>() / samples as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
            (mean, (var / samples as f64).sqrt())
        };
        let (a, sa) = stat(false, &mut rng);
        let (b, sb) = stat(true, &mut rng);
        let exact = 2.0 / 12.0;
        assert!((a - exact).abs() < 4.0 * sa);
        assert!((b - exact).abs() < 4.0 * sb);
    }

    #[test]
    fn permutation_operator_basics() {
        let id = permutation_operator(&[0, 1, 2], 3, 3).unwrap();
        assert_eq!(id.matrix(), ComplexMatrix::identity(27));
        let swap = permutation_operator(&[1, 0], 2, 2).unwrap();
        let f = swap.matrix();
        assert_eq!(f.matmul(&f), ComplexMatrix::identity(4));
        assert!(swap.is_hermitian());
        let cyc = permutation_operator(&[1, 2, 0], 2, 3).unwrap();
        assert_eq!(cyc.trace(), 2);
        assert!(permutation_operator(&[0, 0], 2, 2).is_err());
    }

    #[test]
    fn permutation_action_moves_tensor_factors() {
        // r(π)|i_1 i_2 i_3> puts i_k at slot π(k)
        let r = permutation_operator(&[1, 2, 0], 3, 3).unwrap();
        let input = (0 * 3 + 1) * 3 + 2; // |0 1 2>
        let mut x = vec![ZERO; 27];
        x[input] = ONE;
        let y = r.apply_vec(&x);
        let expected = (2 * 3) * 3 + 1; // |2 0 1>
        assert_eq!(y[expected], ONE);
    }

    #[test]
    fn representation_is_a_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for p in permutations(3) {
            for q in permutations(3) {
                let rp = permutation_operator(&p, 2, 3).unwrap();
                let rq = permutation_operator(&q, 2, 3).unwrap();
                let rpq = permutation_operator(&compose(&p, &q), 2, 3).unwrap();
                let x = random_vector(8, &mut rng);
                let lhs = rp.apply_vec(&rq.apply_vec(&x));
                assert!(distance(&lhs, &rpq.apply_vec(&x)) < 1e-12);
            }
        }
    }

    #[test]
    fn gram_examples() {
        assert_eq!(gram_matrix(5, 1).unwrap(), vec![vec![5.0]]);
        assert_eq!(gram_matrix(2, 2).unwrap(), vec![vec![4.0, 2.0], vec![2.0, 4.0]]);
        assert_eq!(gram_matrix(4, 2).unwrap(), vec![vec![16.0, 4.0], vec![4.0, 16.0]]);
        assert!(gram_matrix(2, 7).is_err());
    }

    #[test]
    fn gram_matches_explicit_traces() {
        let perms = permutations(3);
        let g = gram_matrix(2, 3).unwrap();
        for (a, p) in perms.iter().enumerate() {
            for (b, q) in perms.iter().enumerate() {
                let rp = permutation_operator(p, 2, 3).unwrap().matrix();
                let rq = permutation_operator(q, 2, 3).unwrap().matrix();
                let tr = rp.adjoint().matmul(&rq).trace();
                assert_eq!(tr.re, g[a][b]);
            }
        }
    }

    #[test]
    fn haar_projector_ranks() {
        let p = haar_projector(3, 1).unwrap();
        assert_eq!(p.rank, 1);
        let v: Vec<C64> = crate::tensor::layout::vectorize(&ComplexMatrix::identity(3))
            .unwrap()
            .iter()
            .map(|z| z / 3f64.sqrt())
            .collect();
        assert!(p.matrix.max_abs_diff(&ComplexMatrix::outer(&v, &v)) < 1e-14);
        assert_eq!(haar_projector(4, 2).unwrap().rank, 2);
        // D=2 < t=3: the antisymmetric permutation combination vanishes
        let g = gram_matrix(2, 3).unwrap();
        assert_eq!(haar_projector(2, 3).unwrap().rank, gram_rank(&g).unwrap());
        assert_eq!(gram_rank(&g).unwrap(), 5);
        assert!(matches!(haar_projector(8, 3), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn haar_projector_is_projector_fixing_permutations() {
        for (d, t) in [(2, 2), (2, 3), (3, 2)] {
            let p = haar_projector(d, t).unwrap();
            assert!(p.matrix.matmul(&p.matrix).max_abs_diff(&p.matrix) < 1e-10);
            assert!(p.matrix.is_hermitian(1e-12));
            for v in permutation_vectors(d, t).unwrap() {
                assert!(distance(&p.matrix.matvec(&v), &v) < 1e-10);
            }
        }
    }

    #[test]
    fn projector_absorbs_haar_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        for (d, t) in [(2, 1), (2, 3), (4, 2), (3, 2)] {
            let p = haar_projector(d, t).unwrap();
            let u = sample_haar(d, &mut rng);
            let m = moment_matrix(&u, t);
            let pmp = p.matrix.matmul(&m).matmul(&p.matrix);
            assert!(pmp.max_abs_diff(&p.matrix) < 1e-8);
        }
    }

    #[test]
    fn apply_moment_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let u = sample_haar(2, &mut rng);
        let x = random_vector(64, &mut rng);
        let dense = moment_matrix(&u, 3).matvec(&x);
        assert!(distance(&dense, &apply_moment(&u, 3, &x)) < 1e-12);
    }

    #[test]
    fn site_major_vectors_factorize() {
        for (n, t) in [(2, 1), (2, 2), (3, 2), (2, 3)] {
            let global = permutation_vectors(1 << n, t).unwrap();
            let local = qubit_permutation_vectors(t).unwrap();
            for (g, l) in global.iter().zip(&local) {
                let mut expected = vec![ONE];
                for _ in 0..n {
                    expected = kron_vec(&expected, l);
                }
                let sm = to_site_major(g, n, t).unwrap();
                assert!(distance(&sm, &expected) < 1e-15);
                assert!(distance(&to_copy_major(&sm, n, t).unwrap(), g) < 1e-15);
            }
        }
    }

    #[test]
    fn qubit_span_rank_matches_gram() {
        for (n, t) in [(2, 2), (2, 3), (3, 3), (4, 2)] {
            let q = qubit_haar_span(n, t).unwrap();
            let g = gram_matrix(1 << n, t).unwrap();
            assert_eq!(q.rank(), gram_rank(&g).unwrap());
        }
    }

    #[test]
    fn frame_operator_examples() {
        let s = frame_operator(3, 1).unwrap();
        assert!(s.max_abs_diff(&haar_projector(3, 1).unwrap().matrix) < 1e-14);
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-10);
        assert!(close(&frame_spectrum(2, 2).unwrap(), &[1.5, 0.5]));
        assert!(close(&frame_spectrum(4, 2).unwrap(), &[1.25, 0.75]));
    }

    #[test]
    fn frame_spectrum_matches_dense_frame_operator() {
        for (d, t) in [(2, 2), (2, 3), (3, 2)] {
            let s = frame_operator(d, t).unwrap();
            let (vals, _) = eigh(&s, false).unwrap();
            let mut nonzero: Vec<f64> = vals.into_iter().filter(|v| v.abs() > 1e-9).collect();
            nonzero.reverse();
            let expected = frame_spectrum(d, t).unwrap();
            assert_eq!(nonzero.len(), expected.len());
            for (a, b) in nonzero.iter().zip(&expected) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn orthogonality_residual_values() {
        let r = orthogonality_residual(2, 2).unwrap();
        assert!((r.residual - 0.5).abs() < 1e-10);
        assert_eq!(r.bound, 2.0);
        assert!((orthogonality_residual(4, 2).unwrap().residual - 0.25).abs() < 1e-10);
        assert!(orthogonality_residual(5, 1).unwrap().residual < 1e-12);
    }

    #[test]
    fn compressed_residual_matches_dense() {
        for (d, t) in [(2, 2), (2, 3), (3, 2), (4, 2)] {
            let dense = &haar_projector(d, t).unwrap().matrix - &frame_operator(d, t).unwrap();
            let direct = schatten_norm(&dense, SchattenP::Infinity).unwrap();
            let compressed = orthogonality_residual(d, t).unwrap().residual;
            assert!((direct - compressed).abs() < 1e-10);
        }
    }

    #[test]
    fn scaling_exponent_is_negative() {
        let e = residual_scaling_exponent(2, &[4, 8, 16, 32]).unwrap().unwrap();
        assert!(e < -0.5, "{e}");
    }
}
