//! Matrix-free linear operators on tensor-product spaces.

use std::sync::Arc;

use super::layout::{strides, unravel};
use super::matrix::{ComplexMatrix, C64, ZERO};
use super::vector::{axpy, Isometry};
use crate::error::{Error, Result};

/// A square linear map on `C^dim` given by its action.
///
/// Implementations are immutable once built, so they can be shared across threads.
pub trait LinearOperator: Send + Sync {
    fn dim(&self) -> usize;

    /// `y = A x`. `y` is overwritten.
    fn apply(&self, x: &[C64], y: &mut [C64]);

    /// `y = A^dag x`. `y` is overwritten.
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]);

    /// Whether the operator is Hermitian by construction.
    fn is_hermitian(&self) -> bool;

    /// Kronecker structure, when the operator is a single lifted local factor.
    fn factors(&self) -> Option<&[KronFactor]> {
        None
    }

    fn apply_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.dim()];
        self.apply(x, &mut y);
        y
    }
}

pub type SharedOperator = Arc<dyn LinearOperator>;

/// Dense matrix of an operator, one basis vector at a time.
pub fn densify(op: &dyn LinearOperator) -> ComplexMatrix {
    let n = op.dim();
    let mut m = ComplexMatrix::zeros(n, n);
    let mut e = vec![ZERO; n];
    let mut col = vec![ZERO; n];
    for j in 0..n {
        e[j] = C64::new(1.0, 0.0);
        op.apply(&e, &mut col);
        m.set_column(j, &col);
        e[j] = ZERO;
    }
    m
}

/// The matrix acting on a group of sites.
#[derive(Clone, Debug)]
pub enum LocalOperator {
    Dense(ComplexMatrix),
    /// Orthogonal projector `Q Q^dag` stored through its orthonormal columns.
    Projector(Isometry),
}

impl LocalOperator {
    pub fn dim(&self) -> usize {
        match self {
            LocalOperator::Dense(m) => m.rows(),
            LocalOperator::Projector(q) => q.dim(),
        }
    }

    pub fn is_hermitian(&self) -> bool {
        match self {
            LocalOperator::Dense(m) => m.is_hermitian(1e-12),
            LocalOperator::Projector(_) => true,
        }
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        match self {
            LocalOperator::Dense(m) => m.clone(),
            LocalOperator::Projector(q) => q.projector_matrix(),
        }
    }

    /// Applies the local matrix to each column of the `dim x cols` block `x` (row-major).
    fn apply_block(&self, x: &[C64], cols: usize, adjoint: bool) -> Vec<C64> {
        let d = self.dim();
        let mut out = vec![ZERO; d * cols];
        match self {
            LocalOperator::Dense(m) => {
                for i in 0..d {
                    let out_row = &mut out[i * cols..(i + 1) * cols];
                    for k in 0..d {
                        let a = if adjoint { m[(k, i)].conj() } else { m[(i, k)] };
                        if a == ZERO {
                            continue;
                        }
                        axpy(a, &x[k * cols..(k + 1) * cols], out_row);
                    }
                }
            }
            LocalOperator::Projector(q) => {
                for col in q.columns() {
                    // coefficient row: c_r = sum_l conj(q_l) x[l][r]
                    let mut coeff = vec![ZERO; cols];
                    for (l, ql) in col.iter().enumerate() {
                        if *ql == ZERO {
                            continue;
                        }
                        axpy(ql.conj(), &x[l * cols..(l + 1) * cols], &mut coeff);
                    }
                    for (l, ql) in col.iter().enumerate() {
                        if *ql == ZERO {
                            continue;
                        }
                        axpy(*ql, &coeff, &mut out[l * cols..(l + 1) * cols]);
                    }
                }
            }
        }
        out
    }
}

impl From<ComplexMatrix> for LocalOperator {
    fn from(m: ComplexMatrix) -> Self {
        LocalOperator::Dense(m)
    }
}

impl From<Isometry> for LocalOperator {
    fn from(q: Isometry) -> Self {
        LocalOperator::Projector(q)
    }
}

/// A local matrix together with the ordered sites it acts on.
#[derive(Clone, Debug)]
pub struct KronFactor {
    pub sites: Vec<usize>,
    pub local: LocalOperator,
}

impl KronFactor {
    /// Dense `1 ⊗ L ⊗ 1` built directly from Kronecker products (contiguous, unwrapped
    /// site ranges) or from the index formula otherwise.
    pub fn dense(&self, dims: &[usize]) -> ComplexMatrix {
        let l = self.local.to_dense();
        let contiguous = self.sites.windows(2).all(|w| w[1] == w[0] + 1);
        if contiguous {
            let first = self.sites[0];
            let last = *self.sites.last().unwrap();
            let left: usize = dims[..first].iter().product();
            let right: usize = dims[last + 1..].iter().product();
            return ComplexMatrix::identity(left)
                .kron(&l)
                .kron(&ComplexMatrix::identity(right));
        }
        let total: usize = dims.iter().product();
        let local_dims: Vec<usize> = self.sites.iter().map(|&s| dims[s]).collect();
        ComplexMatrix::from_fn(total, total, |i, j| {
            let di = unravel(i, dims);
            let dj = unravel(j, dims);
            for s in 0..dims.len() {
                if !self.sites.contains(&s) && di[s] != dj[s] {
                    return ZERO;
                }
            }
            let fold = |d: &[usize]| {
                self.sites
                    .iter()
                    .zip(&local_dims)
                    .fold(0usize, |acc, (&s, &ld)| acc * ld + d[s])
            };
            l[(fold(&di), fold(&dj))]
        })
    }
}

/// `1 ⊗ L ⊗ 1` acting on the listed sites of a register with per-site dimensions `dims`.
#[derive(Clone, Debug)]
pub struct KronLift {
    dim: usize,
    factor: [KronFactor; 1],
    local_offsets: Vec<usize>,
    rest_offsets: Vec<usize>,
    hermitian: bool,
}

impl KronLift {
    pub fn new(local: LocalOperator, sites: Vec<usize>, dims: &[usize]) -> Result<Self> {
        let n = dims.len();
        if sites.is_empty() {
            return Err(Error::Shape("a lift needs at least one site".into()));
        }
        for (pos, &s) in sites.iter().enumerate() {
            if s >= n {
                return Err(Error::DimensionMismatch { site: s, expected: n, found: s });
            }
            if sites[..pos].contains(&s) {
                return Err(Error::Shape(format!("site {s} listed twice")));
            }
        }
        let local_dims: Vec<usize> = sites.iter().map(|&s| dims[s]).collect();
        let expected: usize = local_dims.iter().product();
        if local.dim() != expected {
            return Err(Error::DimensionMismatch {
                site: sites[0],
                expected,
                found: local.dim(),
            });
        }
        let st = strides(dims);
        let local_offsets: Vec<usize> = (0..expected)
            .map(|i| {
                unravel(i, &local_dims)
                    .iter()
                    .zip(&sites)
                    .map(|(d, &s)| d * st[s])
                    .sum()
            })
            .collect();
        let rest: Vec<usize> = (0..n).filter(|s| !sites.contains(s)).collect();
        let rest_dims: Vec<usize> = rest.iter().map(|&s| dims[s]).collect();
        let rest_total: usize = rest_dims.iter().product();
        let rest_offsets: Vec<usize> = (0..rest_total)
            .map(|i| {
                unravel(i, &rest_dims)
                    .iter()
                    .zip(&rest)
                    .map(|(d, &s)| d * st[s])
                    .sum()
            })
            .collect();
        let hermitian = local.is_hermitian();
        Ok(Self {
            dim: dims.iter().product(),
            factor: [KronFactor { sites, local }],
            local_offsets,
            rest_offsets,
            hermitian,
        })
    }

    pub fn sites(&self) -> &[usize] {
        &self.factor[0].sites
    }

    pub fn local(&self) -> &LocalOperator {
        &self.factor[0].local
    }

    fn apply_impl(&self, x: &[C64], y: &mut [C64], adjoint: bool) {
        let l = self.local_offsets.len();
        let r = self.rest_offsets.len();
        let mut block = vec![ZERO; l * r];
        for (li, &lo) in self.local_offsets.iter().enumerate() {
            let row = &mut block[li * r..(li + 1) * r];
            for (slot, &ro) in row.iter_mut().zip(&self.rest_offsets) {
                *slot = x[lo + ro];
            }
        }
        let out = self.factor[0].local.apply_block(&block, r, adjoint);
        for (li, &lo) in self.local_offsets.iter().enumerate() {
            let row = &out[li * r..(li + 1) * r];
            for (v, &ro) in row.iter().zip(&self.rest_offsets) {
                y[lo + ro] = *v;
            }
        }
    }
}

impl LinearOperator for KronLift {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.apply_impl(x, y, false)
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        self.apply_impl(x, y, true)
    }
    fn is_hermitian(&self) -> bool {
        self.hermitian
    }
    fn factors(&self) -> Option<&[KronFactor]> {
        Some(&self.factor)
    }
}

/// Lifts `local` onto consecutive sites starting at `site` (0-based), wrapping past the
/// last site back to site 0, so `site = n - 1` with a two-site factor acts on `(n-1, 0)`.
pub fn kron_lift(local: impl Into<LocalOperator>, site: usize, local_dims: &[usize]) -> Result<KronLift> {
    let local = local.into();
    let n = local_dims.len();
    if site >= n {
        return Err(Error::DimensionMismatch { site, expected: n, found: site });
    }
    // count how many consecutive sites the local dimension spans
    let mut span = 0;
    let mut acc = 1usize;
    while acc < local.dim() && span < n {
        acc *= local_dims[(site + span) % n];
        span += 1;
    }
    if acc != local.dim() {
        return Err(Error::DimensionMismatch {
            site,
            expected: acc,
            found: local.dim(),
        });
    }
    let sites: Vec<usize> = (0..span.max(1)).map(|k| (site + k) % n).collect();
    KronLift::new(local, sites, local_dims)
}

/// Dense matrix wrapped as an operator.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    matrix: ComplexMatrix,
    adjoint: ComplexMatrix,
    hermitian: bool,
}

impl DenseOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Shape(format!("operator from {}x{}", matrix.rows(), matrix.cols())));
        }
        let hermitian = matrix.is_hermitian(1e-12);
        Ok(Self {
            adjoint: matrix.adjoint(),
            matrix,
            hermitian,
        })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.matrix.rows()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        y.copy_from_slice(&self.matrix.matvec(x));
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        y.copy_from_slice(&self.adjoint.matvec(x));
    }
    fn is_hermitian(&self) -> bool {
        self.hermitian
    }
}

/// Global orthogonal projector `Q Q^dag`.
#[derive(Clone, Debug)]
pub struct ProjectorOperator {
    basis: Isometry,
}

impl ProjectorOperator {
    pub fn new(basis: Isometry) -> Self {
        Self { basis }
    }

    pub fn basis(&self) -> &Isometry {
        &self.basis
    }
}

impl LinearOperator for ProjectorOperator {
    fn dim(&self) -> usize {
        self.basis.dim()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        y.copy_from_slice(&self.basis.project(x));
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        self.apply(x, y)
    }
    fn is_hermitian(&self) -> bool {
        true
    }
}

/// `c_0 1 + sum_k c_k A_k` with real coefficients.
#[derive(Clone)]
pub struct LinearCombination {
    dim: usize,
    identity_coeff: f64,
    terms: Vec<(f64, SharedOperator)>,
}

impl LinearCombination {
    pub fn new(dim: usize, identity_coeff: f64) -> Self {
        Self {
            dim,
            identity_coeff,
            terms: Vec::new(),
        }
    }

    pub fn with_term(mut self, coeff: f64, op: SharedOperator) -> Result<Self> {
        if op.dim() != self.dim {
            return Err(Error::Shape(format!("term of dim {} added to sum of dim {}", op.dim(), self.dim)));
        }
        self.terms.push((coeff, op));
        Ok(self)
    }

    pub fn terms(&self) -> &[(f64, SharedOperator)] {
        &self.terms
    }

    fn apply_impl(&self, x: &[C64], y: &mut [C64], adjoint: bool) {
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = xi * self.identity_coeff;
        }
        let mut tmp = vec![ZERO; self.dim];
        for (c, op) in &self.terms {
            if adjoint {
                op.apply_adjoint(x, &mut tmp);
            } else {
                op.apply(x, &mut tmp);
            }
            axpy(C64::new(*c, 0.0), &tmp, y);
        }
    }
}

impl LinearOperator for LinearCombination {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.apply_impl(x, y, false)
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        self.apply_impl(x, y, true)
    }
    fn is_hermitian(&self) -> bool {
        self.terms.iter().all(|(_, op)| op.is_hermitian())
    }
}

/// Product `A_last ... A_1` where `factors[0]` is applied first.
#[derive(Clone)]
pub struct ProductOperator {
    dim: usize,
    factors: Vec<SharedOperator>,
}

impl ProductOperator {
    /// `factors` are listed in application order.
    pub fn new(factors: Vec<SharedOperator>) -> Result<Self> {
        let dim = factors
            .first()
            .map(|f| f.dim())
            .ok_or_else(|| Error::Shape("empty product".into()))?;
        if factors.iter().any(|f| f.dim() != dim) {
            return Err(Error::Shape("product factors of differing dims".into()));
        }
        Ok(Self { dim, factors })
    }

    pub fn factors_in_order(&self) -> &[SharedOperator] {
        &self.factors
    }
}

impl LinearOperator for ProductOperator {
    fn dim(&self) -> usize {
        self.dim
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let mut cur = x.to_vec();
        let mut next = vec![ZERO; self.dim];
        for f in &self.factors {
            f.apply(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        y.copy_from_slice(&cur);
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        let mut cur = x.to_vec();
        let mut next = vec![ZERO; self.dim];
        for f in self.factors.iter().rev() {
            f.apply_adjoint(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        y.copy_from_slice(&cur);
    }
    fn is_hermitian(&self) -> bool {
        // palindromic products of Hermitian factors are Hermitian
        let n = self.factors.len();
        self.factors.iter().all(|f| f.is_hermitian())
            && (0..n / 2).all(|i| Arc::ptr_eq(&self.factors[i], &self.factors[n - 1 - i]))
    }
}

/// `A^dag A`, always Hermitian.
#[derive(Clone)]
pub struct GramOperator {
    inner: SharedOperator,
}

impl GramOperator {
    pub fn new(inner: SharedOperator) -> Self {
        Self { inner }
    }
}

impl LinearOperator for GramOperator {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let mut tmp = vec![ZERO; self.dim()];
        self.inner.apply(x, &mut tmp);
        self.inner.apply_adjoint(&tmp, y);
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        self.apply(x, y)
    }
    fn is_hermitian(&self) -> bool {
        true
    }
}

/// `A^k`
#[derive(Clone)]
pub struct PowerOperator {
    inner: SharedOperator,
    power: usize,
}

impl PowerOperator {
    pub fn new(inner: SharedOperator, power: usize) -> Self {
        Self { inner, power }
    }
}

impl LinearOperator for PowerOperator {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let mut cur = x.to_vec();
        let mut next = vec![ZERO; self.dim()];
        for _ in 0..self.power {
            self.inner.apply(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        y.copy_from_slice(&cur);
    }
    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        let mut cur = x.to_vec();
        let mut next = vec![ZERO; self.dim()];
        for _ in 0..self.power {
            self.inner.apply_adjoint(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        y.copy_from_slice(&cur);
    }
    fn is_hermitian(&self) -> bool {
        self.inner.is_hermitian()
    }
}
