//! Consequences of a spectral gap: powers, design conditions, the detectability sandwich,
//! the auxiliary Hamiltonian `H̃` and the chain of inequalities behind the unconditional
//! gap.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    deflated_operator_norm, fixed_residual, frustration_sum, hamiltonian, method_of, moment_operator, spectral_gap,
    uses_dense, WalkContext, WalkKind, WalkSpec, FIXED_TOL,
};
use crate::error::{Error, Result};
use crate::haar::{haar_span, inverse, site_major_permutation};
use crate::tensor::dense::psd_check;
use crate::tensor::krylov::{hermitian_eigs, EigOptions, SolverMethod, Which};
use crate::tensor::layout::permute_matrix_axes;
use crate::tensor::matrix::{ComplexMatrix, ZERO};
use crate::tensor::operator::{densify, LinearCombination, LinearOperator, PowerOperator, ProductOperator, SharedOperator};
use crate::tensor::vector::{distance, random_unit_vector, Isometry};

const CHECK_TOL: f64 = 1e-9;

/// Largest `D^{2t}` for the dense Choi-matrix design test.
pub const RELATIVE_PSD_CAP: usize = 1 << 13;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionCheck {
    pub walk: WalkSpec,
    pub k: usize,
    pub g: f64,
    pub g_pow_k: f64,
    /// `‖M^k - P‖_∞`
    pub power_norm: f64,
    pub holds: bool,
    /// Set for Hermitian moment operators, where `‖M^k - P‖ = g^k` exactly.
    pub equality: Option<bool>,
}

/// `‖M^k - P‖_∞ <= g^k`, with equality checked for Hermitian walks.
pub fn convolution_gap_check(spec: &WalkSpec, k: usize, ctx: &mut WalkContext, opts: &EigOptions) -> Result<ConvolutionCheck> {
    if k == 0 {
        return Err(Error::InvalidParameter("convolution check needs k >= 1".into()));
    }
    let op = moment_operator(spec, ctx)?;
    let fixed = ctx.fixed_space(spec)?;
    let (g, _) = deflated_operator_norm(&op, &fixed, opts)?;
    let hermitian = op.is_hermitian();
    let power: SharedOperator = Arc::new(PowerOperator::new(op, k));
    let (power_norm, _) = deflated_operator_norm(&power, &fixed, opts)?;
    let g_pow_k = g.powi(k as i32);
    Ok(ConvolutionCheck {
        walk: *spec,
        k,
        g,
        g_pow_k,
        power_norm,
        holds: power_norm <= g_pow_k + CHECK_TOL,
        equality: hermitian.then(|| (power_norm - g_pow_k).abs() <= CHECK_TOL),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignMode {
    AdditiveBound,
    RelativePsd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelativePsd {
    /// `λ_min(J((1+ε)Φ_ν^k) - J(Φ_H))`
    pub upper_min_eigenvalue: f64,
    /// `λ_min(J(Φ_H) - J((1-ε)Φ_ν^k))`
    pub lower_min_eigenvalue: f64,
    pub upper_ok: bool,
    pub lower_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub walk: WalkSpec,
    pub k: usize,
    pub epsilon: f64,
    pub requested: DesignMode,
    pub used: DesignMode,
    pub g: f64,
    /// `D^t g^k`, an upper bound on the diamond distance of the `k`-step channel.
    pub diamond_bound: f64,
    pub diamond_within_epsilon: bool,
    /// `g^k <= ε / D^{2t}`, sufficient for both design notions.
    pub gap_condition: bool,
    pub relative: Option<RelativePsd>,
    pub passes: bool,
    pub warning: Option<String>,
}

/// Smallest `k >= 1` with `g^k <= ε / D^{2t}`; `None` when `g >= 1`.
pub fn design_steps(g: f64, epsilon: f64, n: usize, t: usize) -> Option<usize> {
    let target = epsilon / 2f64.powi((2 * n * t) as i32);
    if g <= target {
        return Some(1);
    }
    if g >= 1.0 || target >= 1.0 {
        return if target >= 1.0 { Some(1) } else { None };
    }
    let mut k = (target.ln() / g.ln()).floor().max(1.0) as usize;
    while g.powi(k as i32) > target {
        k += 1;
    }
    while k > 1 && g.powi(k as i32 - 1) <= target {
        k -= 1;
    }
    Some(k)
}

/// Realignment `J[(a,c),(b,d)] = M[(a,b),(c,d)]` of a copy-major moment matrix: the Choi
/// matrix `E |vec U^{⊗t}⟩⟨vec U^{⊗t}|` of the channel.
pub fn choi_from_moment(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let dim = m.rows();
    let side = (dim as f64).sqrt().round() as usize;
    if side * side != dim || !m.is_square() {
        return Err(Error::Shape(format!("moment matrix of size {dim} is not a square of a square")));
    }
    Ok(ComplexMatrix::from_fn(dim, dim, |r, c| {
        let (a, cc) = (r / side, r % side);
        let (b, d) = (c / side, c % side);
        m[(a * side + b, cc * side + d)]
    }))
}

/// Design test of `k` steps. Relative mode needs `D^{2t} <= 2^13` and falls back to the
/// additive bound above that.
pub fn design_check(
    spec: &WalkSpec,
    k: usize,
    epsilon: f64,
    mode: DesignMode,
    ctx: &mut WalkContext,
    opts: &EigOptions,
) -> Result<DesignReport> {
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::InvalidParameter(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    let (n, t) = (spec.n, spec.t);
    let d2t = 2f64.powi((2 * n * t) as i32);
    let dt = 2f64.powi((n * t) as i32);
    let g = spectral_gap(spec, ctx, opts)?.g_value;
    let gk = if k == 0 { 1.0 } else { g.powi(k as i32) };
    let diamond_bound = dt * gk;
    let gap_condition = gk <= epsilon / d2t;
    let mut used = mode;
    let mut warning = None;
    if mode == DesignMode::RelativePsd && spec.dim() > RELATIVE_PSD_CAP {
        used = DesignMode::AdditiveBound;
        warning = Some(format!(
            "relative check needs D^(2t) = {} <= {RELATIVE_PSD_CAP}; used the additive bound",
            spec.dim()
        ));
    }
    let relative = if used == DesignMode::RelativePsd {
        let op = moment_operator(spec, ctx)?;
        let m = densify(op.as_ref());
        let mk = if k == 0 { ComplexMatrix::identity(m.rows()) } else { m.powi(k) };
        let axes = vec![2; 2 * n * t];
        let to_copy = inverse(&site_major_permutation(n, t));
        let choi_nu = choi_from_moment(&permute_matrix_axes(&mk, &axes, &to_copy)?)?;
        let choi_h = choi_from_moment(&haar_span(1 << n, t)?.projector_matrix())?;
        let tol = CHECK_TOL * choi_nu.max_abs().max(1.0);
        let sym = |a: ComplexMatrix| (&a + &a.adjoint()).scaled_real(0.5);
        let upper = psd_check(&sym(&choi_nu.scaled_real(1.0 + epsilon) - &choi_h), tol)?;
        let lower = psd_check(&sym(&choi_h - &choi_nu.scaled_real(1.0 - epsilon)), tol)?;
        Some(RelativePsd {
            upper_min_eigenvalue: upper.min_eigenvalue,
            lower_min_eigenvalue: lower.min_eigenvalue,
            upper_ok: upper.psd,
            lower_ok: lower.psd,
        })
    } else {
        None
    };
    let passes = match &relative {
        Some(r) => r.upper_ok && r.lower_ok,
        None => gap_condition,
    };
    Ok(DesignReport {
        walk: *spec,
        k,
        epsilon,
        requested: mode,
        used,
        g,
        diamond_bound,
        diamond_within_epsilon: diamond_bound <= epsilon,
        gap_condition,
        relative,
        passes,
        warning,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectabilityReport {
    pub projectors: usize,
    /// `Δ(H)` for `H = Σ_i Q_i`.
    pub delta: f64,
    /// Number of other projectors each one fails to commute with.
    pub noncommuting: Vec<usize>,
    /// `max` of `noncommuting`, the degree entering the upper bound.
    pub degree: usize,
    /// `‖Π_i (1 - Q_i) (1 - P_ground)‖_∞`
    pub product_norm: f64,
    /// `sqrt(1 - 4Δ)`, only when `4Δ <= 1`.
    pub lower_bound: Option<f64>,
    /// `sqrt(1 / (Δ/g² + 1))`
    pub upper_bound: f64,
    pub holds: bool,
    pub ground_rank: usize,
    pub method: SolverMethod,
}

fn commutator_norm(a: &dyn LinearOperator, b: &dyn LinearOperator, probes: &[Vec<crate::tensor::C64>]) -> f64 {
    let dim = a.dim();
    let (mut t1, mut t2, mut ab, mut ba) = (vec![ZERO; dim], vec![ZERO; dim], vec![ZERO; dim], vec![ZERO; dim]);
    probes
        .iter()
        .map(|v| {
            b.apply(v, &mut t1);
            a.apply(&t1, &mut ab);
            a.apply(v, &mut t2);
            b.apply(&t2, &mut ba);
            distance(&ab, &ba)
        })
        .fold(0.0, f64::max)
}

/// The sandwich `sqrt(1-4Δ) <= ‖Π(1-Q_i)|ψ⊥⟩‖ <= sqrt(1/(Δ/g²+1))` for the family whose
/// complements `1 - Q_i` are `kept[i]`, applied in list order. `ground` must be fixed by
/// every `kept[i]`.
pub fn detectability_check(kept: &[SharedOperator], ground: &Isometry, opts: &EigOptions) -> Result<DetectabilityReport> {
    let dim = ground.dim();
    if kept.is_empty() || kept.iter().any(|p| p.dim() != dim) {
        return Err(Error::Shape("projector family empty or of mismatched dimension".into()));
    }
    for (i, p) in kept.iter().enumerate() {
        let r = fixed_residual(p.as_ref(), ground);
        if r > FIXED_TOL {
            return Err(Error::Domain(format!("projector {i} moves the ground space (residual {r:.2e})")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let probes: Vec<_> = (0..2).map(|_| random_unit_vector(dim, &mut rng)).collect();
    let m = kept.len();
    let mut noncommuting = vec![0usize; m];
    for i in 0..m {
        for j in i + 1..m {
            if Arc::ptr_eq(&kept[i], &kept[j]) {
                continue;
            }
            if commutator_norm(kept[i].as_ref(), kept[j].as_ref(), &probes) > 1e-10 {
                noncommuting[i] += 1;
                noncommuting[j] += 1;
            }
        }
    }
    let degree = noncommuting.iter().copied().max().unwrap_or(0);
    let h = frustration_sum(dim, kept)?;
    let o = EigOptions { which: Which::Smallest(1), deflate: Some(ground.clone()), ..opts.clone() };
    let delta = hermitian_eigs(&h, &o)?.values[0];
    let product: SharedOperator = Arc::new(ProductOperator::new(kept.to_vec())?);
    let (product_norm, _) = deflated_operator_norm(&product, ground, opts)?;
    let lower_bound = (4.0 * delta <= 1.0).then(|| (1.0 - 4.0 * delta).max(0.0).sqrt());
    let upper_bound = if degree == 0 { 0.0 } else { (1.0 / (delta / (degree * degree) as f64 + 1.0)).sqrt() };
    let holds = lower_bound.is_none_or(|lb| lb <= product_norm + CHECK_TOL) && product_norm <= upper_bound + CHECK_TOL;
    Ok(DetectabilityReport {
        projectors: m,
        delta,
        noncommuting,
        degree,
        product_norm,
        lower_bound,
        upper_bound,
        holds,
        ground_rank: ground.rank(),
        method: method_of(dim, opts),
    })
}

/// Ring sites in the order used for layered families: even sites, then odd sites. For
/// even `n` this is brickwork layer 1 followed by layer 2.
pub fn layered_sites(n: usize) -> Vec<usize> {
    (0..n).step_by(2).chain((1..n).step_by(2)).collect()
}

/// The `H_{n,t}` projector family `lift(P_H,2, i)` in layered order.
pub fn hamiltonian_family(ctx: &WalkContext) -> Result<Vec<SharedOperator>> {
    layered_sites(ctx.n()).into_iter().map(|i| ctx.pair_lift(ctx.haar_pair(), i)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HTildeOrder {
    /// `k` Clifford steps, the single-qubit Haar projector, `k` more Clifford steps.
    CircuitOrder,
    /// The single-qubit Haar projector first, then all `2k` Clifford steps.
    HaarFirst,
}

/// `H̃ = Σ_i Q_i` over `2nk + 1` projectors: `2k` copies of each `1 - lift(P_Cl,2, i)` and
/// one `1 - lift(P_H,1, 0)`. `kept[i] = 1 - Q_i`.
pub struct HTilde {
    pub n: usize,
    pub t: usize,
    pub k: usize,
    pub order: HTildeOrder,
    pub kept: Vec<SharedOperator>,
    pub labels: Vec<String>,
}

impl HTilde {
    pub fn operator(&self) -> Result<LinearCombination> {
        frustration_sum(self.kept[0].dim(), &self.kept)
    }

    /// `Π_i (1 - Q_i)` in family order.
    pub fn product(&self) -> Result<SharedOperator> {
        Ok(Arc::new(ProductOperator::new(self.kept.clone())?))
    }
}

pub fn htilde(ctx: &mut WalkContext, k: usize, order: HTildeOrder) -> Result<HTilde> {
    let n = ctx.n();
    let pair = ctx.clifford_pair()?.clone();
    let step: Vec<(SharedOperator, String)> = layered_sites(n)
        .into_iter()
        .map(|i| Ok((ctx.pair_lift(&pair, i)?, format!("cl2({i},{})", (i + 1) % n))))
        .collect::<Result<_>>()?;
    let haar = (ctx.single_lift(0)?, "haar1(0)".to_string());
    let mut entries = Vec::with_capacity(2 * n * k + 1);
    let steps = |count: usize, out: &mut Vec<(SharedOperator, String)>| {
        for _ in 0..count {
            out.extend(step.iter().cloned());
        }
    };
    match order {
        HTildeOrder::CircuitOrder => {
            steps(k, &mut entries);
            entries.push(haar);
            steps(k, &mut entries);
        }
        HTildeOrder::HaarFirst => {
            entries.push(haar);
            steps(2 * k, &mut entries);
        }
    }
    let (kept, labels) = entries.into_iter().unzip();
    Ok(HTilde { n, t: ctx.t(), k, order, kept, labels })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HTildeReport {
    pub n: usize,
    pub t: usize,
    pub k: usize,
    pub order: HTildeOrder,
    pub projectors: usize,
    pub ground_energy: f64,
    pub ground_dim: usize,
    pub haar_rank: usize,
    pub delta_htilde: f64,
    pub delta_h: f64,
    /// `λ_min((2k+1) H_{n,t} - H̃)`
    pub dominance_min_eigenvalue: f64,
    pub dominance_holds: bool,
    pub ground_spaces_equal: bool,
    /// `Δ(H) >= Δ(H̃)/(2k+1)`, implied by dominance and equal ground spaces.
    pub implied_gap_holds: bool,
    /// `Δ(H̃) >= Δ(H)/(2k+1)`, the reverse ratio; reported, not implied.
    pub reverse_ratio_holds: bool,
}

fn kernel_dimension(op: &dyn LinearOperator, haar: &Isometry, gap: f64, opts: &EigOptions) -> Result<(f64, usize)> {
    let one_minus = PlainShift { inner: op };
    let residual = fixed_residual(&one_minus, haar);
    if uses_dense(op.dim(), opts) {
        let full = hermitian_eigs(op, &EigOptions { which: Which::Full, deflate: None, ..opts.clone() })?;
        let count = full.values.iter().filter(|v| v.abs() <= 1e-9).count();
        return Ok((full.values[0], count));
    }
    let lowest = hermitian_eigs(op, &EigOptions { which: Which::Smallest(1), deflate: None, ..opts.clone() })?;
    let dim = if residual <= 1e-9 && gap > 1e-8 { haar.rank() } else { 0 };
    Ok((lowest.values[0], dim))
}

/// `1 - A`, borrowed.
struct PlainShift<'a> {
    inner: &'a dyn LinearOperator,
}

impl LinearOperator for PlainShift<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn apply(&self, x: &[crate::tensor::C64], y: &mut [crate::tensor::C64]) {
        self.inner.apply(x, y);
        for (a, b) in y.iter_mut().zip(x) {
            *a = b - *a;
        }
    }
    fn apply_adjoint(&self, x: &[crate::tensor::C64], y: &mut [crate::tensor::C64]) {
        self.inner.apply_adjoint(x, y);
        for (a, b) in y.iter_mut().zip(x) {
            *a = b - *a;
        }
    }
    fn is_hermitian(&self) -> bool {
        self.inner.is_hermitian()
    }
}

/// Spectral comparison of `H̃` with `H_{n,t}`.
pub fn htilde_report(ctx: &mut WalkContext, k: usize, order: HTildeOrder, opts: &EigOptions) -> Result<HTildeReport> {
    let ht = htilde(ctx, k, order)?;
    let op = ht.operator()?;
    let haar = ctx.haar_fixed().clone();
    let gap_opts = EigOptions { which: Which::Smallest(1), deflate: Some(haar.clone()), ..opts.clone() };
    let delta_htilde = hermitian_eigs(&op, &gap_opts)?.values[0];
    let (ground_energy, ground_dim) = kernel_dimension(&op, &haar, delta_htilde, opts)?;
    let h = hamiltonian(ctx)?;
    let delta_h = hermitian_eigs(&h, &gap_opts)?.values[0];
    let c = (2 * k + 1) as f64;
    // (2k+1) H - H̃ = ((2k+1) n - m) 1 - (2k+1) Σ lift(P_H,2) + Σ kept
    let n = ctx.n();
    let mut dom = LinearCombination::new(ctx.dim(), c * n as f64 - ht.kept.len() as f64);
    for i in 0..n {
        dom = dom.with_term(-c, ctx.pair_lift(ctx.haar_pair(), i)?)?;
    }
    for p in &ht.kept {
        dom = dom.with_term(1.0, p.clone())?;
    }
    let dominance_min_eigenvalue =
        hermitian_eigs(&dom, &EigOptions { which: Which::Smallest(1), deflate: None, ..opts.clone() })?.values[0];
    let dominance_holds = dominance_min_eigenvalue >= -1e-8;
    let ground_spaces_equal = ground_dim == haar.rank() && ground_energy.abs() <= 1e-9;
    Ok(HTildeReport {
        n,
        t: ctx.t(),
        k,
        order,
        projectors: ht.kept.len(),
        ground_energy,
        ground_dim,
        haar_rank: haar.rank(),
        delta_htilde,
        delta_h,
        dominance_min_eigenvalue,
        dominance_holds,
        ground_spaces_equal,
        implied_gap_holds: delta_h >= delta_htilde / c - CHECK_TOL,
        reverse_ratio_holds: delta_htilde >= delta_h / c - CHECK_TOL,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainLink {
    pub name: String,
    /// The inequality `lhs <= rhs`.
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl ChainLink {
    fn le(name: &str, lhs: f64, rhs: f64) -> Self {
        Self { name: name.into(), lhs, rhs, holds: lhs <= rhs + CHECK_TOL }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub n: usize,
    pub t: usize,
    pub k: usize,
    pub links: Vec<ChainLink>,
    pub all_hold: bool,
    /// First failing link, if any.
    pub failing: Option<String>,
}

/// Evaluates every inequality from the Clifford-walk approximation to the final bound on
/// `Δ(H_{n,t})`, with `k` Clifford steps in place of `6000 n^4`. The Clifford walk is the
/// layered product of `P_Cl,2` lifts (brickwork for even `n`).
pub fn unconditional_chain_check(ctx: &mut WalkContext, k: usize, opts: &EigOptions) -> Result<ChainReport> {
    let (n, t) = (ctx.n(), ctx.t());
    let dn = 4f64.powi(n as i32) - 1.0;
    let pair = ctx.clifford_pair()?.clone();
    let step: Vec<SharedOperator> =
        layered_sites(n).into_iter().map(|i| ctx.pair_lift(&pair, i)).collect::<Result<_>>()?;
    let walk: SharedOperator = Arc::new(ProductOperator::new(step)?);
    let pcl = ctx.clifford_global()?.basis.clone();
    let mut links = Vec::new();

    // (a) Clifford walk against P_Cl
    let (one_step, _) = deflated_operator_norm(&walk, &pcl, opts)?;
    let powered: SharedOperator = Arc::new(PowerOperator::new(walk.clone(), k));
    let (a_k, _) = deflated_operator_norm(&powered, &pcl, opts)?;
    links.push(ChainLink::le("clifford-power", a_k, one_step.powi(k as i32)));
    links.push(ChainLink::le("clifford-step-bound", one_step, 1.0 - 1.0 / (2000.0 * (n as f64).powi(3))));

    // (b) triangle inequality around the exact auxiliary walk
    let sigma = WalkSpec::new(WalkKind::Sigma, n, t)?;
    let g_sigma = spectral_gap(&sigma, ctx, opts)?.g_value;
    let ht = htilde(ctx, k, HTildeOrder::CircuitOrder)?;
    let haar = ctx.haar_fixed().clone();
    let (tilde_norm, _) = deflated_operator_norm(&ht.product()?, &haar, opts)?;
    links.push(ChainLink::le("auxiliary-triangle", tilde_norm, g_sigma + 2.0 * a_k));
    links.push(ChainLink::le("auxiliary-walk", g_sigma, 1.0 - 1.5 / dn));
    links.push(ChainLink::le("auxiliary-sum", g_sigma + 2.0 * a_k, 1.0 - 0.5 / dn));

    // (c) union bound
    let report = htilde_report(ctx, k, HTildeOrder::CircuitOrder, opts)?;
    let d_tilde = report.delta_htilde;
    let union_lhs = if 4.0 * d_tilde <= 1.0 { (1.0 - 4.0 * d_tilde).sqrt() } else { 0.0 };
    links.push(ChainLink::le("union-bound", union_lhs, tilde_norm));
    links.push(ChainLink::le("htilde-gap", 1.0 / (8.0 * dn), d_tilde));

    // (d) back to H_{n,t}
    links.push(ChainLink::le("dominance", -report.dominance_min_eigenvalue, 1e-8));
    links.push(ChainLink {
        name: "ground-spaces".into(),
        lhs: report.ground_dim as f64,
        rhs: report.haar_rank as f64,
        holds: report.ground_spaces_equal,
    });
    let c = (2 * k + 1) as f64;
    links.push(ChainLink::le("hamiltonian-gap", 1.0 / (8.0 * c * dn), report.delta_h));

    let failing = links.iter().find(|l| !l.holds).map(|l| l.name.clone());
    Ok(ChainReport { n, t, k, all_hold: failing.is_none(), failing, links })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConversionCheck {
    pub n: usize,
    pub t: usize,
    pub g_brickwork: f64,
    pub delta_h: f64,
    /// `sqrt(1 / (Δ(H)/4 + 1))`
    pub bound: f64,
    pub holds: bool,
    /// Observed non-commuting degree of the brickwork family (the bound assumes 2).
    pub observed_degree: usize,
    pub detectability: DetectabilityReport,
}

/// Brickwork gap against its detectability bound from `Δ(H_{n,t})`.
pub fn brickwork_conversion_check(ctx: &mut WalkContext, opts: &EigOptions) -> Result<ConversionCheck> {
    let (n, t) = (ctx.n(), ctx.t());
    let spec = WalkSpec::new(WalkKind::Brickwork, n, t)?;
    let gap = spectral_gap(&spec, ctx, opts)?;
    let family = ctx.brickwork_lifts(&ctx.haar_pair().clone())?;
    let det = detectability_check(&family, ctx.haar_fixed(), opts)?;
    let bound = (1.0 / (gap.delta_value / 4.0 + 1.0)).sqrt();
    Ok(ConversionCheck {
        n,
        t,
        g_brickwork: gap.g_value,
        delta_h: gap.delta_value,
        bound,
        holds: gap.g_value <= bound + CHECK_TOL,
        observed_degree: det.degree,
        detectability: det,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::krylov::SolverChoice;
    use crate::tensor::operator::ProjectorOperator;

    fn dense() -> EigOptions {
        EigOptions::default().with_solver(SolverChoice::Dense)
    }

    #[test]
    fn steps_from_the_gap_condition() {
        assert_eq!(design_steps(0.0, 0.1, 2, 2), Some(1));
        assert_eq!(design_steps(1.0, 0.1, 2, 2), None);
        let k = design_steps(0.5, 0.1, 2, 1).unwrap();
        assert!(0.5f64.powi(k as i32) <= 0.1 / 16.0 && 0.5f64.powi(k as i32 - 1) > 0.1 / 16.0);
    }

    #[test]
    fn choi_of_identity_channel_is_rank_one() {
        // M = 1 on D^2 = 4: the identity channel has Choi |vec 1><vec 1|
        let m = ComplexMatrix::identity(4);
        let j = choi_from_moment(&m).unwrap();
        let v = [1.0, 0.0, 0.0, 1.0];
        for r in 0..4 {
            for c in 0..4 {
                assert!((j[(r, c)].re - v[r] * v[c]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn k_equal_one_convolution_is_trivial() {
        let spec = WalkSpec::new(WalkKind::Local, 3, 1).unwrap();
        let mut ctx = WalkContext::for_spec(&spec, 0).unwrap();
        let c = convolution_gap_check(&spec, 1, &mut ctx, &dense()).unwrap();
        assert!(c.holds && c.equality == Some(true));
    }

    #[test]
    fn commuting_family_has_zero_product_norm() {
        let dim = 8;
        let cols: Vec<_> = (0..dim).map(|i| crate::tensor::vector::basis_vector(dim, i)).collect();
        let ground = Isometry::from_orthonormal(dim, cols[..2].to_vec());
        let a = Isometry::from_orthonormal(dim, cols[..4].to_vec());
        let b = Isometry::from_orthonormal(dim, vec![cols[0].clone(), cols[1].clone(), cols[4].clone()]);
        let kept: Vec<SharedOperator> = vec![Arc::new(ProjectorOperator::new(a)), Arc::new(ProjectorOperator::new(b))];
        let r = detectability_check(&kept, &ground, &dense()).unwrap();
        assert_eq!(r.degree, 0);
        assert!(r.product_norm < 1e-12);
        assert!(r.delta >= 1.0 - 1e-12 && r.holds);
    }

    #[test]
    fn ground_mismatch_is_reported() {
        let dim = 4;
        let e = |i| crate::tensor::vector::basis_vector(dim, i);
        let ground = Isometry::from_orthonormal(dim, vec![e(3)]);
        let kept: Vec<SharedOperator> = vec![Arc::new(ProjectorOperator::new(Isometry::from_orthonormal(dim, vec![e(0)])))];
        assert!(matches!(detectability_check(&kept, &ground, &dense()), Err(Error::Domain(_))));
    }

    #[test]
    fn htilde_counts_and_orders() {
        let mut ctx = WalkContext::new(2, 1, 0).unwrap();
        let a = htilde(&mut ctx, 2, HTildeOrder::CircuitOrder).unwrap();
        assert_eq!(a.kept.len(), 2 * 2 * 2 + 1);
        assert_eq!(a.labels[4], "haar1(0)");
        let b = htilde(&mut ctx, 2, HTildeOrder::HaarFirst).unwrap();
        assert_eq!(b.labels[0], "haar1(0)");
        assert_eq!(layered_sites(5), vec![0, 2, 4, 1, 3]);
    }

    #[test]
    fn trivial_chain_at_t1() {
        let mut ctx = WalkContext::new(2, 1, 0).unwrap();
        let r = unconditional_chain_check(&mut ctx, 1, &dense()).unwrap();
        assert!(r.all_hold, "{r:#?}");
    }
}
