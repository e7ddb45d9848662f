//! Moment operators of circuit ensembles, the nearest-neighbour Hamiltonians `H_{n,t}` and
//! spectral-gap computations.
//!
//! Moment vectors are site-major with local dimension `4^t` per qubit, matching
//! [`crate::haar::qubit_haar_span`]. Qubits sit on a ring; the pair at site `n - 1` is
//! `(n - 1, 0)`.

pub mod checks;
pub mod circuits;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::unconditional_g_bound;
use crate::clifford::moments::{clifford_projector, CliffordProjector, ProjectorMethod};
use crate::clifford::tableau::{brickwork_pairs, MAX_ENUMERATION_QUBITS};
use crate::error::{Error, Result};
use crate::haar::{qubit_haar_span, MAX_T};
use crate::tensor::krylov::{deflated_norm, hermitian_eigs, EigOptions, SolverChoice, SolverMethod, Which};
use crate::tensor::operator::{
    kron_lift, GramOperator, LinearCombination, LinearOperator, PowerOperator, ProductOperator, ProjectorOperator,
    SharedOperator,
};
use crate::tensor::dense::singular_values;
use crate::tensor::vector::{distance, Isometry};
use crate::tensor::{densify, ZERO};

pub use checks::{
    brickwork_conversion_check, convolution_gap_check, design_check, detectability_check, htilde, design_steps,
    unconditional_chain_check, ChainLink, ChainReport, ConvolutionCheck, DesignMode, DesignReport, DetectabilityReport,
    HTilde, HTildeOrder, HTildeReport, ConversionCheck,
};
pub use circuits::{
    embed_two_qubit, frame_potential_haar_mc, frame_potential_mc, sample_circuit, FramePotentialEstimate,
};

/// Largest moment-vector dimension `4^{nt}` a walk may be built on.
pub const MAX_WALK_DIM: usize = 1 << 20;

/// Eigenvalues within this distance of 1 count as fixed.
pub const FIXED_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WalkKind {
    /// A Haar-random two-qubit gate on a uniformly random neighbouring pair.
    Local,
    /// Two layers of Haar-random two-qubit gates, pairs `(0,1),(2,3),..` then `(1,2),..,(n-1,0)`.
    Brickwork,
    /// The brickwork pattern with uniformly random two-qubit Cliffords.
    CliffordBrickwork,
    /// A global Clifford, a Haar-random gate on qubit 0, another global Clifford.
    Sigma,
}

impl WalkKind {
    pub const ALL: [WalkKind; 4] = [WalkKind::Local, WalkKind::Brickwork, WalkKind::CliffordBrickwork, WalkKind::Sigma];

    pub fn as_str(&self) -> &'static str {
        match self {
            WalkKind::Local => "local",
            WalkKind::Brickwork => "brickwork",
            WalkKind::CliffordBrickwork => "clifford-brickwork",
            WalkKind::Sigma => "sigma",
        }
    }

    pub fn needs_even_n(&self) -> bool {
        matches!(self, WalkKind::Brickwork | WalkKind::CliffordBrickwork)
    }
}

impl fmt::Display for WalkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WalkKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        WalkKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown walk kind {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WalkSpec {
    pub kind: WalkKind,
    pub n: usize,
    pub t: usize,
    /// For `sigma`: replace each global Clifford projector by `k` steps of the Clifford
    /// brickwork walk.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_k: Option<usize>,
}

impl WalkSpec {
    pub fn new(kind: WalkKind, n: usize, t: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("walks need n >= 2 qubits, got {n}")));
        }
        if kind.needs_even_n() && n % 2 == 1 {
            return Err(Error::InvalidParameter(format!("{kind} needs an even qubit count, got {n}")));
        }
        if t == 0 || t > MAX_T {
            return Err(Error::InvalidParameter(format!("moment order {t} outside 1..={MAX_T}")));
        }
        let spec = Self { kind, n, t, inner_k: None };
        match spec.dim_checked() {
            Some(d) if d <= MAX_WALK_DIM => {}
            Some(d) => return Err(Error::CapExceeded { dim: d, cap: MAX_WALK_DIM }),
            None => {
                return Err(Error::InvalidParameter(format!(
                    "moment space 4^{} overflows; walks are limited to dimension {MAX_WALK_DIM}",
                    n * t
                )))
            }
        }
        Ok(spec)
    }

    pub fn with_inner_k(mut self, k: usize) -> Result<Self> {
        if self.kind != WalkKind::Sigma {
            return Err(Error::InvalidParameter("inner_k only applies to the sigma walk".into()));
        }
        if self.n % 2 == 1 {
            return Err(Error::InvalidParameter("inner_k uses Clifford brickwork layers and needs even n".into()));
        }
        self.inner_k = Some(k);
        Ok(self)
    }

    fn dim_checked(&self) -> Option<usize> {
        1usize.checked_shl((2 * self.n * self.t) as u32).filter(|_| 2 * self.n * self.t < usize::BITS as usize)
    }

    /// `4^{nt}`
    pub fn dim(&self) -> usize {
        1usize << (2 * self.n * self.t)
    }

    pub fn local_dims(&self) -> Vec<usize> {
        vec![1usize << (2 * self.t); self.n]
    }
}

impl fmt::Display for WalkSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(n={}, t={}", self.kind, self.n, self.t)?;
        if let Some(k) = self.inner_k {
            write!(f, ", k={k}")?;
        }
        f.write_str(")")
    }
}

/// Projectors shared by every walk on `n` qubits at order `t`. The Clifford ones are
/// built on first use.
pub struct WalkContext {
    n: usize,
    t: usize,
    seed: u64,
    dims: Vec<usize>,
    haar_pair: Isometry,
    haar_single: Isometry,
    haar_global: Isometry,
    clifford_pair: Option<Isometry>,
    clifford_global: Option<(CliffordProjector, SharedOperator)>,
}

impl WalkContext {
    pub fn new(n: usize, t: usize, seed: u64) -> Result<Self> {
        WalkSpec::new(WalkKind::Local, n, t)?;
        Ok(Self {
            n,
            t,
            seed,
            dims: vec![1usize << (2 * t); n],
            haar_pair: qubit_haar_span(2, t)?,
            haar_single: qubit_haar_span(1, t)?,
            haar_global: qubit_haar_span(n, t)?,
            clifford_pair: None,
            clifford_global: None,
        })
    }

    pub fn for_spec(spec: &WalkSpec, seed: u64) -> Result<Self> {
        Self::new(spec.n, spec.t, seed)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn local_dims(&self) -> &[usize] {
        &self.dims
    }

    /// Range of `P_H` on all `n` qubits.
    pub fn haar_fixed(&self) -> &Isometry {
        &self.haar_global
    }

    pub fn haar_pair(&self) -> &Isometry {
        &self.haar_pair
    }

    pub fn haar_single(&self) -> &Isometry {
        &self.haar_single
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }

    /// Range of `P_Cl,2`.
    pub fn clifford_pair(&mut self) -> Result<&Isometry> {
        if self.clifford_pair.is_none() && self.n == 2 {
            // on two qubits the pair projector is the global one
            self.ensure_clifford_global()?;
            let basis = self.clifford_global.as_ref().expect("just built").0.basis.clone();
            self.clifford_pair = Some(basis);
        }
        if self.clifford_pair.is_none() {
            let mut rng = self.rng(2);
            let p = clifford_projector(2, self.t, ProjectorMethod::Enumerate, &mut rng)?;
            self.clifford_pair = Some(p.basis);
        }
        Ok(self.clifford_pair.as_ref().expect("just built"))
    }

    /// `P_Cl,n`, enumerated for `n <= 2` and found as a fixed space otherwise.
    pub fn clifford_global(&mut self) -> Result<&CliffordProjector> {
        self.ensure_clifford_global()?;
        Ok(&self.clifford_global.as_ref().expect("just built").0)
    }

    fn clifford_global_op(&mut self) -> Result<SharedOperator> {
        self.ensure_clifford_global()?;
        Ok(self.clifford_global.as_ref().expect("just built").1.clone())
    }

    fn ensure_clifford_global(&mut self) -> Result<()> {
        if self.clifford_global.is_none() {
            let mut rng = self.rng(self.n as u64);
            let method = if self.n <= MAX_ENUMERATION_QUBITS {
                ProjectorMethod::Enumerate
            } else {
                ProjectorMethod::FixedSpace
            };
            let p = clifford_projector(self.n, self.t, method, &mut rng)?;
            let op = p.shared();
            self.clifford_global = Some((p, op));
        }
        Ok(())
    }

    /// `basis` (a two-site projector) lifted onto the pair starting at `site`.
    pub fn pair_lift(&self, basis: &Isometry, site: usize) -> Result<SharedOperator> {
        Ok(Arc::new(kron_lift(basis.clone(), site, &self.dims)?))
    }

    /// The single-qubit Haar projector on qubit `site`.
    pub fn single_lift(&self, site: usize) -> Result<SharedOperator> {
        Ok(Arc::new(kron_lift(self.haar_single.clone(), site, &self.dims)?))
    }

    fn check(&self, spec: &WalkSpec) -> Result<()> {
        if spec.n != self.n || spec.t != self.t {
            return Err(Error::InvalidParameter(format!(
                "context built for n={}, t={} used with {spec}",
                self.n, self.t
            )));
        }
        Ok(())
    }

    /// Projector lifts of one brickwork step in application order: layer 1, then layer 2.
    pub fn brickwork_lifts(&self, pair_basis: &Isometry) -> Result<Vec<SharedOperator>> {
        let mut out = Vec::new();
        for offset in 0..2 {
            for [a, _] in brickwork_pairs(self.n, offset) {
                out.push(self.pair_lift(pair_basis, a)?);
            }
        }
        Ok(out)
    }

    /// `M(ν^{Cl,bw}, t)` as a product of pair projectors.
    pub fn clifford_brickwork_operator(&mut self) -> Result<SharedOperator> {
        let pair = self.clifford_pair()?.clone();
        Ok(Arc::new(ProductOperator::new(self.brickwork_lifts(&pair)?)?))
    }

    /// Fixed space a walk converges to: `P_Cl` for Clifford brickwork, `P_H` otherwise.
    pub fn fixed_space(&mut self, spec: &WalkSpec) -> Result<Isometry> {
        self.check(spec)?;
        Ok(match spec.kind {
            WalkKind::CliffordBrickwork => self.clifford_global()?.basis.clone(),
            _ => self.haar_global.clone(),
        })
    }
}

/// `M(ν, t)` for the walk, matrix-free.
pub fn moment_operator(spec: &WalkSpec, ctx: &mut WalkContext) -> Result<SharedOperator> {
    ctx.check(spec)?;
    let n = spec.n;
    Ok(match spec.kind {
        WalkKind::Local => {
            let mut op = LinearCombination::new(ctx.dim(), 0.0);
            for i in 0..n {
                op = op.with_term(1.0 / n as f64, ctx.pair_lift(&ctx.haar_pair, i)?)?;
            }
            Arc::new(op)
        }
        WalkKind::Brickwork => {
            let lifts = ctx.brickwork_lifts(&ctx.haar_pair)?;
            Arc::new(ProductOperator::new(lifts)?)
        }
        WalkKind::CliffordBrickwork => ctx.clifford_brickwork_operator()?,
        WalkKind::Sigma => {
            let inner: SharedOperator = match spec.inner_k {
                None => ctx.clifford_global_op()?,
                Some(k) => Arc::new(PowerOperator::new(ctx.clifford_brickwork_operator()?, k)),
            };
            let single = ctx.single_lift(0)?;
            Arc::new(ProductOperator::new(vec![inner.clone(), single, inner])?)
        }
    })
}

/// `H_{n,t} = Σ_i (1 - lift(P_H,2, (i, i+1)))` on the ring.
pub fn hamiltonian(ctx: &WalkContext) -> Result<LinearCombination> {
    let mut h = LinearCombination::new(ctx.dim(), ctx.n as f64);
    for i in 0..ctx.n {
        h = h.with_term(-1.0, ctx.pair_lift(&ctx.haar_pair, i)?)?;
    }
    Ok(h)
}

/// `Σ_i (1 - Q_i)`-style sum `c·1 - Σ_i P_i` for a projector family.
pub fn frustration_sum(dim: usize, projectors: &[SharedOperator]) -> Result<LinearCombination> {
    let mut h = LinearCombination::new(dim, projectors.len() as f64);
    for p in projectors {
        h = h.with_term(-1.0, p.clone())?;
    }
    Ok(h)
}

fn uses_dense(dim: usize, opts: &EigOptions) -> bool {
    match opts.solver {
        SolverChoice::Dense => true,
        SolverChoice::Krylov => false,
        SolverChoice::Auto => dim <= opts.dense_cap,
    }
}

fn method_of(dim: usize, opts: &EigOptions) -> SolverMethod {
    if uses_dense(dim, opts) {
        SolverMethod::Dense
    } else {
        SolverMethod::Krylov
    }
}

/// `max_q max(‖A q - q‖, ‖A† q - q‖)` over an orthonormal basis.
pub fn fixed_residual(op: &dyn LinearOperator, fixed: &Isometry) -> f64 {
    let mut y = vec![ZERO; op.dim()];
    let mut worst = 0.0f64;
    for q in fixed.columns() {
        op.apply(q, &mut y);
        worst = worst.max(distance(&y, q));
        op.apply_adjoint(q, &mut y);
        worst = worst.max(distance(&y, q));
    }
    worst
}

/// `‖A - P‖_∞` where `A` fixes the range of `P` from both sides. Hermitian operators use
/// their deflated extremal eigenvalues; others the deflated top eigenvalue of `A†A`.
pub fn deflated_operator_norm(op: &SharedOperator, fixed: &Isometry, opts: &EigOptions) -> Result<(f64, Vec<f64>)> {
    if op.is_hermitian() {
        let r = deflated_norm(op.as_ref(), fixed, opts)?;
        Ok((r.values[0], r.residuals))
    } else if uses_dense(op.dim(), opts) {
        // the square root of a Gram eigenvalue loses half the digits near zero
        let m = densify(op.as_ref());
        // M fixes the range of P from both sides, so (1-P) M (1-P) = M - P
        let s = singular_values(&(&m - &fixed.projector_matrix()))?;
        Ok((s.iter().fold(0.0f64, |a, &b| a.max(b)), vec![0.0]))
    } else {
        let gram = GramOperator::new(op.clone());
        let o = EigOptions { which: Which::Largest(1), deflate: Some(fixed.clone()), ..opts.clone() };
        let r = hermitian_eigs(&gram, &o)?;
        let top = r.values.first().copied().unwrap_or(0.0);
        Ok((top.max(0.0).sqrt(), r.residuals))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianReport {
    pub n: usize,
    pub t: usize,
    /// Smallest eigenvalue on the complement of the Haar fixed space.
    pub gap: f64,
    pub ground_energy: f64,
    pub ground_dim: usize,
    pub haar_rank: usize,
    /// `max_q ‖H q‖` over the Haar fixed-space basis.
    pub kernel_residual: f64,
    pub method: SolverMethod,
}

impl HamiltonianReport {
    pub fn frustration_free(&self) -> bool {
        self.ground_energy.abs() <= 1e-9 && self.ground_dim == self.haar_rank
    }
}

/// Gap, ground energy and ground-space dimension of `H_{n,t}`.
pub fn hamiltonian_report(ctx: &WalkContext, opts: &EigOptions) -> Result<HamiltonianReport> {
    let h = hamiltonian(ctx)?;
    let haar = ctx.haar_fixed();
    // H q = 0 is the fixed condition for 1 - H
    let one_minus = LinearCombination::new(ctx.dim(), 1.0).with_term(-1.0, Arc::new(h.clone()))?;
    let kernel_residual = fixed_residual(&one_minus, haar);
    let deflated = EigOptions { which: Which::Smallest(1), deflate: Some(haar.clone()), ..opts.clone() };
    let gap = hermitian_eigs(&h, &deflated)?.values[0];
    let method = method_of(ctx.dim(), opts);
    let (ground_energy, ground_dim) = if method == SolverMethod::Dense {
        let full = hermitian_eigs(&h, &EigOptions { which: Which::Full, deflate: None, ..opts.clone() })?;
        let count = full.values.iter().filter(|v| v.abs() <= 1e-9).count();
        (full.values[0], count)
    } else {
        let lowest = hermitian_eigs(&h, &EigOptions { which: Which::Smallest(1), deflate: None, ..opts.clone() })?;
        // the kernel contains the Haar span; a positive deflated gap shows it is exactly that
        let dim = if kernel_residual <= 1e-9 && gap > 1e-8 { haar.rank() } else { 0 };
        (lowest.values[0], dim)
    };
    Ok(HamiltonianReport {
        n: ctx.n,
        t: ctx.t,
        gap,
        ground_energy,
        ground_dim,
        haar_rank: haar.rank(),
        kernel_residual,
        method,
    })
}

/// What `GapReport::delta_value` holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaKind {
    /// `Δ(H_{n,t})`, the Hamiltonian gap.
    HamiltonianGap,
    /// `1 - g`
    OneMinusG,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapResiduals {
    /// `max_q ‖M q - q‖` over the fixed-space basis (both `M` and `M†`).
    pub fixed_space: f64,
    /// Ritz residuals of the eigenvalue that defines `g` (zeros on the dense path).
    pub ritz: Vec<f64>,
    /// `|g - (1 - Δ/n)|` for local walks.
    pub identity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub walk: WalkSpec,
    pub g_value: f64,
    pub delta_value: f64,
    pub delta_kind: DeltaKind,
    pub fixed_space_rank: usize,
    /// The fixed space is exactly the expected one: residual below tolerance and `g < 1`.
    pub fixed_space_verified: bool,
    pub proven_bound: f64,
    /// Which closed-form bound `proven_bound` is.
    pub bound_name: String,
    pub satisfied: bool,
    pub method: SolverMethod,
    pub residuals: GapResiduals,
}

/// Closed-form bound on `g` that the walk is known to satisfy, with a short name.
/// `hamiltonian_gap` is needed for brickwork walks.
pub fn proven_bound(spec: &WalkSpec, hamiltonian_gap: Option<f64>) -> Result<(f64, &'static str)> {
    let n = spec.n;
    let dn = 4f64.powi(n as i32) - 1.0;
    Ok(match spec.kind {
        WalkKind::Local => (unconditional_g_bound(n as u32), "unconditional-local"),
        WalkKind::Brickwork => {
            let delta = hamiltonian_gap.ok_or_else(|| Error::InvalidParameter("brickwork bound needs Δ(H)".into()))?;
            ((1.0 / (delta / 4.0 + 1.0)).sqrt(), "detectability-conversion")
        }
        WalkKind::CliffordBrickwork => (1.0 - 1.0 / (2000.0 * (n as f64).powi(3)), "clifford-brickwork"),
        WalkKind::Sigma => match spec.inner_k {
            None => (1.0 - 1.5 / dn, "auxiliary-walk"),
            Some(_) => (1.0 - 0.5 / dn, "auxiliary-chain"),
        },
    })
}

/// `g(ν, t) = ‖M - P‖_∞`, with `P` the walk's fixed-space projector.
pub fn spectral_gap(spec: &WalkSpec, ctx: &mut WalkContext, opts: &EigOptions) -> Result<GapReport> {
    let op = moment_operator(spec, ctx)?;
    let fixed = ctx.fixed_space(spec)?;
    let fixed_res = fixed_residual(op.as_ref(), &fixed);
    let (g, ritz) = deflated_operator_norm(&op, &fixed, opts)?;
    let hamiltonian_gap = match spec.kind {
        WalkKind::Local | WalkKind::Brickwork => {
            let h = hamiltonian(ctx)?;
            let o = EigOptions { which: Which::Smallest(1), deflate: Some(ctx.haar_fixed().clone()), ..opts.clone() };
            Some(hermitian_eigs(&h, &o)?.values[0])
        }
        _ => None,
    };
    let identity = match (spec.kind, hamiltonian_gap) {
        (WalkKind::Local, Some(d)) => Some((g - (1.0 - d / spec.n as f64)).abs()),
        _ => None,
    };
    let (bound, name) = proven_bound(spec, hamiltonian_gap)?;
    let (delta_value, delta_kind) = match hamiltonian_gap {
        Some(d) => (d, DeltaKind::HamiltonianGap),
        None => (1.0 - g, DeltaKind::OneMinusG),
    };
    Ok(GapReport {
        walk: *spec,
        g_value: g,
        delta_value,
        delta_kind,
        fixed_space_rank: fixed.rank(),
        fixed_space_verified: fixed_res <= FIXED_TOL && g < 1.0 - FIXED_TOL,
        proven_bound: bound,
        bound_name: name.to_string(),
        satisfied: g <= bound + 1e-10,
        method: method_of(op.dim(), opts),
        residuals: GapResiduals { fixed_space: fixed_res, ritz, identity },
    })
}

/// Projector wrapper for a fixed-space basis.
pub fn projector(basis: &Isometry) -> SharedOperator {
    Arc::new(ProjectorOperator::new(basis.clone()))
}

/// `index,eigenvalue` rows.
pub fn spectrum_csv(values: &[f64]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["index", "eigenvalue"])?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([i.to_string(), format!("{v:.17e}")])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Serialization(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
}

/// Full spectrum of a Hermitian moment operator (dense only).
pub fn moment_spectrum(spec: &WalkSpec, ctx: &mut WalkContext, opts: &EigOptions) -> Result<Vec<f64>> {
    let op = moment_operator(spec, ctx)?;
    if !op.is_hermitian() {
        let gram = GramOperator::new(op);
        let r = hermitian_eigs(&gram, &EigOptions { which: Which::Full, deflate: None, ..opts.clone() })?;
        return Ok(r.values.iter().map(|v| v.max(0.0).sqrt()).collect());
    }
    Ok(hermitian_eigs(op.as_ref(), &EigOptions { which: Which::Full, deflate: None, ..opts.clone() })?.values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::ComplexMatrix;

    fn dense() -> EigOptions {
        EigOptions::default().with_solver(SolverChoice::Dense)
    }

    #[test]
    fn spec_validation() {
        assert!(WalkSpec::new(WalkKind::Local, 1, 2).is_err());
        assert!(WalkSpec::new(WalkKind::Brickwork, 3, 2).is_err());
        assert!(WalkSpec::new(WalkKind::Local, 3, 0).is_err());
        assert!(WalkSpec::new(WalkKind::Local, 6, 3).is_err());
        assert!(WalkSpec::new(WalkKind::Local, 3, 2).unwrap().with_inner_k(2).is_err());
        assert!(WalkSpec::new(WalkKind::Sigma, 3, 2).unwrap().with_inner_k(2).is_err());
        let s = WalkSpec::new(WalkKind::Sigma, 2, 2).unwrap().with_inner_k(3).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<WalkSpec>(&json).unwrap(), s);
        assert_eq!("clifford-brickwork".parse::<WalkKind>().unwrap(), WalkKind::CliffordBrickwork);
    }

    #[test]
    fn two_qubit_local_walk_is_the_haar_projector() {
        for t in 1..=3 {
            let spec = WalkSpec::new(WalkKind::Local, 2, t).unwrap();
            let mut ctx = WalkContext::for_spec(&spec, 1).unwrap();
            let r = spectral_gap(&spec, &mut ctx, &EigOptions::default()).unwrap();
            assert!(r.g_value.abs() < 1e-10, "t={t}: g={}", r.g_value);
            assert!((r.delta_value - 2.0).abs() < 1e-10);
            assert_eq!(r.fixed_space_rank, [1, 2, 6][t - 1]);
            assert!(r.fixed_space_verified && r.satisfied);
            assert!(r.residuals.identity.unwrap() < 1e-10);
        }
    }

    #[test]
    fn two_qubit_brickwork_is_idempotent() {
        let spec = WalkSpec::new(WalkKind::Brickwork, 2, 2).unwrap();
        let mut ctx = WalkContext::for_spec(&spec, 1).unwrap();
        let m = densify(moment_operator(&spec, &mut ctx).unwrap().as_ref());
        let p = ctx.haar_fixed().projector_matrix();
        assert!(m.max_abs_diff(&p) < 1e-12);
        let r = spectral_gap(&spec, &mut ctx, &dense()).unwrap();
        assert!(r.g_value < 1e-6);
    }

    #[test]
    fn three_qubit_local_walk_matches_hamiltonian_gap() {
        let spec = WalkSpec::new(WalkKind::Local, 3, 1).unwrap();
        let mut ctx = WalkContext::for_spec(&spec, 1).unwrap();
        let r = spectral_gap(&spec, &mut ctx, &dense()).unwrap();
        assert!(r.residuals.identity.unwrap() < 1e-10);
        assert!(r.g_value > 0.0 && r.g_value < 1.0);
        let kr = spectral_gap(&spec, &mut ctx, &EigOptions::default().with_solver(SolverChoice::Krylov)).unwrap();
        assert!((kr.g_value - r.g_value).abs() < 1e-9);
        assert_eq!(kr.method, SolverMethod::Krylov);
    }

    #[test]
    fn hamiltonian_on_two_qubits() {
        let ctx = WalkContext::new(2, 2, 0).unwrap();
        let h = densify(&hamiltonian(&ctx).unwrap());
        let p = ctx.haar_fixed().projector_matrix();
        let expect = (&ComplexMatrix::identity(16 * 16) - &p).scaled_real(2.0);
        assert!(h.max_abs_diff(&expect) < 1e-12);
        let rep = hamiltonian_report(&ctx, &dense()).unwrap();
        assert!(rep.frustration_free());
        assert!((rep.gap - 2.0).abs() < 1e-10);
    }

    #[test]
    fn sigma_is_hermitian_and_below_its_bound() {
        let spec = WalkSpec::new(WalkKind::Sigma, 2, 1).unwrap();
        let mut ctx = WalkContext::for_spec(&spec, 3).unwrap();
        let op = moment_operator(&spec, &mut ctx).unwrap();
        assert!(op.is_hermitian());
        let m = densify(op.as_ref());
        assert!(m.hermitian_deviation() < 1e-12);
        let r = spectral_gap(&spec, &mut ctx, &dense()).unwrap();
        assert!(r.satisfied, "{r:?}");
    }

    #[test]
    fn spectrum_csv_has_header_and_rows() {
        let s = spectrum_csv(&[0.0, 0.5]).unwrap();
        assert_eq!(s.lines().count(), 3);
        assert!(s.starts_with("index,eigenvalue"));
    }
}
