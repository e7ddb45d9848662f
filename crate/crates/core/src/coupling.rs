//! Monte Carlo path coupling for the auxiliary walk `X -> C'(U ⊗ 1)C X`.
//!
//! Two nearby unitaries `X` and `Y` are pushed through the same Cliffords `C, C'` and
//! single-qubit Haar gate `U`, with an extra single-qubit correction `V` on the `X` branch
//! chosen to minimise the Frobenius distance of the outputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clifford::moments::{
    mean_and_stderr, sample_clifford_unitary, twirl_square_coefficient, twirl_term, twirl_trace_coefficient,
};
use crate::clifford::synth::MAX_SYNTHESIS_QUBITS;
use crate::error::{Error, Result};
use crate::haar::{permutation_operator, sample_haar};
use crate::tensor::dense::{eigh, polar_unitary};
use crate::tensor::layout::partial_trace;
use crate::tensor::matrix::{ComplexMatrix, C64};
use crate::tensor::operator::LinearOperator;
use crate::tensor::vector::basis_vector;

/// Largest matrix dimension accepted by [`replica_check`].
pub const MAX_REPLICA_DIM: usize = 64;

/// Standard error above which a [`CouplingTrace`] carries an advisory.
pub const STDERR_ADVISORY: f64 = 5e-3;

/// `1 - 3/(4^n - 1)`, the mean-square contraction factor of one coupled step.
pub fn eta_squared(n: usize) -> f64 {
    1.0 - 3.0 / (4f64.powi(n as i32) - 1.0)
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_SYNTHESIS_QUBITS {
        return Err(Error::InvalidParameter(format!("coupling needs 1 <= n <= {MAX_SYNTHESIS_QUBITS}, got {n}")));
    }
    Ok(())
}

/// `V ⊗ 1` for a single-qubit `V` acting on qubit 0.
fn on_first_qubit(v: &ComplexMatrix, n: usize) -> ComplexMatrix {
    v.kron(&ComplexMatrix::identity(1 << (n - 1)))
}

/// The `V` maximising `Re Tr[(V ⊗ 1) C X Y† C†]`: the adjoint of the polar unitary of
/// `Tr_{[2,n]}(C X Y† C†)`.
pub fn optimal_correction(cx: &ComplexMatrix, cy: &ComplexMatrix, n: usize) -> Result<ComplexMatrix> {
    let a = partial_trace(&cx.matmul(&cy.adjoint()), &[0], &vec![2; n])?;
    Ok(polar_unitary(&a)?.unitary.adjoint())
}

/// The random pieces of one coupled step.
#[derive(Clone, Debug)]
pub struct StepDraw {
    pub c: ComplexMatrix,
    pub c_prime: ComplexMatrix,
    pub u: ComplexMatrix,
}

impl StepDraw {
    pub fn sample<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        check_n(n)?;
        Ok(Self {
            c: sample_clifford_unitary(n, rng)?,
            c_prime: sample_clifford_unitary(n, rng)?,
            u: sample_haar(2, rng),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Correction {
    /// `V` from the polar decomposition.
    Optimal,
    /// `V = 1`, the uncoupled-correction baseline.
    Identity,
}

/// `X' = C'(UV ⊗ 1)C X`, `Y' = C'(U ⊗ 1)C Y` for a given draw.
pub fn coupled_step_with(
    x: &ComplexMatrix,
    y: &ComplexMatrix,
    draw: &StepDraw,
    correction: Correction,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let dim = x.rows();
    if !x.is_square() || y.rows() != dim || y.cols() != dim || !dim.is_power_of_two() || dim < 2 {
        return Err(Error::Shape(format!("coupled step on {}x{} and {}x{}", x.rows(), x.cols(), y.rows(), y.cols())));
    }
    let n = dim.trailing_zeros() as usize;
    let cx = draw.c.matmul(x);
    let cy = draw.c.matmul(y);
    let v = match correction {
        Correction::Optimal => optimal_correction(&cx, &cy, n)?,
        Correction::Identity => ComplexMatrix::identity(2),
    };
    let left_x = draw.c_prime.matmul(&on_first_qubit(&draw.u.matmul(&v), n));
    let left_y = draw.c_prime.matmul(&on_first_qubit(&draw.u, n));
    Ok((left_x.matmul(&cx), left_y.matmul(&cy)))
}

/// One coupled step with fresh `C, C', U` and the optimal `V`.
pub fn coupled_step<R: Rng + ?Sized>(x: &ComplexMatrix, y: &ComplexMatrix, rng: &mut R) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let n = x.rows().trailing_zeros() as usize;
    let draw = StepDraw::sample(n, rng)?;
    coupled_step_with(x, y, &draw, Correction::Optimal)
}

fn frobenius_sq(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.data().iter().zip(b.data()).map(|(p, q)| (p - q).norm_sqr()).sum()
}

/// GUE matrix with its trace removed, scaled to unit Frobenius norm.
pub fn traceless_direction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let mut h = ComplexMatrix::random_hermitian(dim, rng);
    let shift = h.trace() / dim as f64;
    for i in 0..dim {
        h[(i, i)] -= shift;
    }
    let f = h.frobenius_norm();
    h.scaled_real(1.0 / f)
}

/// `exp(i ε H)` for Hermitian `H`.
pub fn unitary_flow(h: &ComplexMatrix, epsilon: f64) -> Result<ComplexMatrix> {
    let (vals, vecs) = eigh(h, true)?;
    let w = vecs.expect("vectors requested");
    let d = h.rows();
    let phases: Vec<C64> = vals.iter().map(|l| C64::from_polar(1.0, epsilon * l)).collect();
    Ok(ComplexMatrix::from_fn(d, d, |i, j| (0..d).map(|k| w[(i, k)] * phases[k] * w[(j, k)].conj()).sum()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingTrace {
    pub n: usize,
    pub epsilon: f64,
    pub samples: usize,
    pub seed: u64,
    /// Seed of each sample's private generator; it fixes `Y`, `H`, `C`, `C'` and `U`.
    pub sample_seeds: Vec<u64>,
    /// `‖X' - Y'‖_F² / ‖X - Y‖_F²` with the optimal `V`.
    pub ratios: Vec<f64>,
    pub mean: f64,
    pub stderr: f64,
    /// Mean ratio with `V = 1`.
    pub identity_mean: f64,
    /// `1 - 3/(4^n - 1)`
    pub target_eta_sq: f64,
    /// `Tr[(Tr_{[2,n]} C H C†)²]` per sample.
    pub twirl_terms: Vec<f64>,
    /// Mean of `twirl_terms`, the empirical `Tr[H²]` coefficient since every `H` is
    /// traceless with `Tr[H²] = 1`.
    pub twirl_square_mean: f64,
    /// `1 - 2^{1-n} · twirl_square_mean`, the leading-order mean ratio implied by the twirl.
    pub twirl_predicted_mean: f64,
    /// Set when the standard error is too large for the band check to mean much.
    pub advisory: Option<String>,
}

impl CouplingTrace {
    /// `|mean - target| <= 3σ + band`
    pub fn within_band(&self, band: f64) -> bool {
        (self.mean - self.target_eta_sq).abs() <= 3.0 * self.stderr + band
    }

    pub fn optimal_dominates_identity(&self) -> bool {
        self.mean <= self.identity_mean + 1e-12
    }
}

fn sample_seed(seed: u64, i: usize) -> u64 {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(i as u64 + 1);
    r.random()
}

/// Mean-square contraction of coupled pairs `X = exp(iεH) Y` with Haar `Y` and traceless
/// unit-norm `H`.
pub fn contraction_estimate(n: usize, epsilon: f64, samples: usize, seed: u64) -> Result<CouplingTrace> {
    check_n(n)?;
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least two samples for a standard error".into()));
    }
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!("epsilon must be finite and nonnegative, got {epsilon}")));
    }
    let dim = 1usize << n;
    let mut sample_seeds = Vec::with_capacity(samples);
    let mut ratios = Vec::with_capacity(samples);
    let mut identity = Vec::with_capacity(samples);
    let mut twirl_terms = Vec::with_capacity(samples);
    for i in 0..samples {
        let s = sample_seed(seed, i);
        sample_seeds.push(s);
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let y = sample_haar(dim, &mut rng);
        let h = traceless_direction(dim, &mut rng);
        let x = if epsilon == 0.0 { y.clone() } else { unitary_flow(&h, epsilon)?.matmul(&y) };
        let draw = StepDraw::sample(n, &mut rng)?;
        let before = frobenius_sq(&x, &y);
        let (xo, yo) = coupled_step_with(&x, &y, &draw, Correction::Optimal)?;
        let (xi, yi) = coupled_step_with(&x, &y, &draw, Correction::Identity)?;
        // at ε = 0 the pair coincides and the ratio is reported as the (zero) output distance
        let denom = if before > 0.0 { before } else { 1.0 };
        ratios.push(frobenius_sq(&xo, &yo) / denom);
        identity.push(frobenius_sq(&xi, &yi) / denom);
        twirl_terms.push(twirl_term(&draw.c, &h, n)?);
    }
    let (mean, stderr) = mean_and_stderr(&ratios);
    let (identity_mean, _) = mean_and_stderr(&identity);
    let (twirl_square_mean, _) = mean_and_stderr(&twirl_terms);
    let advisory = (stderr > STDERR_ADVISORY)
        .then(|| format!("stderr {stderr:.3e} exceeds {STDERR_ADVISORY:.0e}; raise the sample count"));
    Ok(CouplingTrace {
        n,
        epsilon,
        samples,
        seed,
        sample_seeds,
        ratios,
        mean,
        stderr,
        identity_mean,
        target_eta_sq: eta_squared(n),
        twirl_terms,
        twirl_square_mean,
        twirl_predicted_mean: 1.0 - 2f64.powi(1 - n as i32) * twirl_square_mean,
        advisory,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwirlCoefficients {
    pub n: usize,
    pub samples: usize,
    /// Estimated coefficient of `Tr[H²]`, from traceless unit-norm directions.
    pub square: f64,
    pub square_stderr: f64,
    pub square_exact: f64,
    /// Estimated coefficient of `Tr[H]²`, from directions with a random identity part.
    pub trace: f64,
    pub trace_stderr: f64,
    pub trace_exact: f64,
    pub agree: bool,
}

/// Monte Carlo estimates of both twirl coefficients over uniform Cliffords.
pub fn twirl_coefficients(n: usize, samples: usize, seed: u64) -> Result<TwirlCoefficients> {
    check_n(n)?;
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least two samples for a standard error".into()));
    }
    let dim = 1usize << n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sq = Vec::with_capacity(samples);
    let mut tr = Vec::with_capacity(samples);
    for _ in 0..samples {
        let c = sample_clifford_unitary(n, &mut rng)?;
        let h0 = traceless_direction(dim, &mut rng);
        sq.push(twirl_term(&c, &h0, n)?);
        // H = H0 + s·1: Tr H² = 1 + s²D, (Tr H)² = s²D²
        let s: f64 = rng.random_range(0.5..1.5);
        let mut h = h0;
        for i in 0..dim {
            h[(i, i)] += C64::new(s, 0.0);
        }
        let d = dim as f64;
        let y = twirl_term(&c, &h, n)?;
        tr.push((y - twirl_square_coefficient(n) * (1.0 + s * s * d)) / (s * s * d * d));
    }
    let (square, square_stderr) = mean_and_stderr(&sq);
    let (trace, trace_stderr) = mean_and_stderr(&tr);
    let square_exact = twirl_square_coefficient(n);
    let trace_exact = twirl_trace_coefficient(n);
    let agree = (square - square_exact).abs() <= 3.0 * square_stderr + 1e-12
        && (trace - trace_exact).abs() <= 3.0 * trace_stderr + 1e-12;
    Ok(TwirlCoefficients {
        n,
        samples,
        square,
        square_stderr,
        square_exact,
        trace,
        trace_stderr,
        trace_exact,
        agree,
    })
}

/// Mean contraction at several step sizes, all from the same seed.
pub fn epsilon_sweep(n: usize, epsilons: &[f64], samples: usize, seed: u64) -> Result<Vec<CouplingTrace>> {
    epsilons.iter().map(|&e| contraction_estimate(n, e, samples, seed)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicaCheck {
    pub dim: usize,
    /// `Tr[A²]`
    pub direct: C64,
    /// `Tr[(A ⊗ A) F]` with `F` the swap of the two copies
    pub replica: C64,
    pub deviation: f64,
}

/// Compares `Tr[A²]` against the swap-trick form `Tr[(A ⊗ A) F]`.
pub fn replica_check(a: &ComplexMatrix) -> Result<ReplicaCheck> {
    let d = a.rows();
    if !a.is_square() || d == 0 {
        return Err(Error::Shape(format!("replica check on {}x{}", a.rows(), a.cols())));
    }
    if d > MAX_REPLICA_DIM {
        return Err(Error::CapExceeded { dim: d, cap: MAX_REPLICA_DIM });
    }
    let f = permutation_operator(&[1, 0], d, 2)?;
    let mut replica = C64::new(0.0, 0.0);
    let mut col = vec![C64::new(0.0, 0.0); d * d];
    for k in 0..d * d {
        f.apply(&basis_vector(d * d, k), &mut col);
        // F e_k is a basis vector; (A ⊗ A)[k, j] = A[k1, j1] A[k2, j2]
        let (k1, k2) = (k / d, k % d);
        for (j, z) in col.iter().enumerate() {
            if z.norm_sqr() > 0.0 {
                replica += a[(k1, j / d)] * a[(k2, j % d)] * z;
            }
        }
    }
    let direct = a.matmul(a).trace();
    Ok(ReplicaCheck { dim: d, direct, replica, deviation: (direct - replica).norm() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WassersteinDecay {
    pub n: usize,
    pub k: usize,
    pub t: usize,
    /// `sqrt(1 - 3/(4^n - 1))`
    pub eta: f64,
    /// `π 2^{n/2} η^k`
    pub stated: f64,
    /// `√2 2^{n/2} η^k`, the constant the coupling argument actually produces
    pub coupling: f64,
    /// `2√2 t 2^{n/2} η^k`, the resulting bound on `g` of the auxiliary chain
    pub gap_bound: f64,
}

pub fn wasserstein_decay(n: usize, k: usize, t: usize) -> Result<WassersteinDecay> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let eta = eta_squared(n).sqrt();
    let scale = 2f64.powf(n as f64 / 2.0) * eta.powi(k as i32);
    Ok(WassersteinDecay {
        n,
        k,
        t,
        eta,
        stated: std::f64::consts::PI * scale,
        coupling: std::f64::consts::SQRT_2 * scale,
        gap_bound: 2.0 * std::f64::consts::SQRT_2 * t as f64 * scale,
    })
}

/// Smallest `k` with `2√2 t 2^{n/2} η^k <= target`.
pub fn steps_below(n: usize, t: usize, target: f64) -> Result<usize> {
    if !(target > 0.0) {
        return Err(Error::InvalidParameter(format!("target must be positive, got {target}")));
    }
    let w = wasserstein_decay(n, 0, t)?;
    if w.gap_bound <= target {
        return Ok(0);
    }
    let k = ((target / w.gap_bound).ln() / w.eta.ln()).ceil() as usize;
    // guard against rounding at the boundary
    Ok((k.saturating_sub(1)..=k + 1).find(|&k| w.gap_bound * w.eta.powi(k as i32) <= target).unwrap_or(k + 1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaConsistency {
    pub n: usize,
    pub t: usize,
    pub g_sigma: f64,
    pub eta: f64,
    pub holds: bool,
}

/// Checks a measured `g(σ_n, t)` against the one-step coupling rate `η`.
pub fn eta_consistency(n: usize, t: usize, g_sigma: f64) -> EtaConsistency {
    let eta = eta_squared(n).sqrt();
    EtaConsistency { n, t, g_sigma, eta, holds: g_sigma <= eta + 1e-9 }
}
