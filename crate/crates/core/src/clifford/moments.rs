//! Moment operators of the Clifford group: exact enumeration averages, frame potentials,
//! the fixed-space projector `P_Cl` and the single-qubit twirl identity.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::pauli::all_paulis;
use super::synth::synthesize_unitary;
use super::tableau::{enumerate_clifford, sample_clifford, CliffordTableau, MAX_ENUMERATION_QUBITS};
use crate::error::{Error, Result};
use crate::haar::{apply_moment, moment_matrix, qubit_haar_span, to_site_major, MAX_T};
use crate::tensor::krylov::{hermitian_eigs, EigOptions, SolverChoice};
use crate::tensor::layout::partial_trace;
use crate::tensor::matrix::{ComplexMatrix, C64, ZERO};
use crate::tensor::operator::{kron_lift, LinearCombination, LinearOperator, ProjectorOperator, SharedOperator};
use crate::tensor::dense::eigh;
use crate::tensor::vector::Isometry;

/// Eigenvalues at or above `1 - FIXED_TOL` count as fixed.
pub const FIXED_TOL: f64 = 1e-8;

/// Dense moment average is only formed up to this dimension.
pub const DENSE_AVERAGE_CAP: usize = 1 << 10;

/// Unitaries of every enumerated Clifford on `n ≤ 2` qubits.
pub fn enumerated_unitaries(n: usize) -> Result<Vec<ComplexMatrix>> {
    enumerate_clifford(n)?.iter().map(synthesize_unitary).collect()
}

/// Dense `(1/|Cl|) Σ_C C^{⊗t} ⊗ C̄^{⊗t}` over the whole group, copy-major.
pub fn dense_clifford_moment(n: usize, t: usize) -> Result<ComplexMatrix> {
    let dim = 1usize << (2 * n * t);
    if dim > DENSE_AVERAGE_CAP {
        return Err(Error::CapExceeded { dim, cap: DENSE_AVERAGE_CAP });
    }
    let us = enumerated_unitaries(n)?;
    let mut acc = ComplexMatrix::zeros(dim, dim);
    for u in &us {
        let m = moment_matrix(u, t);
        for (a, b) in acc.data_mut().iter_mut().zip(m.data()) {
            *a += b;
        }
    }
    Ok(acc.scaled_real(1.0 / us.len() as f64))
}

/// `E_C |Tr C|^{2t}` over the enumerated group. This is `Tr P_Cl`, hence its rank.
pub fn frame_potential_exact(n: usize, t: usize) -> Result<f64> {
    let us = enumerated_unitaries(n)?;
    let sum: f64 = us.iter().map(|u| u.trace().norm_sqr().powi(t as i32)).sum();
    Ok(sum / us.len() as f64)
}

/// Monte Carlo `E_C |Tr C|^{2t}` with its standard error.
pub fn frame_potential_mc<R: Rng + ?Sized>(n: usize, t: usize, samples: usize, rng: &mut R) -> Result<(f64, f64)> {
    let mut values = Vec::with_capacity(samples);
    for _ in 0..samples {
        let u = synthesize_unitary(&sample_clifford(n, rng)?)?;
        values.push(u.trace().norm_sqr().powi(t as i32));
    }
    Ok(mean_and_stderr(&values))
}

pub(crate) fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// The group average as a product of two commuting projectors: every Clifford is, up to
/// phase, a sign-free symplectic representative times a Pauli.
struct FactorizedAverage {
    t: usize,
    representatives: Vec<ComplexMatrix>,
    paulis: Vec<ComplexMatrix>,
}

impl FactorizedAverage {
    fn new(n: usize, t: usize) -> Result<Self> {
        let group = enumerate_clifford(n)?;
        let representatives = group
            .iter()
            .filter(|c| c.signs().iter().all(|s| !s))
            .map(synthesize_unitary)
            .collect::<Result<Vec<_>>>()?;
        let paulis = all_paulis(n).iter().map(|p| p.matrix(n)).collect();
        Ok(Self { t, representatives, paulis })
    }

    fn average(ops: &[ComplexMatrix], t: usize, x: &[C64]) -> Vec<C64> {
        let mut acc = vec![ZERO; x.len()];
        for u in ops {
            for (a, b) in acc.iter_mut().zip(apply_moment(u, t, x)) {
                *a += b;
            }
        }
        let s = 1.0 / ops.len() as f64;
        acc.iter_mut().for_each(|a| *a *= s);
        acc
    }

    /// Copy-major `x -> avg_S R(C_S) avg_P R(P) x`.
    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let y = Self::average(&self.paulis, self.t, x);
        Self::average(&self.representatives, self.t, &y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProjectorMethod {
    /// Range of the exact group average (`n ≤ 2`).
    Enumerate,
    /// Eigenvalue-1 space of the nearest-neighbour 2-qubit Clifford walk.
    FixedSpace,
}

/// `P_Cl,n = M(μ_Cl, t)`, stored by an orthonormal basis of its range in site-major order
/// (local dimension `4^t` per qubit).
#[derive(Clone, Debug)]
pub struct CliffordProjector {
    pub n: usize,
    pub t: usize,
    pub method: ProjectorMethod,
    pub basis: Isometry,
    /// Largest generator eigenvalue outside the fixed space (fixed-space method only).
    pub generator_next_eigenvalue: Option<f64>,
    pub haar_rank: usize,
}

impl CliffordProjector {
    pub fn rank(&self) -> usize {
        self.basis.rank()
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn operator(&self) -> ProjectorOperator {
        ProjectorOperator::new(self.basis.clone())
    }

    pub fn shared(&self) -> SharedOperator {
        Arc::new(self.operator())
    }

    /// Dense matrix, subject to `cap`.
    pub fn matrix(&self, cap: usize) -> Result<ComplexMatrix> {
        if self.dim() > cap {
            return Err(Error::CapExceeded { dim: self.dim(), cap });
        }
        Ok(self.basis.projector_matrix())
    }
}

fn real_gaussian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C64> {
    (0..dim).map(|_| C64::new(rng.sample(StandardNormal), 0.0)).collect()
}

fn check_t(t: usize) -> Result<()> {
    if t == 0 || t > MAX_T {
        return Err(Error::InvalidParameter(format!("moment order {t} outside 1..={MAX_T}")));
    }
    Ok(())
}

/// Builds `P_Cl,n`. `Enumerate` needs `n ≤ 2`; `FixedSpace` needs `n ≥ 3` and finds the
/// eigenvalue-1 space of `(1/n) Σ_i lift(P_Cl,2, (i, i+1))` by deflated Lanczos, starting
/// from the Haar span it must contain.
pub fn clifford_projector<R: Rng + ?Sized>(
    n: usize,
    t: usize,
    method: ProjectorMethod,
    rng: &mut R,
) -> Result<CliffordProjector> {
    check_t(t)?;
    let haar = qubit_haar_span(n, t)?;
    match method {
        ProjectorMethod::Enumerate => {
            if n == 0 || n > MAX_ENUMERATION_QUBITS {
                return Err(Error::InvalidParameter(format!("enumeration needs n <= {MAX_ENUMERATION_QUBITS}, got {n}")));
            }
            let target = frame_potential_exact(n, t)?.round() as usize;
            let avg = FactorizedAverage::new(n, t)?;
            let dim = 1usize << (2 * n * t);
            let mut basis = Isometry::empty(dim);
            // two extra probes confirm the range is exhausted
            for _ in 0..target + 2 {
                let img = avg.apply(&real_gaussian(dim, rng));
                let img = to_site_major(&img, n, t)?;
                basis.try_push(img, 1e-8);
            }
            if basis.rank() != target {
                return Err(Error::Decomposition(format!(
                    "average range has rank {}, frame potential says {target}",
                    basis.rank()
                )));
            }
            Ok(CliffordProjector {
                n,
                t,
                method,
                basis,
                generator_next_eigenvalue: None,
                haar_rank: haar.rank(),
            })
        }
        ProjectorMethod::FixedSpace => {
            if n < 3 {
                return Err(Error::InvalidParameter("fixed-space construction needs n >= 3".into()));
            }
            let pair = clifford_projector(2, t, ProjectorMethod::Enumerate, rng)?;
            let generator = local_clifford_walk(n, t, &pair.basis)?;
            let (basis, next) = fixed_space(&generator, haar.clone(), rng.random())?;
            Ok(CliffordProjector {
                n,
                t,
                method,
                basis,
                generator_next_eigenvalue: Some(next),
                haar_rank: haar.rank(),
            })
        }
    }
}

/// `(1/n) Σ_i lift(P, (i, i+1))` on a ring of `n` qubits, `P` a two-qubit projector basis.
pub fn local_clifford_walk(n: usize, t: usize, pair_basis: &Isometry) -> Result<LinearCombination> {
    let dims = vec![1usize << (2 * t); n];
    let dim: usize = dims.iter().product();
    let mut op = LinearCombination::new(dim, 0.0);
    for i in 0..n {
        let lift = kron_lift(pair_basis.clone(), i, &dims)?;
        op = op.with_term(1.0 / n as f64, Arc::new(lift))?;
    }
    Ok(op)
}

/// Grows `known` by eigenvectors of `generator` with eigenvalue `≥ 1 - FIXED_TOL` until the
/// largest remaining eigenvalue drops below it. Returns the space and that eigenvalue.
pub fn fixed_space(generator: &dyn LinearOperator, known: Isometry, seed: u64) -> Result<(Isometry, f64)> {
    let mut basis = known;
    for round in 0..64 {
        let opts = EigOptions::largest(4)
            .deflating(basis.clone())
            .with_seed(seed.wrapping_add(round))
            .with_solver(SolverChoice::Krylov)
            .with_vectors();
        let res = hermitian_eigs(generator, &opts)?;
        let vectors = res.vectors.unwrap_or_default();
        let mut added = false;
        for (val, vec) in res.values.iter().zip(vectors) {
            if *val >= 1.0 - FIXED_TOL {
                added |= basis.try_push(vec, 1e-6);
            }
        }
        if !added {
            let next = res.values.first().copied().unwrap_or(f64::NEG_INFINITY);
            return Ok((basis, next));
        }
    }
    Err(Error::NonConvergence {
        iterations: 64,
        residuals: vec![],
    })
}

/// Spectrum of `Q_a Q_a† - Q_b Q_b†` on the joint span (other eigenvalues are zero).
pub fn projector_difference_spectrum(a: &Isometry, b: &Isometry) -> Result<Vec<f64>> {
    if a.dim() != b.dim() {
        return Err(Error::Shape(format!("projectors on {} and {} dimensions", a.dim(), b.dim())));
    }
    let joint = Isometry::orthonormalize(a.dim(), a.columns().iter().chain(b.columns()).cloned(), 1e-10);
    let r = joint.rank();
    let ca: Vec<Vec<C64>> = a.columns().iter().map(|q| joint.coefficients(q)).collect();
    let cb: Vec<Vec<C64>> = b.columns().iter().map(|q| joint.coefficients(q)).collect();
    let m = ComplexMatrix::from_fn(r, r, |i, j| {
        let pa: C64 = ca.iter().map(|c| c[i] * c[j].conj()).sum();
        let pb: C64 = cb.iter().map(|c| c[i] * c[j].conj()).sum();
        pa - pb
    });
    Ok(eigh(&m, false)?.0)
}

/// `‖avg_C C^{⊗t}⊗C̄^{⊗t} − P_H‖_∞` over the enumerated group.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CliffordDesignResidual {
    pub n: usize,
    pub t: usize,
    pub residual: f64,
    pub clifford_rank: usize,
    pub haar_rank: usize,
    /// `dense-sum` or `projector-distance`.
    pub route: String,
}

pub fn clifford_design_residual<R: Rng + ?Sized>(n: usize, t: usize, rng: &mut R) -> Result<CliffordDesignResidual> {
    check_t(t)?;
    let haar = crate::haar::haar_span(1 << n, t)?;
    let dim = 1usize << (2 * n * t);
    if dim <= DENSE_AVERAGE_CAP {
        let avg = dense_clifford_moment(n, t)?;
        let diff = &avg - &haar.projector_matrix();
        let sym = (&diff + &diff.adjoint()).scaled_real(0.5);
        let residual = crate::tensor::dense::hermitian_operator_norm(&sym)?;
        let clifford_rank = avg.trace().re.round() as usize;
        return Ok(CliffordDesignResidual {
            n,
            t,
            residual,
            clifford_rank,
            haar_rank: haar.rank(),
            route: "dense-sum".into(),
        });
    }
    let p = clifford_projector(n, t, ProjectorMethod::Enumerate, rng)?;
    let spectrum = projector_difference_spectrum(&p.basis, &qubit_haar_span(n, t)?)?;
    let residual = spectrum.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(CliffordDesignResidual {
        n,
        t,
        residual,
        clifford_rank: p.rank(),
        haar_rank: p.haar_rank,
        route: "projector-distance".into(),
    })
}

/// Coefficient of `Tr[H²]` in the twirl identity: `(2 − 2^{-1}) / (2^n − 2^{-n})`.
pub fn twirl_square_coefficient(n: usize) -> f64 {
    let d = (1u64 << n) as f64;
    1.5 / (d - 1.0 / d)
}

/// Coefficient of `Tr[H]²`: `(2^{2n-1} − 2) / (2^{2n} − 1)`.
pub fn twirl_trace_coefficient(n: usize) -> f64 {
    let d2 = (1u64 << (2 * n)) as f64;
    (d2 / 2.0 - 2.0) / (d2 - 1.0)
}

pub fn twirl_rhs(n: usize, h: &ComplexMatrix) -> f64 {
    let tr2 = h.matmul(h).trace().re;
    let tr = h.trace().re;
    twirl_square_coefficient(n) * tr2 + twirl_trace_coefficient(n) * tr * tr
}

/// `Tr[H^{⊗2} (C†)^{⊗2} (F_1 ⊗ 1) C^{⊗2}] = Tr[(Tr_{2..n} C H C†)²]`, `F_1` swapping qubit 0
/// between the two copies.
pub fn twirl_term(u: &ComplexMatrix, h: &ComplexMatrix, n: usize) -> Result<f64> {
    let conj = u.matmul(h).matmul(&u.adjoint());
    let red = partial_trace(&conj, &[0], &vec![2; n])?;
    Ok(red.matmul(&red).trace().re)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TwirlCheck {
    pub n: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// Standard error of `lhs`; zero for exact averages.
    pub stderr: f64,
    pub samples: usize,
    pub exact: bool,
    pub agree: bool,
}

fn check_hermitian_input(n: usize, h: &ComplexMatrix) -> Result<()> {
    if h.rows() != 1 << n || !h.is_square() {
        return Err(Error::Shape(format!("twirl input must be {0}x{0}", 1 << n)));
    }
    let dev = h.hermitian_deviation();
    if dev > 1e-12 * h.max_abs().max(1.0) {
        return Err(Error::NotHermitian { deviation: dev, tolerance: 1e-12 });
    }
    Ok(())
}

/// Exact average over the enumerated group (`n ≤ 2`), tolerance `1e-9`.
pub fn twirl_check_exact(n: usize, h: &ComplexMatrix, unitaries: &[ComplexMatrix]) -> Result<TwirlCheck> {
    check_hermitian_input(n, h)?;
    let mut sum = 0.0;
    for u in unitaries {
        sum += twirl_term(u, h, n)?;
    }
    let lhs = sum / unitaries.len() as f64;
    let rhs = twirl_rhs(n, h);
    Ok(TwirlCheck {
        n,
        lhs,
        rhs,
        stderr: 0.0,
        samples: unitaries.len(),
        exact: true,
        agree: (lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1.0),
    })
}

/// Monte Carlo average over sampled Cliffords, agreement within `3σ`.
pub fn twirl_check_mc<R: Rng + ?Sized>(n: usize, h: &ComplexMatrix, samples: usize, rng: &mut R) -> Result<TwirlCheck> {
    check_hermitian_input(n, h)?;
    let mut values = Vec::with_capacity(samples);
    for _ in 0..samples {
        let u = synthesize_unitary(&sample_clifford(n, rng)?)?;
        values.push(twirl_term(&u, h, n)?);
    }
    let (lhs, stderr) = mean_and_stderr(&values);
    let rhs = twirl_rhs(n, h);
    Ok(TwirlCheck {
        n,
        lhs,
        rhs,
        stderr,
        samples,
        exact: false,
        agree: (lhs - rhs).abs() <= 3.0 * stderr + 1e-12,
    })
}

/// Uniform Clifford sampler as a tableau-to-unitary pipeline, for callers that only need
/// dense matrices.
pub fn sample_clifford_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<ComplexMatrix> {
    synthesize_unitary(&sample_clifford(n, rng)?)
}

/// Empirical `(1/k) Σ R(C_i)` for `k` sampled Cliffords, copy-major and dense.
pub fn empirical_clifford_moment<R: Rng + ?Sized>(n: usize, t: usize, samples: usize, rng: &mut R) -> Result<ComplexMatrix> {
    let dim = 1usize << (2 * n * t);
    if dim > DENSE_AVERAGE_CAP {
        return Err(Error::CapExceeded { dim, cap: DENSE_AVERAGE_CAP });
    }
    let mut acc = ComplexMatrix::zeros(dim, dim);
    for _ in 0..samples {
        let m = moment_matrix(&sample_clifford_unitary(n, rng)?, t);
        for (a, b) in acc.data_mut().iter_mut().zip(m.data()) {
            *a += b;
        }
    }
    Ok(acc.scaled_real(1.0 / samples as f64))
}

/// Unitary of a layer sequence applied in order (first element first).
pub fn circuit_unitary(layers: &[CliffordTableau]) -> Result<ComplexMatrix> {
    let n = layers.first().map(|l| l.n()).unwrap_or(1);
    let mut acc = CliffordTableau::identity(n);
    for l in layers {
        acc = l.compose(&acc)?;
    }
    synthesize_unitary(&acc)
}
