//! Dense circuit samplers and a Monte Carlo frame-potential estimate.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{WalkKind, WalkSpec};
use crate::clifford::moments::{mean_and_stderr, sample_clifford_unitary};
use crate::clifford::synth::MAX_SYNTHESIS_QUBITS;
use crate::clifford::tableau::brickwork_pairs;
use crate::error::{Error, Result};
use crate::haar::sample_haar;
use crate::tensor::matrix::{ComplexMatrix, C64};

/// Largest register the dense samplers build.
pub const MAX_SAMPLER_QUBITS: usize = 8;

/// Bit position of qubit `q` in a dense index (qubit 0 is the most significant).
fn shift(n: usize, q: usize) -> usize {
    n - 1 - q
}

/// `gate` on qubits `(a, b)` of an `n`-qubit register, `a` the more significant gate index.
pub fn embed_two_qubit(gate: &ComplexMatrix, n: usize, a: usize, b: usize) -> Result<ComplexMatrix> {
    let mut u = ComplexMatrix::identity(1 << n);
    apply_two_qubit(&mut u, gate, n, a, b)?;
    Ok(u)
}

/// `u <- G_{ab} u` without forming the embedded gate.
pub fn apply_two_qubit(u: &mut ComplexMatrix, gate: &ComplexMatrix, n: usize, a: usize, b: usize) -> Result<()> {
    if gate.rows() != 4 || gate.cols() != 4 || a == b || a >= n || b >= n {
        return Err(Error::Shape(format!("two-qubit gate on ({a},{b}) of {n} qubits")));
    }
    let (sa, sb) = (shift(n, a), shift(n, b));
    let cols = u.cols();
    let dim = 1usize << n;
    let mask = (1 << sa) | (1 << sb);
    let mut buf = [C64::new(0.0, 0.0); 4];
    for base in (0..dim).filter(|r| r & mask == 0) {
        let rows = [base, base | (1 << sb), base | (1 << sa), base | mask];
        for c in 0..cols {
            for (i, out) in buf.iter_mut().enumerate() {
                *out = (0..4).map(|j| gate[(i, j)] * u[(rows[j], c)]).sum();
            }
            for (i, &r) in rows.iter().enumerate() {
                u[(r, c)] = buf[i];
            }
        }
    }
    Ok(())
}

/// `u <- G_q u` for a single-qubit gate.
pub fn apply_one_qubit(u: &mut ComplexMatrix, gate: &ComplexMatrix, n: usize, q: usize) -> Result<()> {
    if gate.rows() != 2 || gate.cols() != 2 || q >= n {
        return Err(Error::Shape(format!("one-qubit gate on {q} of {n} qubits")));
    }
    let s = shift(n, q);
    for base in (0..1usize << n).filter(|r| r & (1 << s) == 0) {
        let r1 = base | (1 << s);
        for c in 0..u.cols() {
            let (x0, x1) = (u[(base, c)], u[(r1, c)]);
            u[(base, c)] = gate[(0, 0)] * x0 + gate[(0, 1)] * x1;
            u[(r1, c)] = gate[(1, 0)] * x0 + gate[(1, 1)] * x1;
        }
    }
    Ok(())
}

fn brickwork_step<R: Rng + ?Sized>(
    u: &mut ComplexMatrix,
    n: usize,
    rng: &mut R,
    gate: &mut dyn FnMut(&mut R) -> Result<ComplexMatrix>,
) -> Result<()> {
    for offset in 0..2 {
        for [a, b] in brickwork_pairs(n, offset) {
            apply_two_qubit(u, &gate(rng)?, n, a, b)?;
        }
    }
    Ok(())
}

fn left_multiply(u: &mut ComplexMatrix, g: &ComplexMatrix) {
    *u = g.matmul(u);
}

/// A dense `2^n` unitary drawn from `k` steps of the walk.
pub fn sample_circuit<R: Rng + ?Sized>(spec: &WalkSpec, k: usize, rng: &mut R) -> Result<ComplexMatrix> {
    let n = spec.n;
    if n > MAX_SAMPLER_QUBITS {
        return Err(Error::CapExceeded { dim: 1 << n, cap: 1 << MAX_SAMPLER_QUBITS });
    }
    let mut u = ComplexMatrix::identity(1 << n);
    let haar4 = |r: &mut R| -> Result<ComplexMatrix> { Ok(sample_haar(4, r)) };
    let cl2 = |r: &mut R| -> Result<ComplexMatrix> { sample_clifford_unitary(2, r) };
    for _ in 0..k {
        match spec.kind {
            WalkKind::Local => {
                let i = rng.random_range(0..n);
                apply_two_qubit(&mut u, &sample_haar(4, rng), n, i, (i + 1) % n)?;
            }
            WalkKind::Brickwork => brickwork_step(&mut u, n, rng, &mut { haar4 })?,
            WalkKind::CliffordBrickwork => brickwork_step(&mut u, n, rng, &mut { cl2 })?,
            WalkKind::Sigma => {
                let clifford = |u: &mut ComplexMatrix, rng: &mut R| -> Result<()> {
                    match spec.inner_k {
                        None => {
                            if n > MAX_SYNTHESIS_QUBITS {
                                return Err(Error::CapExceeded { dim: 1 << n, cap: 1 << MAX_SYNTHESIS_QUBITS });
                            }
                            left_multiply(u, &sample_clifford_unitary(n, rng)?);
                        }
                        Some(inner) => {
                            for _ in 0..inner {
                                brickwork_step(u, n, rng, &mut { cl2 })?;
                            }
                        }
                    }
                    Ok(())
                };
                clifford(&mut u, rng)?;
                apply_one_qubit(&mut u, &sample_haar(2, rng), n, 0)?;
                clifford(&mut u, rng)?;
            }
        }
    }
    Ok(u)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FramePotentialEstimate {
    pub n: usize,
    pub t: usize,
    /// Walk steps per sample; `None` for the Haar reference.
    pub k: Option<usize>,
    pub samples: usize,
    pub mean: f64,
    pub stderr: f64,
}

impl FramePotentialEstimate {
    /// `|a - b| <= sigmas · sqrt(se_a² + se_b²)`
    pub fn agrees_with(&self, other: &FramePotentialEstimate, sigmas: f64) -> bool {
        let se = (self.stderr.powi(2) + other.stderr.powi(2)).sqrt();
        (self.mean - other.mean).abs() <= sigmas * se + 1e-12
    }
}

fn trace_power(u: &ComplexMatrix, v: &ComplexMatrix, t: usize) -> f64 {
    // Tr(U†V) = Σ conj(U_ij) V_ij
    let tr: C64 = u.data().iter().zip(v.data()).map(|(a, b)| a.conj() * b).sum();
    tr.norm_sqr().powi(t as i32)
}

/// `E|Tr(U†V)|^{2t}` over independent `k`-step circuits `U, V`.
pub fn frame_potential_mc<R: Rng + ?Sized>(spec: &WalkSpec, k: usize, samples: usize, rng: &mut R) -> Result<FramePotentialEstimate> {
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let values = (0..samples)
        .map(|_| {
            let u = sample_circuit(spec, k, rng)?;
            let v = sample_circuit(spec, k, rng)?;
            Ok(trace_power(&u, &v, spec.t))
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, stderr) = mean_and_stderr(&values);
    let stderr = if k == 0 { 0.0 } else { stderr };
    Ok(FramePotentialEstimate { n: spec.n, t: spec.t, k: Some(k), samples, mean, stderr })
}

/// `E|Tr U|^{2t}` for Haar-random `U` on `n` qubits.
pub fn frame_potential_haar_mc<R: Rng + ?Sized>(n: usize, t: usize, samples: usize, rng: &mut R) -> Result<FramePotentialEstimate> {
    if samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    if n > MAX_SAMPLER_QUBITS {
        return Err(Error::CapExceeded { dim: 1 << n, cap: 1 << MAX_SAMPLER_QUBITS });
    }
    let id = ComplexMatrix::identity(1 << n);
    let values: Vec<f64> = (0..samples).map(|_| trace_power(&id, &sample_haar(1 << n, rng), t)).collect();
    let (mean, stderr) = mean_and_stderr(&values);
    Ok(FramePotentialEstimate { n, t, k: None, samples, mean, stderr })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn embedding_matches_kron() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = sample_haar(4, &mut rng);
        let i2 = ComplexMatrix::identity(2);
        assert!(embed_two_qubit(&g, 2, 0, 1).unwrap().max_abs_diff(&g) < 1e-14);
        assert!(embed_two_qubit(&g, 3, 0, 1).unwrap().max_abs_diff(&g.kron(&i2)) < 1e-14);
        assert!(embed_two_qubit(&g, 3, 1, 2).unwrap().max_abs_diff(&i2.kron(&g)) < 1e-14);
        // reversed qubit order is the swap-conjugated gate
        let swap = ComplexMatrix::from_real_rows(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
        ]);
        let flipped = swap.matmul(&g).matmul(&swap);
        assert!(embed_two_qubit(&g, 2, 1, 0).unwrap().max_abs_diff(&flipped) < 1e-14);
        let mut u = ComplexMatrix::identity(8);
        let h = sample_haar(2, &mut rng);
        apply_one_qubit(&mut u, &h, 3, 2).unwrap();
        assert!(u.max_abs_diff(&ComplexMatrix::identity(4).kron(&h)) < 1e-14);
    }

    #[test]
    fn sampled_circuits_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for kind in WalkKind::ALL {
            let spec = WalkSpec::new(kind, 4, 2).unwrap();
            let u = sample_circuit(&spec, 3, &mut rng).unwrap();
            assert!(u.is_unitary(1e-10), "{kind}");
        }
    }

    #[test]
    fn zero_steps_give_the_full_frame_potential() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = WalkSpec::new(WalkKind::Local, 3, 2).unwrap();
        let est = frame_potential_mc(&spec, 0, 5, &mut rng).unwrap();
        assert!((est.mean - 8f64.powi(4)).abs() < 1e-6);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn haar_reference_near_t_factorial() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let est = frame_potential_haar_mc(3, 2, 4000, &mut rng).unwrap();
        assert!((est.mean - 2.0).abs() < 4.0 * est.stderr, "{est:?}");
    }
}
