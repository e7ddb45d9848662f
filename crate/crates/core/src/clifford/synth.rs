//! Dense unitaries from tableaux.

use super::tableau::CliffordTableau;
use crate::error::{Error, Result};
use crate::tensor::matrix::{ComplexMatrix, C64};
use crate::tensor::vector::{basis_vector, norm, scale};

/// Largest qubit count for dense synthesis.
pub const MAX_SYNTHESIS_QUBITS: usize = 4;

/// A unitary `U` with `U P U† = tableau(P)` for every Pauli `P`, fixed up to global phase.
///
/// Column 0 is the joint +1 eigenvector of the Z images; column `x` is
/// `Π_j X'_j^{x_j}` applied to it.
pub fn synthesize_unitary(tab: &CliffordTableau) -> Result<ComplexMatrix> {
    let n = tab.n();
    if n > MAX_SYNTHESIS_QUBITS {
        return Err(Error::CapExceeded { dim: 1 << n, cap: 1 << MAX_SYNTHESIS_QUBITS });
    }
    let dim = 1usize << n;
    let project = |mut psi: Vec<C64>| -> Vec<C64> {
        for j in 0..n {
            let zpsi = tab.image_of_z(j).apply_to_state(n, &psi);
            for (a, b) in psi.iter_mut().zip(zpsi) {
                *a = (*a + b) * 0.5;
            }
        }
        psi
    };
    // the stabilizer projector has rank 1, so some basis vector overlaps its range by >= 1/dim
    let mut psi0 = None;
    for b in 0..dim {
        let cand = project(basis_vector(dim, b));
        let nrm = norm(&cand);
        if nrm * nrm > 0.5 / dim as f64 {
            let mut v = cand;
            scale(C64::new(1.0 / nrm, 0.0), &mut v);
            psi0 = Some(v);
            break;
        }
    }
    let psi0 = psi0.ok_or_else(|| Error::Decomposition("stabilizer state not found".into()))?;
    let mut u = ComplexMatrix::zeros(dim, dim);
    for col in 0..dim {
        let mut v = psi0.clone();
        for j in 0..n {
            // qubit j is the (n-1-j)-th bit of the column index
            if (col >> (n - 1 - j)) & 1 == 1 {
                v = tab.image_of_x(j).apply_to_state(n, &v);
            }
        }
        u.set_column(col, &v);
    }
    Ok(u)
}

/// Largest deviation `|U P U† - tableau(P)|` over all `4^n` Hermitian Paulis.
pub fn conjugation_mismatch(tab: &CliffordTableau, u: &ComplexMatrix) -> f64 {
    let n = tab.n();
    let ud = u.adjoint();
    super::pauli::all_paulis(n)
        .iter()
        .map(|p| {
            let lhs = u.matmul(&p.matrix(n)).matmul(&ud);
            lhs.max_abs_diff(&tab.conjugate(p).matrix(n))
        })
        .fold(0.0, f64::max)
}

/// `min_φ |A - e^{iφ} B|_max` proxy: aligns phases on the largest entry of `B`.
pub fn equal_up_to_phase(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
    let (mut best, mut idx) = (0.0, 0);
    for (k, z) in b.data().iter().enumerate() {
        if z.norm() > best {
            best = z.norm();
            idx = k;
        }
    }
    if best == 0.0 {
        return a.max_abs() <= tol;
    }
    let ratio = a.data()[idx] / b.data()[idx];
    if (ratio.norm() - 1.0).abs() > tol {
        return false;
    }
    a.max_abs_diff(&b.scaled(ratio)) <= tol
}
