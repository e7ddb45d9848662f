//! Pauli operators `i^k X^x Z^z` on up to 64 qubits, stored as bit masks.

use serde::{Deserialize, Serialize};

use crate::tensor::matrix::{ComplexMatrix, C64, ZERO};

/// `i^phase · X^x · Z^z`, where bit `j` of `x`/`z` refers to qubit `j`.
///
/// Qubit 0 is the most significant tensor factor of the dense representation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pauli {
    pub x: u64,
    pub z: u64,
    pub phase: u8,
}

const I_POWERS: [C64; 4] = [
    C64::new(1.0, 0.0),
    C64::new(0.0, 1.0),
    C64::new(-1.0, 0.0),
    C64::new(0.0, -1.0),
];

fn popcount(v: u64) -> u8 {
    (v.count_ones() % 4) as u8
}

/// Symplectic form `<(x1,z1),(x2,z2)> = x1·z2 + z1·x2 mod 2`.
pub fn symplectic_product(x1: u64, z1: u64, x2: u64, z2: u64) -> bool {
    (((x1 & z2) ^ (z1 & x2)).count_ones() & 1) == 1
}

/// Index of the dense basis vector for a qubit bit mask and back (qubit 0 is the top bit).
pub fn mask_to_index(mask: u64, n: usize) -> usize {
    let mut idx = 0usize;
    for j in 0..n {
        if (mask >> j) & 1 == 1 {
            idx |= 1 << (n - 1 - j);
        }
    }
    idx
}

pub fn index_to_mask(index: usize, n: usize) -> u64 {
    let mut m = 0u64;
    for j in 0..n {
        if (index >> (n - 1 - j)) & 1 == 1 {
            m |= 1 << j;
        }
    }
    m
}

impl Pauli {
    pub const IDENTITY: Pauli = Pauli { x: 0, z: 0, phase: 0 };

    pub fn new(x: u64, z: u64, phase: u8) -> Self {
        Self { x, z, phase: phase % 4 }
    }

    /// The Hermitian Pauli with the given support: `i^{|x ∧ z|} X^x Z^z` (so `Y = iXZ`).
    pub fn hermitian(x: u64, z: u64) -> Self {
        Self::new(x, z, popcount(x & z))
    }

    pub fn x_on(j: usize) -> Self {
        Self::hermitian(1 << j, 0)
    }

    pub fn z_on(j: usize) -> Self {
        Self::hermitian(0, 1 << j)
    }

    pub fn y_on(j: usize) -> Self {
        Self::hermitian(1 << j, 1 << j)
    }

    pub fn is_identity_up_to_phase(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// `self · other`, using `Z^b X^c = (-1)^{b·c} X^c Z^b`.
    pub fn mul(&self, other: &Pauli) -> Pauli {
        let swap = 2 * popcount(self.z & other.x);
        Pauli::new(self.x ^ other.x, self.z ^ other.z, self.phase + other.phase + swap)
    }

    pub fn commutes_with(&self, other: &Pauli) -> bool {
        !symplectic_product(self.x, self.z, other.x, other.z)
    }

    pub fn is_hermitian(&self) -> bool {
        (self.phase + 4 - popcount(self.x & self.z)) % 2 == 0
    }

    /// Sign `s` with `self = (-1)^s · hermitian(x, z)`; `None` if `self` is anti-Hermitian.
    pub fn hermitian_sign(&self) -> Option<bool> {
        let rel = (self.phase + 4 - popcount(self.x & self.z)) % 4;
        match rel {
            0 => Some(false),
            2 => Some(true),
            _ => None,
        }
    }

    /// `(i^k X^x Z^z)|m> = i^k (-1)^{|z ∧ m|} |m ⊕ x>` applied to a dense state.
    pub fn apply_to_state(&self, n: usize, psi: &[C64]) -> Vec<C64> {
        let dim = 1usize << n;
        let mut out = vec![ZERO; dim];
        for (idx, amp) in psi.iter().enumerate() {
            if *amp == ZERO {
                continue;
            }
            let m = index_to_mask(idx, n);
            let sign = if (self.z & m).count_ones() % 2 == 1 { 2 } else { 0 };
            let target = mask_to_index(m ^ self.x, n);
            out[target] += I_POWERS[((self.phase + sign) % 4) as usize] * amp;
        }
        out
    }

    pub fn matrix(&self, n: usize) -> ComplexMatrix {
        let dim = 1usize << n;
        let mut m = ComplexMatrix::zeros(dim, dim);
        for col in 0..dim {
            let mask = index_to_mask(col, n);
            let sign = if (self.z & mask).count_ones() % 2 == 1 { 2 } else { 0 };
            let row = mask_to_index(mask ^ self.x, n);
            m[(row, col)] = I_POWERS[((self.phase + sign) % 4) as usize];
        }
        m
    }

    /// Label such as `-XIZ`, qubit 0 first; only for Hermitian Paulis.
    pub fn label(&self, n: usize) -> String {
        let mut s = String::new();
        match self.hermitian_sign() {
            Some(true) => s.push('-'),
            Some(false) => s.push('+'),
            None => s.push('?'),
        }
        for j in 0..n {
            let c = match ((self.x >> j) & 1, (self.z >> j) & 1) {
                (0, 0) => 'I',
                (1, 0) => 'X',
                (0, 1) => 'Z',
                _ => 'Y',
            };
            s.push(c);
        }
        s
    }

    /// Parses the output of [`Pauli::label`].
    pub fn parse_label(label: &str) -> Option<(Pauli, usize)> {
        let mut chars = label.chars();
        let negative = match chars.next()? {
            '+' => false,
            '-' => true,
            _ => return None,
        };
        let (mut x, mut z) = (0u64, 0u64);
        let mut n = 0;
        for (j, c) in chars.enumerate() {
            match c {
                'I' => {}
                'X' => x |= 1 << j,
                'Z' => z |= 1 << j,
                'Y' => {
                    x |= 1 << j;
                    z |= 1 << j;
                }
                _ => return None,
            }
            n = j + 1;
        }
        let mut p = Pauli::hermitian(x, z);
        if negative {
            p.phase = (p.phase + 2) % 4;
        }
        Some((p, n))
    }
}

/// All `4^n` Hermitian Paulis with `+` sign, identity first.
pub fn all_paulis(n: usize) -> Vec<Pauli> {
    let mut out = Vec::with_capacity(1 << (2 * n));
    for z in 0..(1u64 << n) {
        for x in 0..(1u64 << n) {
            out.push(Pauli::hermitian(x, z));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_qubit_matrices() {
        let y = Pauli::y_on(0).matrix(1);
        assert_eq!(y[(0, 1)], C64::new(0.0, -1.0));
        assert_eq!(y[(1, 0)], C64::new(0.0, 1.0));
        let z = Pauli::z_on(0).matrix(1);
        assert_eq!(z[(1, 1)], C64::new(-1.0, 0.0));
    }

    #[test]
    fn multiplication_matches_dense() {
        let n = 2;
        for a in all_paulis(n) {
            for b in all_paulis(n) {
                let prod = a.mul(&b).matrix(n);
                let dense = a.matrix(n).matmul(&b.matrix(n));
                assert!(prod.max_abs_diff(&dense) < 1e-15);
                let comm = a.matrix(n).matmul(&b.matrix(n)).max_abs_diff(&b.matrix(n).matmul(&a.matrix(n))) < 1e-15;
                assert_eq!(comm, a.commutes_with(&b));
            }
        }
    }

    #[test]
    fn hermitian_paulis_are_hermitian() {
        for p in all_paulis(3) {
            assert!(p.is_hermitian());
            assert!(p.matrix(3).is_hermitian(0.0));
            assert_eq!(p.hermitian_sign(), Some(false));
        }
        assert_eq!(Pauli::new(1, 0, 1).hermitian_sign(), None);
    }

    #[test]
    fn state_action_matches_matrix() {
        let n = 3;
        let psi: Vec<C64> = (0..8).map(|i| C64::new(i as f64, 1.0 - i as f64)).collect();
        for p in all_paulis(n).into_iter().step_by(5) {
            let a = p.apply_to_state(n, &psi);
            let b = p.matrix(n).matvec(&psi);
            assert!(crate::tensor::vector::distance(&a, &b) < 1e-12);
        }
    }

    #[test]
    fn labels_round_trip() {
        let p = Pauli::x_on(0).mul(&Pauli::y_on(2));
        let label = p.label(3);
        assert_eq!(label, "+XIY");
        let (q, n) = Pauli::parse_label(&label).unwrap();
        assert_eq!((q, n), (p, 3));
        let (m, _) = Pauli::parse_label("-Z").unwrap();
        assert_eq!(m.matrix(1)[(0, 0)], C64::new(-1.0, 0.0));
    }
}
