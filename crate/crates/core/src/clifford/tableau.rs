//! Stabilizer tableaux: a Clifford unitary modulo global phase, recorded by the images of
//! `X_j` and `Z_j` under conjugation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::pauli::{symplectic_product, Pauli};
use crate::error::{Error, Result};

/// Largest qubit count whose group is enumerated exhaustively.
pub const MAX_ENUMERATION_QUBITS: usize = 2;

/// Clifford unitary modulo global phase.
///
/// Row `j < n` is the image of `X_j`, row `n + j` the image of `Z_j`. Each image is a
/// Hermitian Pauli `(-1)^sign · hermitian(x, z)`, so one sign bit per row suffices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CliffordTableau {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    signs: Vec<bool>,
}

/// Vector in `F_2^{2n}` as an `(x, z)` pair of masks.
type SymVec = (u64, u64);

fn sym(a: SymVec, b: SymVec) -> bool {
    symplectic_product(a.0, a.1, b.0, b.1)
}

fn xor(a: SymVec, b: SymVec) -> SymVec {
    (a.0 ^ b.0, a.1 ^ b.1)
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > 32 {
        return Err(Error::InvalidParameter(format!("qubit count {n} outside 1..=32")));
    }
    Ok(())
}

impl CliffordTableau {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            x: (0..n).map(|j| 1u64 << j).collect::<Vec<_>>().into_iter().chain(std::iter::repeat_n(0, n)).collect(),
            z: std::iter::repeat_n(0, n).chain((0..n).map(|j| 1u64 << j)).collect(),
            signs: vec![false; 2 * n],
        }
    }

    /// Builds a tableau from row images; fails if they do not form a symplectic basis.
    pub fn from_rows(n: usize, rows: &[Pauli]) -> Result<Self> {
        check_n(n)?;
        if rows.len() != 2 * n {
            return Err(Error::Shape(format!("tableau on {n} qubits needs {} rows, got {}", 2 * n, rows.len())));
        }
        let mut signs = Vec::with_capacity(2 * n);
        for (i, r) in rows.iter().enumerate() {
            let s = r
                .hermitian_sign()
                .ok_or_else(|| Error::InvalidParameter(format!("row {i} is not Hermitian")))?;
            signs.push(s);
        }
        let tab = Self {
            n,
            x: rows.iter().map(|r| r.x).collect(),
            z: rows.iter().map(|r| r.z).collect(),
            signs,
        };
        if !tab.is_symplectic() {
            return Err(Error::InvalidParameter("rows violate the symplectic condition".into()));
        }
        Ok(tab)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn signs(&self) -> &[bool] {
        &self.signs
    }

    /// Image of the `i`-th generator (X rows first, then Z rows).
    pub fn row(&self, i: usize) -> Pauli {
        let mut p = Pauli::hermitian(self.x[i], self.z[i]);
        if self.signs[i] {
            p.phase = (p.phase + 2) % 4;
        }
        p
    }

    pub fn image_of_x(&self, j: usize) -> Pauli {
        self.row(j)
    }

    pub fn image_of_z(&self, j: usize) -> Pauli {
        self.row(self.n + j)
    }

    /// `S` as a `2n x 2n` bit matrix; row `i` is `(x bits, z bits)` of generator image `i`.
    pub fn symplectic_matrix(&self) -> Vec<Vec<u8>> {
        let n = self.n;
        (0..2 * n)
            .map(|i| {
                (0..n)
                    .map(|j| ((self.x[i] >> j) & 1) as u8)
                    .chain((0..n).map(|j| ((self.z[i] >> j) & 1) as u8))
                    .collect()
            })
            .collect()
    }

    /// `S J Sᵀ = J`: generator images commute exactly as the generators do.
    pub fn is_symplectic(&self) -> bool {
        let n = self.n;
        for i in 0..2 * n {
            for j in 0..2 * n {
                let expected = i + n == j || j + n == i;
                if sym((self.x[i], self.z[i]), (self.x[j], self.z[j])) != expected {
                    return false;
                }
            }
        }
        true
    }

    /// `C P C†`.
    pub fn conjugate(&self, p: &Pauli) -> Pauli {
        let mut out = Pauli::new(0, 0, p.phase);
        for j in 0..self.n {
            if (p.x >> j) & 1 == 1 {
                out = out.mul(&self.row(j));
            }
        }
        for j in 0..self.n {
            if (p.z >> j) & 1 == 1 {
                out = out.mul(&self.row(self.n + j));
            }
        }
        out
    }

    /// `self ∘ other`, the Clifford that applies `other` first.
    pub fn compose(&self, other: &CliffordTableau) -> Result<CliffordTableau> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { site: 0, expected: self.n, found: other.n });
        }
        let rows: Vec<Pauli> = (0..2 * self.n).map(|i| self.conjugate(&other.row(i))).collect();
        Ok(Self::from_rows_unchecked(self.n, &rows))
    }

    fn from_rows_unchecked(n: usize, rows: &[Pauli]) -> Self {
        Self {
            n,
            x: rows.iter().map(|r| r.x).collect(),
            z: rows.iter().map(|r| r.z).collect(),
            signs: rows.iter().map(|r| r.hermitian_sign().unwrap_or(false)).collect(),
        }
    }

    pub fn inverse(&self) -> CliffordTableau {
        let n = self.n;
        // S^{-1} = J Sᵀ J: generator j enters the preimage of generator i with
        // coefficient S[partner(j)][partner(i)].
        let partner = |i: usize| if i < n { i + n } else { i - n };
        let bit = |row: usize, col: usize| -> bool {
            if col < n {
                (self.x[row] >> col) & 1 == 1
            } else {
                (self.z[row] >> (col - n)) & 1 == 1
            }
        };
        let rows: Vec<Pauli> = (0..2 * n)
            .map(|i| {
                let (mut x, mut z) = (0u64, 0u64);
                for j in 0..2 * n {
                    if bit(partner(j), partner(i)) {
                        if j < n {
                            x |= 1 << j;
                        } else {
                            z |= 1 << (j - n);
                        }
                    }
                }
                Pauli::hermitian(x, z)
            })
            .collect();
        let unsigned = Self::from_rows_unchecked(n, &rows);
        // C(C0^{-1}(g)) = ±g; that sign is the one the inverse must carry
        let check = self.compose(&unsigned).expect("same size");
        Self { signs: check.signs, ..unsigned }
    }

    /// Places an `m`-qubit tableau on qubits `sites` of an `n`-qubit register.
    pub fn embed(&self, n: usize, sites: &[usize]) -> Result<CliffordTableau> {
        check_n(n)?;
        if sites.len() != self.n || sites.iter().any(|&s| s >= n) {
            return Err(Error::InvalidParameter(format!(
                "cannot place {} qubits on sites {sites:?} of {n}",
                self.n
            )));
        }
        let spread = |mask: u64| -> u64 {
            let mut out = 0;
            for (a, &s) in sites.iter().enumerate() {
                if (mask >> a) & 1 == 1 {
                    out |= 1 << s;
                }
            }
            out
        };
        let mut tab = Self::identity(n);
        for (a, &s) in sites.iter().enumerate() {
            for (src, dst) in [(a, s), (self.n + a, n + s)] {
                tab.x[dst] = spread(self.x[src]);
                tab.z[dst] = spread(self.z[src]);
                tab.signs[dst] = self.signs[src];
            }
        }
        Ok(tab)
    }

    pub fn hadamard(n: usize, q: usize) -> Self {
        let mut t = Self::identity(n);
        t.x.swap(q, n + q);
        t.z.swap(q, n + q);
        t
    }

    /// `S = diag(1, i)`: `X → Y`, `Z → Z`.
    pub fn phase_gate(n: usize, q: usize) -> Self {
        let mut t = Self::identity(n);
        t.z[q] |= 1 << q;
        t
    }

    pub fn cnot(n: usize, control: usize, target: usize) -> Self {
        let mut t = Self::identity(n);
        t.x[control] |= 1 << target;
        t.z[n + target] |= 1 << control;
        t
    }

    /// Pauli `P` as a Clifford (`Q → P Q P`).
    pub fn pauli(n: usize, p: &Pauli) -> Self {
        let mut t = Self::identity(n);
        for i in 0..2 * n {
            let g = t.row(i);
            t.signs[i] = !p.commutes_with(&g);
        }
        t
    }

    /// `n` as a byte, then the `2n x 2n` symplectic bits row-major, then `2n` sign bits,
    /// each bit stream packed LSB-first.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bits = Vec::with_capacity(4 * self.n * self.n + 2 * self.n);
        for row in self.symplectic_matrix() {
            bits.extend(row.into_iter().map(|b| b == 1));
        }
        bits.extend(self.signs.iter().copied());
        let mut out = vec![self.n as u8];
        out.extend(pack(&bits));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (&n, rest) = bytes
            .split_first()
            .ok_or_else(|| Error::Serialization("empty tableau record".into()))?;
        let n = n as usize;
        check_n(n)?;
        let nbits = 4 * n * n + 2 * n;
        if rest.len() != nbits.div_ceil(8) {
            return Err(Error::Serialization(format!(
                "tableau on {n} qubits needs {} payload bytes, got {}",
                nbits.div_ceil(8),
                rest.len()
            )));
        }
        let bit = |k: usize| (rest[k / 8] >> (k % 8)) & 1 == 1;
        let mut rows = Vec::with_capacity(2 * n);
        for i in 0..2 * n {
            let (mut x, mut z) = (0u64, 0u64);
            for j in 0..n {
                if bit(i * 2 * n + j) {
                    x |= 1 << j;
                }
                if bit(i * 2 * n + n + j) {
                    z |= 1 << j;
                }
            }
            let mut p = Pauli::hermitian(x, z);
            if bit(4 * n * n + i) {
                p.phase = (p.phase + 2) % 4;
            }
            rows.push(p);
        }
        Self::from_rows(n, &rows).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        let debug = TableauJson {
            n: self.n,
            x_images: (0..self.n).map(|j| self.image_of_x(j).label(self.n)).collect(),
            z_images: (0..self.n).map(|j| self.image_of_z(j).label(self.n)).collect(),
        };
        Ok(serde_json::to_string(&debug)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let debug: TableauJson = serde_json::from_str(s)?;
        let mut rows = Vec::with_capacity(2 * debug.n);
        for label in debug.x_images.iter().chain(&debug.z_images) {
            let (p, len) = Pauli::parse_label(label)
                .ok_or_else(|| Error::Serialization(format!("bad Pauli label {label:?}")))?;
            if len != debug.n {
                return Err(Error::Serialization(format!("label {label:?} has length {len}, expected {}", debug.n)));
            }
            rows.push(p);
        }
        Self::from_rows(debug.n, &rows)
    }
}

fn pack(bits: &[bool]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (k, &b) in bits.iter().enumerate() {
        if b {
            out[k / 8] |= 1 << (k % 8);
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
struct TableauJson {
    n: usize,
    x_images: Vec<String>,
    z_images: Vec<String>,
}

fn random_in_span<R: Rng + ?Sized>(basis: &[SymVec], rng: &mut R) -> SymVec {
    let mut v = (0, 0);
    for &b in basis {
        if rng.random::<bool>() {
            v = xor(v, b);
        }
    }
    v
}

/// Reduces a spanning list to an independent one (XOR basis over the 2n bits).
fn independent(vectors: impl IntoIterator<Item = SymVec>, n: usize) -> Vec<SymVec> {
    let key = |v: SymVec| -> u128 { (v.0 as u128) | ((v.1 as u128) << n) };
    let mut by_top: Vec<Option<SymVec>> = vec![None; 2 * n];
    for mut v in vectors {
        while key(v) != 0 {
            let top = 127 - key(v).leading_zeros() as usize;
            match by_top[top] {
                Some(b) => v = xor(v, b),
                None => {
                    by_top[top] = Some(v);
                    break;
                }
            }
        }
    }
    by_top.into_iter().flatten().collect()
}

/// Uniformly random Clifford modulo global phase.
///
/// Picks a symplectic basis pair by pair: `v` uniform over nonzero vectors of the current
/// space `W`, `w` uniform over `{w ∈ W : <v,w> = 1}`, then `W` shrinks to the symplectic
/// complement of `span(v, w)`. Signs are independent fair bits.
pub fn sample_clifford<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<CliffordTableau> {
    check_n(n)?;
    let mut space: Vec<SymVec> = (0..n).map(|j| (1u64 << j, 0)).chain((0..n).map(|j| (0, 1u64 << j))).collect();
    let mut x = vec![0u64; 2 * n];
    let mut z = vec![0u64; 2 * n];
    for j in 0..n {
        let v = loop {
            let v = random_in_span(&space, rng);
            if v != (0, 0) {
                break v;
            }
        };
        let w = loop {
            let w = random_in_span(&space, rng);
            if sym(v, w) {
                break w;
            }
        };
        x[j] = v.0;
        z[j] = v.1;
        x[n + j] = w.0;
        z[n + j] = w.1;
        let projected: Vec<SymVec> = space
            .iter()
            .map(|&u| {
                let mut u2 = u;
                if sym(u, w) {
                    u2 = xor(u2, v);
                }
                if sym(u, v) {
                    u2 = xor(u2, w);
                }
                u2
            })
            .collect();
        space = independent(projected, n);
        debug_assert_eq!(space.len(), 2 * (n - j - 1));
    }
    let signs = (0..2 * n).map(|_| rng.random::<bool>()).collect();
    Ok(CliffordTableau { n, x, z, signs })
}

/// Every Clifford on `n ≤ 2` qubits modulo global phase, in a fixed order.
pub fn enumerate_clifford(n: usize) -> Result<Vec<CliffordTableau>> {
    if n == 0 || n > MAX_ENUMERATION_QUBITS {
        return Err(Error::InvalidParameter(format!(
            "exhaustive enumeration supports 1..={MAX_ENUMERATION_QUBITS} qubits, got {n}"
        )));
    }
    let per_row = 1u64 << (2 * n);
    let split = |v: u64| -> SymVec { (v & ((1 << n) - 1), v >> n) };
    let mut symplectic: Vec<Vec<SymVec>> = Vec::new();
    let mut partial: Vec<SymVec> = Vec::with_capacity(2 * n);
    fn extend(
        partial: &mut Vec<SymVec>,
        n: usize,
        per_row: u64,
        split: &dyn Fn(u64) -> SymVec,
        out: &mut Vec<Vec<SymVec>>,
    ) {
        let i = partial.len();
        if i == 2 * n {
            out.push(partial.clone());
            return;
        }
        for v in 1..per_row {
            let cand = split(v);
            let ok = partial.iter().enumerate().all(|(j, &r)| sym(r, cand) == (j + n == i || i + n == j));
            if ok {
                partial.push(cand);
                extend(partial, n, per_row, split, out);
                partial.pop();
            }
        }
    }
    extend(&mut partial, n, per_row, &split, &mut symplectic);
    let mut out = Vec::with_capacity(symplectic.len() << (2 * n));
    for rows in &symplectic {
        for sign_bits in 0u32..(1 << (2 * n)) {
            out.push(CliffordTableau {
                n,
                x: rows.iter().map(|r| r.0).collect(),
                z: rows.iter().map(|r| r.1).collect(),
                signs: (0..2 * n).map(|k| (sign_bits >> k) & 1 == 1).collect(),
            });
        }
    }
    Ok(out)
}

/// One step of the brickwork generator walk: two layers of independent uniform 2-qubit
/// Cliffords. Layer 1 pairs `(0,1), (2,3), ...`, layer 2 pairs `(1,2), ..., (n-1,0)`.
pub fn generator_walk_step<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<(CliffordTableau, CliffordTableau)> {
    if n < 2 || n % 2 == 1 {
        return Err(Error::InvalidParameter(format!("brickwork layers need an even qubit count >= 2, got {n}")));
    }
    let mut layers = [CliffordTableau::identity(n), CliffordTableau::identity(n)];
    for (offset, layer) in layers.iter_mut().enumerate() {
        if n == 2 && offset == 1 {
            *layer = sample_clifford(2, rng)?.embed(2, &[0, 1])?;
            continue;
        }
        for pair in brickwork_pairs(n, offset) {
            let g = sample_clifford(2, rng)?.embed(n, &pair)?;
            *layer = g.compose(layer)?;
        }
    }
    let [a, b] = layers;
    Ok((a, b))
}

/// Qubit pairs of brickwork layer `offset` (0 or 1) on a ring of `n` qubits.
pub fn brickwork_pairs(n: usize, offset: usize) -> Vec<[usize; 2]> {
    if n == 2 {
        return vec![[0, 1]];
    }
    (0..n / 2)
        .map(|k| {
            let a = (2 * k + offset) % n;
            [a, (a + 1) % n]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::pauli::all_paulis;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    #[test]
    fn identity_is_symplectic_and_neutral() {
        let id = CliffordTableau::identity(3);
        assert!(id.is_symplectic());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = sample_clifford(3, &mut rng).unwrap();
        assert_eq!(id.compose(&c).unwrap(), c);
        assert_eq!(c.compose(&id).unwrap(), c);
    }

    #[test]
    fn group_orders() {
        assert_eq!(enumerate_clifford(1).unwrap().len(), 24);
        let two = enumerate_clifford(2).unwrap();
        assert_eq!(two.len(), 11520);
        assert_eq!(two.len() / 16, 720);
        assert!(enumerate_clifford(3).is_err());
    }

    #[test]
    fn enumerated_elements_preserve_paulis() {
        for c in enumerate_clifford(2).unwrap().iter().step_by(7) {
            assert!(c.is_symplectic());
            for p in all_paulis(2).into_iter().skip(1) {
                let q = c.conjugate(&p);
                assert!(q.is_hermitian());
                assert!(!q.is_identity_up_to_phase());
            }
        }
    }

    #[test]
    fn samples_are_symplectic() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 1..7 {
            for _ in 0..20 {
                assert!(sample_clifford(n, &mut rng).unwrap().is_symplectic());
            }
        }
    }

    #[test]
    fn single_qubit_sampling_hits_all_classes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts: HashMap<CliffordTableau, usize> = HashMap::new();
        let samples = 24_000;
        for _ in 0..samples {
            *counts.entry(sample_clifford(1, &mut rng).unwrap()).or_default() += 1;
        }
        assert_eq!(counts.len(), 24);
        let expected = samples as f64 / 24.0;
        let chi2: f64 = counts.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 23 degrees of freedom; 0.999 quantile ~ 49.7
        assert!(chi2 < 49.7, "chi2 = {chi2}");
    }

    #[test]
    fn inverse_composes_to_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 1..5 {
            for _ in 0..10 {
                let c = sample_clifford(n, &mut rng).unwrap();
                let inv = c.inverse();
                assert_eq!(c.compose(&inv).unwrap(), CliffordTableau::identity(n));
                assert_eq!(inv.compose(&c).unwrap(), CliffordTableau::identity(n));
            }
        }
    }

    #[test]
    fn composition_is_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let [a, b, c] = [0; 3].map(|_| sample_clifford(3, &mut rng).unwrap());
            let left = a.compose(&b).unwrap().compose(&c).unwrap();
            let right = a.compose(&b.compose(&c).unwrap()).unwrap();
            assert_eq!(left, right);
        }
    }

    #[test]
    fn gate_tableaux() {
        let h = CliffordTableau::hadamard(1, 0);
        assert_eq!(h.conjugate(&Pauli::x_on(0)), Pauli::z_on(0));
        let s = CliffordTableau::phase_gate(1, 0);
        assert_eq!(s.conjugate(&Pauli::x_on(0)), Pauli::y_on(0));
        let cx = CliffordTableau::cnot(2, 0, 1);
        assert_eq!(cx.conjugate(&Pauli::z_on(1)), Pauli::hermitian(0, 0b11));
        for t in [h, s, cx] {
            assert!(t.is_symplectic());
        }
    }

    #[test]
    fn serialization_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for n in 1..6 {
            let c = sample_clifford(n, &mut rng).unwrap();
            assert_eq!(CliffordTableau::from_bytes(&c.to_bytes()).unwrap(), c);
            assert_eq!(CliffordTableau::from_json(&c.to_json().unwrap()).unwrap(), c);
        }
        assert!(CliffordTableau::from_bytes(&[2, 0]).is_err());
        // all-zero symplectic part is rejected
        assert!(CliffordTableau::from_bytes(&[1, 0]).is_err());
    }

    #[test]
    fn embedding_acts_locally() {
        let cx = CliffordTableau::cnot(2, 0, 1).embed(4, &[3, 0]).unwrap();
        assert_eq!(cx.conjugate(&Pauli::x_on(3)), Pauli::hermitian(0b1001, 0));
        assert_eq!(cx.conjugate(&Pauli::x_on(1)), Pauli::x_on(1));
        assert!(cx.is_symplectic());
    }

    #[test]
    fn brickwork_layer_pairs() {
        assert_eq!(brickwork_pairs(4, 0), vec![[0, 1], [2, 3]]);
        assert_eq!(brickwork_pairs(4, 1), vec![[1, 2], [3, 0]]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (a, b) = generator_walk_step(4, &mut rng).unwrap();
        assert!(a.is_symplectic() && b.is_symplectic());
        // layer 1 never couples qubit 1 to qubit 2
        for j in [1usize, 2] {
            let img = a.image_of_x(j);
            let other = if j == 1 { 2 } else { 1 };
            assert_eq!((img.x | img.z) >> other & 1, 0);
        }
        assert!(generator_walk_step(3, &mut rng).is_err());
    }
}
