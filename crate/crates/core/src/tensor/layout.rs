//! Index bookkeeping for tensor products: vectorization, axis permutation, partial trace.

use super::matrix::{ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};

/// Row-major flattening, so `vec(|i><j|) = |i> ⊗ |j>`.
pub fn vectorize(a: &ComplexMatrix) -> Result<Vec<C64>> {
    if !a.is_square() {
        return Err(Error::Shape(format!(
            "vectorize expects a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    Ok(a.data().to_vec())
}

pub fn devectorize(v: &[C64]) -> Result<ComplexMatrix> {
    let d = (v.len() as f64).sqrt().round() as usize;
    if d * d != v.len() {
        return Err(Error::Shape(format!("length {} is not a perfect square", v.len())));
    }
    ComplexMatrix::from_vec(d, d, v.to_vec())
}

/// Row-major strides for a tensor with the given axis dimensions (axis 0 most significant).
pub fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

/// Splits a flat index into per-axis digits.
pub fn unravel(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; dims.len()];
    for i in (0..dims.len()).rev() {
        digits[i] = index % dims[i];
        index /= dims[i];
    }
    digits
}

/// Reorders tensor axes: output axis `k` is input axis `perm[k]`.
pub fn permute_axes(x: &[C64], dims: &[usize], perm: &[usize]) -> Result<Vec<C64>> {
    let total: usize = dims.iter().product();
    if total != x.len() || perm.len() != dims.len() {
        return Err(Error::Shape(format!(
            "axis permutation over dims {dims:?} applied to length {}",
            x.len()
        )));
    }
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || seen[p] {
            return Err(Error::Shape(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    let in_strides = strides(dims);
    let out_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    // stride in the input of each output axis
    let gather: Vec<usize> = perm.iter().map(|&p| in_strides[p]).collect();
    let mut out = vec![ZERO; total];
    let mut digits = vec![0usize; dims.len()];
    let mut src = 0usize;
    for slot in out.iter_mut() {
        *slot = x[src];
        // odometer increment over output digits
        for ax in (0..out_dims.len()).rev() {
            digits[ax] += 1;
            src += gather[ax];
            if digits[ax] < out_dims[ax] {
                break;
            }
            src -= gather[ax] * out_dims[ax];
            digits[ax] = 0;
        }
    }
    Ok(out)
}

/// Applies the `d x d` matrix `m` to axis `axis` of a tensor with shape `dims`.
pub fn apply_on_axis(x: &[C64], dims: &[usize], axis: usize, m: &ComplexMatrix) -> Vec<C64> {
    let d = dims[axis];
    debug_assert_eq!(m.rows(), d);
    let right: usize = dims[axis + 1..].iter().product();
    let left = x.len() / (d * right);
    let mut out = vec![ZERO; x.len()];
    for l in 0..left {
        let base = l * d * right;
        for i in 0..d {
            let dst = base + i * right;
            for k in 0..d {
                let a = m[(i, k)];
                if a == ZERO {
                    continue;
                }
                let src = base + k * right;
                for r in 0..right {
                    out[dst + r] += a * x[src + r];
                }
            }
        }
    }
    out
}

/// Same axis permutation applied to rows and columns of a square matrix.
pub fn permute_matrix_axes(a: &ComplexMatrix, dims: &[usize], perm: &[usize]) -> Result<ComplexMatrix> {
    let n = a.rows();
    let mut row_dims = dims.to_vec();
    row_dims.extend_from_slice(dims);
    let k = dims.len();
    let mut full_perm: Vec<usize> = perm.to_vec();
    full_perm.extend(perm.iter().map(|p| p + k));
    let data = permute_axes(a.data(), &row_dims, &full_perm)?;
    ComplexMatrix::from_vec(n, n, data)
}

/// Partial trace over every subsystem not listed in `keep` (0-based, any order; the
/// result keeps the kept subsystems in increasing order).
pub fn partial_trace(a: &ComplexMatrix, keep: &[usize], dims: &[usize]) -> Result<ComplexMatrix> {
    let total: usize = dims.iter().product();
    if !a.is_square() || a.rows() != total {
        return Err(Error::Shape(format!(
            "partial trace over dims {dims:?} needs a {total}x{total} matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.iter().any(|&k| k >= dims.len()) {
        return Err(Error::Shape(format!("keep set {keep:?} out of range for {} subsystems", dims.len())));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !kept.contains(i)).collect();
    let st = strides(dims);
    let kept_dims: Vec<usize> = kept.iter().map(|&i| dims[i]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&i| dims[i]).collect();
    let dk: usize = kept_dims.iter().product();
    let dt: usize = traced_dims.iter().product();
    let offset = |axes: &[usize], digits: &[usize]| -> usize {
        axes.iter().zip(digits).map(|(&ax, &d)| st[ax] * d).sum()
    };
    let kept_off: Vec<usize> = (0..dk).map(|i| offset(&kept, &unravel(i, &kept_dims))).collect();
    let traced_off: Vec<usize> = (0..dt).map(|i| offset(&traced, &unravel(i, &traced_dims))).collect();
    let mut out = ComplexMatrix::zeros(dk, dk);
    for i in 0..dk {
        for j in 0..dk {
            let mut acc = ZERO;
            for &t in &traced_off {
                acc += a[(kept_off[i] + t, kept_off[j] + t)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn vec_of_ket_bra_is_tensor_product() {
        let mut e01 = ComplexMatrix::zeros(2, 2);
        e01[(0, 1)] = C64::new(1.0, 0.0);
        let v = vectorize(&e01).unwrap();
        assert_eq!(v[1], C64::new(1.0, 0.0));
        assert_eq!(v.iter().filter(|z| z.norm() > 0.0).count(), 1);
    }

    #[test]
    fn vec_identity_normalized() {
        let v = vectorize(&ComplexMatrix::identity(2)).unwrap();
        let n: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!((n / 2f64.sqrt() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn devectorize_inverts_vectorize() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = ComplexMatrix::ginibre(3, 3, &mut rng);
        assert_eq!(devectorize(&vectorize(&a).unwrap()).unwrap(), a);
        assert!(vectorize(&ComplexMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn vec_inner_product_is_hilbert_schmidt() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let a = ComplexMatrix::ginibre(4, 4, &mut rng);
            let b = ComplexMatrix::ginibre(4, 4, &mut rng);
            let lhs = super::super::vector::dot(&vectorize(&a).unwrap(), &vectorize(&b).unwrap());
            let rhs = a.adjoint().matmul(&b).trace();
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn permute_axes_swaps_kron_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = super::super::vector::random_vector(2, &mut rng);
        let b = super::super::vector::random_vector(3, &mut rng);
        let ab = super::super::vector::kron_vec(&a, &b);
        let ba = super::super::vector::kron_vec(&b, &a);
        let swapped = permute_axes(&ab, &[2, 3], &[1, 0]).unwrap();
        assert!(super::super::vector::distance(&swapped, &ba) < 1e-15);
    }

    #[test]
    fn partial_trace_of_identity() {
        for n in 2..5 {
            let dims = vec![2; n];
            let id = ComplexMatrix::identity(1 << n);
            let r = partial_trace(&id, &[0], &dims).unwrap();
            let expected = ComplexMatrix::identity(2).scaled_real((1 << (n - 1)) as f64);
            assert!(r.max_abs_diff(&expected) < 1e-15);
        }
    }

    #[test]
    fn partial_trace_of_product_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rho = ComplexMatrix::random_hermitian(2, &mut rng);
        let mut sigma = ComplexMatrix::random_hermitian(3, &mut rng);
        let tr = sigma.trace();
        sigma.scale_mut(C64::new(1.0, 0.0) / tr);
        let r = partial_trace(&rho.kron(&sigma), &[0], &[2, 3]).unwrap();
        assert!(r.max_abs_diff(&rho) < 1e-12);
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let a = ComplexMatrix::identity(6);
        assert!(partial_trace(&a, &[0], &[2, 2]).is_err());
        assert!(partial_trace(&a, &[2], &[2, 3]).is_err());
    }
}
