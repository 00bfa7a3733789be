//! Dense helpers for the small symmetric matrices used by the Gaussian
//! kernels. Matrices are row-major `d * d` slices.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{ln, sqrt};

/// Lower Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky(a: &[f64], d: usize) -> Result<Vec<f64>> {
    debug_assert_eq!(a.len(), d * d);
    for i in 0..d {
        for j in 0..i {
            let (x, y) = (a[i * d + j], a[j * d + i]);
            if (x - y).abs() > 1e-9 * (1.0 + x.abs().max(y.abs())) {
                return Err(Error::NotPositiveDefinite);
            }
        }
    }
    let mut l = vec![0.0; d * d];
    for j in 0..d {
        let mut diag = a[j * d + j];
        for k in 0..j {
            diag -= l[j * d + k] * l[j * d + k];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        let ljj = sqrt(diag);
        l[j * d + j] = ljj;
        for i in j + 1..d {
            let mut s = a[i * d + j];
            for k in 0..j {
                s -= l[i * d + k] * l[j * d + k];
            }
            l[i * d + j] = s / ljj;
        }
    }
    Ok(l)
}

/// `ln det A` from the Cholesky factor of `A`.
pub fn ln_det_from_cholesky(l: &[f64], d: usize) -> f64 {
    2.0 * (0..d).map(|i| ln(l[i * d + i])).sum::<f64>()
}

/// Solves `L y = b` in place.
pub fn solve_lower_in_place(l: &[f64], d: usize, b: &mut [f64]) {
    for i in 0..d {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * d + k] * b[k];
        }
        b[i] = s / l[i * d + i];
    }
}

/// `(x - m)^T A^{-1} (x - m)` given the Cholesky factor of `A`.
pub fn mahalanobis_sq(l: &[f64], d: usize, x: &[f64], m: &[f64]) -> f64 {
    let mut buf = [0.0f64; 8];
    if d <= buf.len() {
        let z = &mut buf[..d];
        for i in 0..d {
            z[i] = x[i] - m[i];
        }
        solve_lower_in_place(l, d, z);
        z.iter().map(|v| v * v).sum()
    } else {
        let mut z: Vec<f64> = x.iter().zip(m).map(|(a, b)| a - b).collect();
        solve_lower_in_place(l, d, &mut z);
        z.iter().map(|v| v * v).sum()
    }
}

/// Inverse of a lower-triangular matrix (itself lower-triangular).
pub fn invert_lower(l: &[f64], d: usize) -> Vec<f64> {
    let mut inv = vec![0.0; d * d];
    for col in 0..d {
        let mut e = vec![0.0; d];
        e[col] = 1.0;
        solve_lower_in_place(l, d, &mut e);
        for row in 0..d {
            inv[row * d + col] = e[row];
        }
    }
    inv
}

/// `L x` for lower-triangular `L`.
pub fn lower_mul_vec(l: &[f64], d: usize, x: &[f64]) -> Vec<f64> {
    (0..d)
        .map(|i| (0..=i).map(|k| l[i * d + k] * x[k]).sum())
        .collect()
}

/// `B B^T`, symmetrized.
pub fn mul_self_transpose(b: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let s: f64 = (0..d).map(|k| b[i * d + k] * b[j * d + k]).sum();
            out[i * d + j] = s;
            out[j * d + i] = s;
        }
    }
    out
}

/// `A B` for square matrices.
pub fn mul(a: &[f64], b: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for k in 0..d {
            let aik = a[i * d + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..d {
                out[i * d + j] += aik * b[k * d + j];
            }
        }
    }
    out
}

pub fn transpose(a: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            out[j * d + i] = a[i * d + j];
        }
    }
    out
}

pub fn identity(d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        out[i * d + i] = 1.0;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_roundtrip() {
        let a = [4.0, 2.0, 0.4, 2.0, 5.0, 1.0, 0.4, 1.0, 3.0];
        let l = cholesky(&a, 3).unwrap();
        let back = mul_self_transpose(&l, 3);
        for (x, y) in a.iter().zip(&back) {
            assert!((x - y).abs() < 1e-12);
        }
        let det = 4.0 * (5.0 * 3.0 - 1.0) - 2.0 * (2.0 * 3.0 - 0.4) + 0.4 * (2.0 - 5.0 * 0.4);
        assert!((ln_det_from_cholesky(&l, 3) - ln(det)).abs() < 1e-12);
        let li = invert_lower(&l, 3);
        let id = mul(&l, &li, 3);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((id[i * 3 + j] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_indefinite_and_asymmetric() {
        assert_eq!(
            cholesky(&[1.0, 2.0, 2.0, 1.0], 2),
            Err(Error::NotPositiveDefinite)
        );
        assert_eq!(
            cholesky(&[1.0, 0.5, 0.0, 1.0], 2),
            Err(Error::NotPositiveDefinite)
        );
    }
}
