//! Reproducible synthetic matrices for tests and benchmarks.
//!
//! All generators take an explicit seed and draw from ChaCha8, so a given
//! (generator, parameters, seed) triple produces the same matrix on every
//! platform. Dense builders return exactly symmetric matrices (the upper
//! triangle is mirrored, not recomputed), which keeps the sparse conversion
//! path's bitwise symmetry check honest.

use nalgebra::{DMatrix, DVector, RealField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matio::{CsrMatrix, MatIoError};
use crate::scalar::{cast, Scalar};

/// Dense matrix of i.i.d. standard normal entries, filled row-major.
pub fn gaussian_dense<T: Scalar + RealField>(rows: usize, cols: usize, seed: u64) -> DMatrix<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries: Vec<T> = (0..rows * cols)
        .map(|_| T::standard_normal(&mut rng))
        .collect();
    DMatrix::from_row_slice(rows, cols, &entries)
}

/// Sample covariance `G^T G / samples` of a `samples x n` Gaussian matrix.
/// Positive definite when `samples >= n` (almost surely).
pub fn wishart<T: Scalar + RealField>(n: usize, samples: usize, seed: u64) -> DMatrix<T> {
    let g = gaussian_dense::<T>(samples, n, seed);
    let mut w = g.tr_mul(&g);
    w /= cast::<T>(samples as f64);
    mirror_upper(&mut w);
    w
}

/// `scale * (wishart + ridge * I)`: a Wishart matrix pushed away from
/// singularity and rescaled. `ridge` controls the smallest eigenvalue,
/// `scale` moves the whole spectrum without changing its shape.
pub fn shifted_wishart<T: Scalar + RealField>(
    n: usize,
    samples: usize,
    ridge: f64,
    scale: f64,
    seed: u64,
) -> DMatrix<T> {
    let mut w = wishart::<T>(n, samples, seed);
    let ridge = cast::<T>(ridge);
    let scale = cast::<T>(scale);
    for i in 0..n {
        w[(i, i)] += ridge;
    }
    w *= scale;
    w
}

/// Symmetric matrix `Q diag(eigenvalues) Q^T` with a Haar-ish random
/// orthogonal `Q` (QR of a Gaussian matrix). The spectrum is exactly the
/// given list up to floating-point roundoff in the similarity transform.
pub fn spectrum_matrix<T: Scalar + RealField>(eigenvalues: &[T], seed: u64) -> DMatrix<T> {
    let n = eigenvalues.len();
    let q = gaussian_dense::<T>(n, n, seed).qr().q();
    let lambda = DMatrix::from_diagonal(&DVector::from_row_slice(eigenvalues));
    let mut a = &q * lambda * q.transpose();
    mirror_upper(&mut a);
    a
}

/// Banded symmetric matrix that is strictly diagonally dominant by
/// construction: off-diagonals are uniform on `[-offdiag_mag, offdiag_mag]`
/// within the band, and each diagonal entry is a uniform draw from
/// `[diag_low, diag_high]` plus the absolute sum of its row's
/// off-diagonals. Every eigenvalue therefore exceeds `diag_low`.
pub fn banded_spd<T: Scalar>(
    n: usize,
    half_bandwidth: usize,
    diag_low: f64,
    diag_high: f64,
    offdiag_mag: f64,
    seed: u64,
) -> CsrMatrix<T> {
    assert!(n > 0, "empty matrix");
    assert!(
        diag_low > 0.0 && diag_high >= diag_low,
        "need 0 < diag_low <= diag_high"
    );
    assert!(offdiag_mag >= 0.0, "negative off-diagonal magnitude");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut uniform = |low: f64, high: f64| -> f64 { rng.random_range(low..=high) };
    let mut triplets: Vec<(usize, usize, T)> = Vec::new();
    let mut row_abs_sum = vec![0.0f64; n];
    for i in 0..n {
        for j in (i + 1)..=(i + half_bandwidth).min(n - 1) {
            let value = uniform(-offdiag_mag, offdiag_mag);
            row_abs_sum[i] += value.abs();
            row_abs_sum[j] += value.abs();
            triplets.push((i, j, cast(value)));
            triplets.push((j, i, cast(value)));
        }
    }
    for (i, &slack) in row_abs_sum.iter().enumerate() {
        let diag = uniform(diag_low, diag_high) + slack;
        triplets.push((i, i, cast(diag)));
    }
    CsrMatrix::from_triplets(n, triplets).expect("construction is symmetric and positive")
}

/// Convert a dense symmetric matrix to sparse storage. Off-diagonal exact
/// zeros are dropped; diagonal entries are always kept.
pub fn dense_to_csr<T: Scalar + RealField>(a: &DMatrix<T>) -> Result<CsrMatrix<T>, MatIoError> {
    let (rows, cols) = a.shape();
    if rows != cols {
        return Err(MatIoError::NotSquare { rows, cols });
    }
    let mut triplets = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            let value = a[(i, j)];
            if i == j || value != T::zero() {
                triplets.push((i, j, value));
            }
        }
    }
    CsrMatrix::from_triplets(rows, triplets)
}

fn mirror_upper<T: Scalar + RealField>(a: &mut DMatrix<T>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            a[(j, i)] = a[(i, j)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{cholesky_logdet, exact_logdet};

    #[test]
    fn generators_are_deterministic_per_seed() {
        let a = wishart::<f64>(20, 40, 7);
        let b = wishart::<f64>(20, 40, 7);
        let c = wishart::<f64>(20, 40, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
        let s1 = banded_spd::<f64>(50, 2, 4.0, 6.0, 0.5, 3);
        let s2 = banded_spd::<f64>(50, 2, 4.0, 6.0, 0.5, 3);
        assert_eq!(s1.values(), s2.values());
    }

    #[test]
    fn wishart_is_positive_definite_and_symmetric() {
        let w = shifted_wishart::<f64>(60, 120, 0.01, 1.0, 11);
        assert_eq!(w, w.transpose());
        assert!(cholesky_logdet(&w).is_ok());
    }

    #[test]
    fn spectrum_matrix_reproduces_requested_eigenvalues() {
        let eigs = [0.5f64, 1.0, 2.0, 4.0, 8.0];
        let a = spectrum_matrix(&eigs, 5);
        let spectrum = exact_logdet(&a).unwrap();
        for (got, want) in spectrum.eigenvalues().iter().zip(eigs.iter()) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn banded_matrix_is_dominant_and_within_band() {
        let n = 200;
        let half_bandwidth = 3;
        let a = banded_spd::<f64>(n, half_bandwidth, 4.0, 6.0, 0.5, 17);
        for (i, j, value) in a.triplets() {
            assert!((i as isize - j as isize).unsigned_abs() <= half_bandwidth);
            if i != j {
                assert!(value.abs() <= 0.5);
            }
        }
        for i in 0..n {
            let diag = a.entry(i, i).unwrap();
            let off: f64 = (0..n)
                .filter(|&j| j != i)
                .filter_map(|j| a.entry(i, j))
                .map(f64::abs)
                .sum();
            assert!(diag > off + 4.0 - 1e-9, "row {i}: {diag} vs {off}");
        }
    }

    #[test]
    fn banded_eigenvalues_exceed_diag_low() {
        let a = banded_spd::<f64>(80, 2, 4.0, 6.0, 0.5, 23);
        let spectrum =
            exact_logdet(&crate::oracle::csr_to_dense(&a).unwrap()).unwrap();
        assert!(spectrum.lambda_min() > 4.0);
    }

    #[test]
    fn dense_to_csr_round_trips_matvec() {
        let w = shifted_wishart::<f64>(30, 60, 0.1, 2.0, 13);
        let sparse = dense_to_csr(&w).unwrap();
        let x: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let sparse_y = sparse.matvec(&x).unwrap();
        let dense_y = &w * DVector::from_row_slice(&x);
        for (a, b) in sparse_y.iter().zip(dense_y.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn dense_to_csr_rejects_rectangular() {
        let g = gaussian_dense::<f64>(3, 4, 1);
        assert!(matches!(
            dense_to_csr(&g),
            Err(MatIoError::NotSquare { .. })
        ));
    }
}
