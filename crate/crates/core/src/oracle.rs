//! Exact dense reference routines.
//!
//! These factorize small matrices outright and exist to validate the
//! stochastic estimator: exact log-determinants through two independent
//! dense routes (a symmetric eigendecomposition and a hand-rolled Cholesky),
//! exact normalized moments of a known spectrum, and the spectral histogram
//! a reconstruction should approach. Everything here is O(n^2) memory and
//! O(n^3) time, hence the hard dimension cap.

use nalgebra::{DMatrix, RealField};
use num_traits::Float;
use thiserror::Error;

use crate::matio::CsrMatrix;
use crate::maxent::{Grid, GridDensity, MaxEntError};
use crate::scalar::{cast, Scalar};

/// Largest dimension the dense routines accept.
pub const MAX_DENSE_DIM: usize = 5_000;

/// Relative tolerance for the symmetry precondition of the dense routines.
const DENSE_SYMMETRY_RTOL: f64 = 1e-12;

/// Errors from the dense reference routines.
#[derive(Debug, Error)]
pub enum OracleError {
    #[error("dense routines accept n <= {max}, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },
    #[error("spectrum is not strictly positive: eigenvalue {index} is {value}")]
    NonPositiveEigenvalue { index: usize, value: f64 },
    #[error("spectrum is empty")]
    EmptySpectrum,
    #[error("eigenvalue {value} is not finite")]
    NonFiniteEigenvalue { value: f64 },
    #[error("normalization {c} is below the largest eigenvalue {lambda_max}")]
    NormalizationBelowMax { c: f64, lambda_max: f64 },
    #[error("histogram needs a spectrum normalized into (0, 1]; eigenvalue {index} is {value}")]
    NotNormalized { index: usize, value: f64 },
    #[error("matrix is not positive definite: Cholesky pivot {pivot} is nonpositive")]
    NotPositiveDefinite { pivot: usize },
    #[error(transparent)]
    Grid(#[from] MaxEntError),
}

/// An exactly known positive spectrum, ascending, with its log-determinant.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSpectrum<T> {
    eigenvalues: Vec<T>,
    logdet: T,
}

impl<T: Scalar> DenseSpectrum<T> {
    /// Wrap a positive spectrum; sorts ascending and sums logs.
    pub fn from_eigenvalues(mut eigenvalues: Vec<T>) -> Result<Self, OracleError> {
        if eigenvalues.is_empty() {
            return Err(OracleError::EmptySpectrum);
        }
        for &value in &eigenvalues {
            if !value.is_finite() {
                return Err(OracleError::NonFiniteEigenvalue {
                    value: value.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        eigenvalues.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        if let Some((index, &value)) = eigenvalues
            .iter()
            .enumerate()
            .find(|&(_, &v)| v <= T::zero())
        {
            return Err(OracleError::NonPositiveEigenvalue {
                index,
                value: value.to_f64().unwrap_or(f64::NAN),
            });
        }
        let mut logdet = T::zero();
        for &value in &eigenvalues {
            logdet += value.ln();
        }
        Ok(Self {
            eigenvalues,
            logdet,
        })
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    /// Exact `sum_i ln(lambda_i)`.
    pub fn logdet(&self) -> T {
        self.logdet
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn lambda_min(&self) -> T {
        self.eigenvalues[0]
    }

    pub fn lambda_max(&self) -> T {
        *self.eigenvalues.last().unwrap()
    }

    /// The spectrum scaled by `1 / c`, requiring `c >= lambda_max` so the
    /// result lies in `(0, 1]`.
    pub fn normalized(&self, c: T) -> Result<Self, OracleError> {
        if !(c.is_finite() && c >= self.lambda_max()) {
            return Err(OracleError::NormalizationBelowMax {
                c: c.to_f64().unwrap_or(f64::NAN),
                lambda_max: self.lambda_max().to_f64().unwrap_or(f64::NAN),
            });
        }
        Self::from_eigenvalues(self.eigenvalues.iter().map(|&v| v / c).collect())
    }

    /// Mean of `ln(lambda)` over the spectrum.
    pub fn mean_log(&self) -> T {
        self.logdet / cast(self.n() as f64)
    }
}

fn check_dense_input<T: Scalar + RealField>(a: &DMatrix<T>) -> Result<usize, OracleError> {
    let (rows, cols) = a.shape();
    if rows != cols {
        return Err(OracleError::NotSquare { rows, cols });
    }
    if rows > MAX_DENSE_DIM {
        return Err(OracleError::TooLarge {
            n: rows,
            max: MAX_DENSE_DIM,
        });
    }
    let mut scale = T::zero();
    for &v in a.iter() {
        scale = Float::max(scale, Float::abs(v));
    }
    let tol = cast::<T>(DENSE_SYMMETRY_RTOL) * scale;
    for i in 0..rows {
        for j in (i + 1)..cols {
            if Float::abs(a[(i, j)] - a[(j, i)]) > tol {
                return Err(OracleError::NotSymmetric { row: i, col: j });
            }
        }
    }
    Ok(rows)
}

/// Full symmetric eigendecomposition; the spectrum must be strictly
/// positive.
pub fn exact_logdet<T: Scalar + RealField>(a: &DMatrix<T>) -> Result<DenseSpectrum<T>, OracleError> {
    check_dense_input(a)?;
    let eigen = a.clone().symmetric_eigen();
    DenseSpectrum::from_eigenvalues(eigen.eigenvalues.iter().copied().collect())
}

/// Densify a sparse matrix and run [`exact_logdet`].
pub fn exact_logdet_csr<T: Scalar + RealField>(
    a: &CsrMatrix<T>,
) -> Result<DenseSpectrum<T>, OracleError> {
    exact_logdet(&csr_to_dense(a)?)
}

/// Convert a sparse matrix to dense storage, subject to the dimension cap.
pub fn csr_to_dense<T: Scalar + RealField>(a: &CsrMatrix<T>) -> Result<DMatrix<T>, OracleError> {
    if a.n() > MAX_DENSE_DIM {
        return Err(OracleError::TooLarge {
            n: a.n(),
            max: MAX_DENSE_DIM,
        });
    }
    let mut dense = DMatrix::zeros(a.n(), a.n());
    for (row, col, value) in a.triplets() {
        dense[(row, col)] = value;
    }
    Ok(dense)
}

/// Log-determinant through an unblocked dense Cholesky factorization,
/// independent of the eigendecomposition path: `2 sum_j ln(L_jj)`.
pub fn cholesky_logdet<T: Scalar + RealField>(a: &DMatrix<T>) -> Result<T, OracleError> {
    let n = check_dense_input(a)?;
    let mut m = a.clone();
    let mut logdet = T::zero();
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= m[(j, k)] * m[(j, k)];
        }
        // negated comparison so NaN also fails
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(d > T::zero()) {
            return Err(OracleError::NotPositiveDefinite { pivot: j });
        }
        let root = Float::sqrt(d);
        m[(j, j)] = root;
        logdet += cast::<T>(2.0) * Float::ln(root);
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= m[(i, k)] * m[(j, k)];
            }
            m[(i, j)] = s / root;
        }
    }
    Ok(logdet)
}

/// Exact normalized moments `mu_m = mean((lambda_i / c)^m)` for
/// `m = 1..=max_order`, requiring `c >= lambda_max`.
pub fn exact_moments<T: Scalar>(
    spectrum: &DenseSpectrum<T>,
    c: T,
    max_order: usize,
) -> Result<Vec<T>, OracleError> {
    if !(c.is_finite() && c >= spectrum.lambda_max()) {
        return Err(OracleError::NormalizationBelowMax {
            c: c.to_f64().unwrap_or(f64::NAN),
            lambda_max: spectrum.lambda_max().to_f64().unwrap_or(f64::NAN),
        });
    }
    let inv_n = T::one() / cast::<T>(spectrum.n() as f64);
    let mut powers: Vec<T> = spectrum.eigenvalues.iter().map(|&v| v / c).collect();
    let normalized = powers.clone();
    let mut moments = Vec::with_capacity(max_order);
    for order in 0..max_order {
        if order > 0 {
            for (p, &base) in powers.iter_mut().zip(&normalized) {
                *p *= base;
            }
        }
        let mut acc = T::zero();
        for &p in &powers {
            acc += p;
        }
        moments.push(acc * inv_n);
    }
    Ok(moments)
}

/// Histogram of a normalized spectrum on a grid, scaled to unit mass:
/// `p_j = count_j / (n dx)`. Every eigenvalue must lie in `(0, 1]`; the
/// value 1 lands in the top bin.
pub fn spectral_histogram<T: Scalar>(
    spectrum: &DenseSpectrum<T>,
    grid: &Grid<T>,
) -> Result<GridDensity<T>, OracleError> {
    let dx = grid.dx();
    let bins = grid.len();
    let mut counts = vec![0usize; bins];
    for (index, &value) in spectrum.eigenvalues.iter().enumerate() {
        if !(value > T::zero() && value <= T::one()) {
            return Err(OracleError::NotNormalized {
                index,
                value: value.to_f64().unwrap_or(f64::NAN),
            });
        }
        let bin = (value / dx).to_f64().unwrap_or(0.0).floor() as usize;
        counts[bin.min(bins - 1)] += 1;
    }
    let scale = T::one() / (cast::<T>(spectrum.n() as f64) * dx);
    let values: Vec<T> = counts
        .iter()
        .map(|&count| cast::<T>(count as f64) * scale)
        .collect();
    Ok(GridDensity::new(grid.clone(), values)?)
}
