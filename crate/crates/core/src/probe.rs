//! Stochastic estimation of normalized spectral moments.
//!
//! For a normalized matrix `B = A / c` with spectrum in `(0, 1]`, the moment
//! `mu_m = Tr(B^m) / n` is estimated by the Gaussian quadratic form
//! `z^T B^m z / n` with `z ~ N(0, I)`, whose expectation is exactly
//! `Tr(B^m) / n`. One probe chain `w_0 = z, w_k = B w_{k-1}` yields all
//! orders `1..=M` from `M` matrix-vector products. The single-shot variance
//! of `z^T B z` is `2 Tr(B^2)`, which also powers the sample-size adequacy
//! heuristic below.
//!
//! Determinism: sample `s` draws from the ChaCha8 stream `s` of the
//! configured seed, so the estimate is bit-reproducible and independent of
//! whether samples are evaluated in parallel. Means and standard deviations
//! reduce over samples in index order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matio::{CsrMatrix, MatIoError};
use crate::scalar::{cast, Scalar};

/// Largest supported moment order.
pub const MAX_MOMENT_ORDER: usize = 20;

/// Errors from probing.
#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("invalid probe configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Matrix(#[from] MatIoError),
    #[error("trace must be strictly positive, got {0}")]
    NonPositiveTrace(f64),
}

/// Probe parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeConfig {
    /// Number of Gaussian probe vectors `d`.
    pub num_samples: usize,
    /// Highest moment order `M` to estimate.
    pub max_moment: usize,
    /// Master seed; sample `s` uses ChaCha8 stream `s`.
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            num_samples: 30,
            max_moment: 8,
            seed: 0,
        }
    }
}

impl ProbeConfig {
    fn validate(&self) -> Result<(), ProbeError> {
        if self.num_samples == 0 {
            return Err(ProbeError::InvalidConfig(
                "need at least one probe sample".into(),
            ));
        }
        if self.max_moment == 0 || self.max_moment > MAX_MOMENT_ORDER {
            return Err(ProbeError::InvalidConfig(format!(
                "moment order must lie in 1..={MAX_MOMENT_ORDER}, got {}",
                self.max_moment
            )));
        }
        Ok(())
    }
}

/// Moment estimates with per-sample detail.
///
/// Serializes as `{n, d, M, seed, means, std, per_sample}`. `means[m-1]`
/// estimates `mu_m`; `std[m-1]` is the sample standard deviation of the `d`
/// single-probe estimates (0 when `d = 1`, where it is undefined).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSet<T> {
    pub n: usize,
    #[serde(rename = "d")]
    pub num_samples: usize,
    #[serde(rename = "M")]
    pub max_moment: usize,
    pub seed: u64,
    pub means: Vec<T>,
    pub std: Vec<T>,
    pub per_sample: Vec<Vec<T>>,
}

impl<T: Scalar> MomentSet<T> {
    /// Wrap exact moments (for oracle injection): one synthetic sample with
    /// zero spread.
    pub fn from_exact(n: usize, means: Vec<T>) -> Self {
        let std = vec![T::zero(); means.len()];
        let max_moment = means.len();
        Self {
            n,
            num_samples: 1,
            max_moment,
            seed: 0,
            per_sample: vec![means.clone()],
            means,
            std,
        }
    }

    /// Mean estimate of `mu_m` for `m` in `1..=M`.
    pub fn mean(&self, order: usize) -> T {
        self.means[order - 1]
    }

    /// True when any mean falls outside `(0, 1]`, which a spectrum in
    /// `(0, 1]` cannot produce without sampling noise.
    pub fn any_mean_out_of_range(&self) -> bool {
        self.means
            .iter()
            .any(|&mu| !(mu > T::zero() && mu <= T::one()))
    }
}

/// Estimate `mu_1..mu_M` of the normalized matrix `b` with Gaussian probes.
///
/// Out-of-range means are reported through `log::warn!` but do not fail; the
/// caller decides how to treat them. Samples may be evaluated in parallel,
/// with results identical to sequential evaluation.
pub fn estimate_moments<T: Scalar>(
    b: &CsrMatrix<T>,
    cfg: &ProbeConfig,
) -> Result<MomentSet<T>, ProbeError> {
    cfg.validate()?;
    let n = b.n();
    let order = cfg.max_moment;

    let per_sample: Vec<Vec<T>> = (0..cfg.num_samples)
        .into_par_iter()
        .map(|s| single_probe(b, cfg.seed, s as u64, order))
        .collect::<Result<_, _>>()?;

    let d = cast::<T>(cfg.num_samples as f64);
    let mut means = vec![T::zero(); order];
    for sample in &per_sample {
        for (mean, &raw) in means.iter_mut().zip(sample) {
            *mean += raw;
        }
    }
    for mean in means.iter_mut() {
        *mean /= d;
    }

    let mut std = vec![T::zero(); order];
    if cfg.num_samples > 1 {
        let dof = cast::<T>((cfg.num_samples - 1) as f64);
        for sample in &per_sample {
            for ((acc, &raw), &mean) in std.iter_mut().zip(sample).zip(&means) {
                let dev = raw - mean;
                *acc += dev * dev;
            }
        }
        for acc in std.iter_mut() {
            *acc = (*acc / dof).sqrt();
        }
    }

    let set = MomentSet {
        n,
        num_samples: cfg.num_samples,
        max_moment: order,
        seed: cfg.seed,
        means,
        std,
        per_sample,
    };
    if set.any_mean_out_of_range() {
        log::warn!(
            "probe means outside (0, 1]: {:?}; the spectrum may exceed the normalization bound, or sampling noise dominates",
            set.means
        );
    }
    Ok(set)
}

/// One probe chain: `raw[m-1] = z . (B^m z) / n`.
fn single_probe<T: Scalar>(
    b: &CsrMatrix<T>,
    seed: u64,
    stream: u64,
    order: usize,
) -> Result<Vec<T>, ProbeError> {
    let n = b.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let z: Vec<T> = (0..n).map(|_| T::standard_normal(&mut rng)).collect();

    let inv_n = T::one() / cast::<T>(n as f64);
    let mut w = z.clone();
    let mut next = vec![T::zero(); n];
    let mut raw = Vec::with_capacity(order);
    for _ in 0..order {
        b.matvec_into(&w, &mut next)?;
        std::mem::swap(&mut w, &mut next);
        raw.push(dot(&z, &w) * inv_n);
    }
    Ok(raw)
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Sample-size adequacy heuristic `sqrt(2 Tr(A^2)) / Tr(A)`: the relative
/// single-shot standard deviation of the trace estimator. Values well below 1
/// mean even a handful of probes pin the moments; for random matrices of
/// dimension `n` it behaves like `sqrt(log n / (2 n))`-scaled quantities and
/// shrinks with size.
pub fn sample_adequacy_ratio<T: Scalar>(a: &CsrMatrix<T>) -> Result<T, ProbeError> {
    let trace = a.trace();
    // negated comparison so NaN also fails
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(trace > T::zero()) {
        return Err(ProbeError::NonPositiveTrace(
            trace.to_f64().unwrap_or(f64::NAN),
        ));
    }
    Ok((cast::<T>(2.0) * a.frobenius_squared()).sqrt() / trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(values: &[f64]) -> CsrMatrix<f64> {
        CsrMatrix::from_triplets(
            values.len(),
            values.iter().enumerate().map(|(i, &v)| (i, i, v)),
        )
        .unwrap()
    }

    fn identity(n: usize) -> CsrMatrix<f64> {
        diag(&vec![1.0; n])
    }

    #[test]
    fn config_validation() {
        let bad_samples = ProbeConfig {
            num_samples: 0,
            ..Default::default()
        };
        assert!(estimate_moments(&identity(2), &bad_samples).is_err());
        let bad_order = ProbeConfig {
            max_moment: 21,
            ..Default::default()
        };
        assert!(estimate_moments(&identity(2), &bad_order).is_err());
        let zero_order = ProbeConfig {
            max_moment: 0,
            ..Default::default()
        };
        assert!(estimate_moments(&identity(2), &zero_order).is_err());
    }

    #[test]
    fn defaults_match_documented_values() {
        let cfg = ProbeConfig::default();
        assert_eq!(cfg.num_samples, 30);
        assert_eq!(cfg.max_moment, 8);
        assert_eq!(cfg.seed, 0);
    }

    #[test]
    fn identity_raw_moments_are_all_equal_and_mean_near_one() {
        // B^m z = z for every m, so each probe reports the same value at all
        // orders and the mean concentrates at 1 with variance 2/n per probe.
        let b = identity(100);
        let cfg = ProbeConfig {
            num_samples: 10_000,
            max_moment: 4,
            seed: 1,
        };
        let set = estimate_moments(&b, &cfg).unwrap();
        for sample in &set.per_sample {
            for m in 1..sample.len() {
                assert_eq!(sample[m], sample[0]);
            }
        }
        let se = (2.0f64 / 100.0).sqrt() / (cfg.num_samples as f64).sqrt();
        for &mean in &set.means {
            assert!(
                (mean - 1.0).abs() <= 3.0 * se,
                "mean {mean} outside 3 standard errors ({se})"
            );
        }
    }

    #[test]
    fn diagonal_second_moment_matches_exact_within_three_se() {
        let b = diag(&[0.1, 0.2, 0.3, 0.4]);
        let cfg = ProbeConfig {
            num_samples: 10_000,
            max_moment: 2,
            seed: 2,
        };
        let set = estimate_moments(&b, &cfg).unwrap();
        let exact = (0.01 + 0.04 + 0.09 + 0.16) / 4.0; // mu_2 = 0.075
        let se = set.std[1] / (cfg.num_samples as f64).sqrt();
        assert!(
            (set.means[1] - exact).abs() <= 3.0 * se,
            "mu_2 = {} vs exact {exact} (se {se})",
            set.means[1]
        );
    }

    #[test]
    fn single_shot_variance_matches_quadratic_form_law() {
        // Var(z^T B z) = 2 Tr(B^2) for Gaussian probes.
        let b = diag(&[0.1, 0.2, 0.3, 0.4]);
        let cfg = ProbeConfig {
            num_samples: 10_000,
            max_moment: 1,
            seed: 3,
        };
        let set = estimate_moments(&b, &cfg).unwrap();
        let n = 4.0;
        // std is of z^T B z / n; scale back to the quadratic form.
        let var = (set.std[0] * n).powi(2);
        let expected = 2.0 * b.frobenius_squared();
        assert!(
            (var - expected).abs() <= 0.1 * expected,
            "variance {var} vs {expected}"
        );
    }

    #[test]
    fn moment_means_are_nonincreasing_up_to_noise() {
        let b = diag(&[0.15, 0.3, 0.45, 0.6, 0.75, 0.9]);
        let cfg = ProbeConfig {
            num_samples: 2_000,
            max_moment: 6,
            seed: 4,
        };
        let set = estimate_moments(&b, &cfg).unwrap();
        let d = cfg.num_samples as f64;
        for m in 1..set.means.len() {
            let slack = 3.0 * (set.std[m - 1] + set.std[m]) / d.sqrt();
            assert!(
                set.means[m] <= set.means[m - 1] + slack,
                "mu_{} = {} > mu_{} = {} beyond noise",
                m + 1,
                set.means[m],
                m,
                set.means[m - 1]
            );
        }
    }

    #[test]
    fn same_seed_reproduces_bitwise_and_seeds_differ() {
        let b = diag(&[0.2, 0.5, 0.8]);
        let cfg = ProbeConfig {
            num_samples: 16,
            max_moment: 5,
            seed: 42,
        };
        let a = estimate_moments(&b, &cfg).unwrap();
        let b2 = estimate_moments(&b, &cfg).unwrap();
        assert_eq!(a, b2);
        let other = estimate_moments(
            &b,
            &ProbeConfig {
                seed: 43,
                ..cfg
            },
        )
        .unwrap();
        assert_ne!(a.means, other.means);
    }

    #[test]
    fn single_sample_has_zero_std() {
        let b = identity(8);
        let cfg = ProbeConfig {
            num_samples: 1,
            max_moment: 3,
            seed: 0,
        };
        let set = estimate_moments(&b, &cfg).unwrap();
        assert!(set.std.iter().all(|&s| s == 0.0));
        assert_eq!(set.per_sample.len(), 1);
    }

    #[test]
    fn from_exact_wraps_means_with_zero_spread() {
        let set = MomentSet::from_exact(10, vec![0.5, 0.3, 0.2]);
        assert_eq!(set.num_samples, 1);
        assert_eq!(set.max_moment, 3);
        assert_eq!(set.mean(1), 0.5);
        assert!(set.std.iter().all(|&s| s == 0.0));
        assert!(!set.any_mean_out_of_range());
    }

    #[test]
    fn out_of_range_flag_detects_means_above_one() {
        let set = MomentSet::from_exact(10, vec![1.2, 0.3]);
        assert!(set.any_mean_out_of_range());
    }

    #[test]
    fn adequacy_ratio_closed_forms() {
        // Identity: sqrt(2 n) / n = sqrt(2 / n).
        let id = identity(50);
        let ratio = sample_adequacy_ratio(&id).unwrap();
        assert!((ratio - (2.0f64 / 50.0).sqrt()).abs() < 1e-14);
        // diag(1,2,3,4): sqrt(2 * 30) / 10.
        let d = diag(&[1.0, 2.0, 3.0, 4.0]);
        let ratio = sample_adequacy_ratio(&d).unwrap();
        assert!((ratio - (60.0f64).sqrt() / 10.0).abs() < 1e-14);
    }

    #[test]
    fn adequacy_ratio_shrinks_with_dimension() {
        let small = sample_adequacy_ratio(&identity(100)).unwrap();
        let large = sample_adequacy_ratio(&identity(100_000)).unwrap();
        assert!(large < small);
        assert!(large < 0.05, "ratio {large}");
    }

    #[test]
    fn moment_set_serializes_with_documented_keys() {
        let set = MomentSet::from_exact(3, vec![0.5]);
        let json = serde_json::to_value(&set).unwrap();
        let obj = json.as_object().unwrap();
        for key in ["n", "d", "M", "seed", "means", "std", "per_sample"] {
            assert!(obj.contains_key(key), "missing key {key}");
        }
        let back: MomentSet<f64> = serde_json::from_value(json).unwrap();
        assert_eq!(back, set);
    }
}
