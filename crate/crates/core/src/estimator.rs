//! The end-to-end log-determinant estimator.
//!
//! Given a sparse symmetric positive definite matrix, the pipeline is:
//! normalize by a Gershgorin upper bound so the spectrum lies in `(0, 1]`,
//! estimate normalized spectral moments with Gaussian probes, fit
//! maximum-entropy densities for increasing moment counts, stop when the
//! fitted entropy stops dropping, and integrate the log against the chosen
//! density:
//!
//! `logdet(A) = n * <ln x>_q + n * ln c`.
//!
//! The sweep across moment counts is kept in the result for diagnostics,
//! together with a per-transition informativeness score that flags when an
//! added moment stopped paying for the sampling noise it carries.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matio::{CsrMatrix, MatIoError, NormalizationFactor};
use crate::maxent::{solve_maxent_warm, Grid, MaxEntError, DEFAULT_MAX_ITERS};
use crate::probe::{estimate_moments, MomentSet, ProbeConfig, ProbeError};
use crate::scalar::{cast, Scalar};

/// Entropy-drop threshold (nats) under which adding a moment is considered
/// uninformative and the sweep stops.
pub const DEFAULT_EPS_STOP: f64 = 0.01;

/// Smallest moment count the sweep fits.
pub const MIN_MOMENT_COUNT: usize = 2;

/// Errors from the estimation pipeline.
#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error(transparent)]
    Matrix(#[from] MatIoError),
    #[error(transparent)]
    Probe(#[from] ProbeError),
    #[error(transparent)]
    MaxEnt(#[from] MaxEntError),
    #[error("every moment count failed to fit; last error: {last_error}")]
    AllMomentCountsFailed { last_error: String },
    #[error("the sweep holds no usable moment counts")]
    EmptySweep,
    #[error("need at least {needed} moment estimates, got {available}")]
    InsufficientMoments { available: usize, needed: usize },
    #[error("inconsistent moment set: {0}")]
    InvalidMoments(String),
    #[error("invalid bound input: {0}")]
    InvalidBound(String),
}

/// One fitted moment count in the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry<T> {
    /// Number of matrix moments constrained (the order-0 normalization is
    /// implicit and not counted).
    pub moment_count: usize,
    pub entropy: T,
    /// Log-determinant implied by this fit alone.
    pub logdet: T,
    pub residual: T,
    pub converged: bool,
    /// Fitted coefficients, length `moment_count + 1`.
    pub alphas: Vec<T>,
}

/// All fitted moment counts, ascending, plus the stopping rule's choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropySweep<T> {
    pub entries: Vec<SweepEntry<T>>,
    /// Moment count chosen by the entropy stopping rule. The reported
    /// estimate may fall back to an earlier converged count; when it does,
    /// the estimate carries a warning and `moments_used` differs.
    pub stopping_m: usize,
    /// Moment counts whose fit failed outright, with the error text.
    pub skipped: Vec<(usize, String)>,
}

/// Informativeness of one transition `M-1 -> M` (between adjacent fitted
/// counts): the entropy change plus a noise allowance
/// `sum_i |delta alpha_i| * sigma_i`. A positive value means the noise
/// allowance swamps the entropy drop, so the added moment is suspect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ICEntry<T> {
    /// The larger moment count of the transition.
    pub moment_count: usize,
    pub ic: T,
    pub delta_entropy: T,
    pub flagged: bool,
}

/// Informativeness scores for every adjacent pair in the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ICReport<T> {
    pub entries: Vec<ICEntry<T>>,
}

impl<T> ICReport<T> {
    pub fn any_flagged(&self) -> bool {
        self.entries.iter().any(|e| e.flagged)
    }
}

/// The headline estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogDetEstimate<T> {
    /// Estimated `ln det(A)`.
    pub value: T,
    pub n: usize,
    /// Normalization constant the spectrum was divided by.
    pub c: T,
    /// Moment count of the fit the estimate was read from.
    pub moments_used: usize,
    pub entropy: T,
    pub residual: T,
    pub probe_seconds: f64,
    pub maxent_seconds: f64,
    /// Present when the result needed a fallback or the inputs looked
    /// suspect; the estimate is still the best available.
    pub warning: Option<String>,
}

/// Estimate plus the diagnostics it was derived from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogDetOutcome<T> {
    pub estimate: LogDetEstimate<T>,
    pub sweep: EntropySweep<T>,
    pub ic: ICReport<T>,
}

/// Estimate the log-determinant of a sparse symmetric positive definite
/// matrix.
///
/// Normalizes by the Gershgorin bound, probes moments per `cfg`, then fits
/// maximum-entropy densities for growing moment counts on `grid` with
/// per-fit tolerance `tol`, stopping as soon as the entropy rule triggers
/// (drop below `eps_stop`, or an increase). The result is deterministic in
/// (`a`, `cfg`, `grid`, `tol`, `eps_stop`) except for the timing fields.
pub fn logdet<T: Scalar>(
    a: &CsrMatrix<T>,
    cfg: &ProbeConfig,
    grid: &Grid<T>,
    tol: T,
    eps_stop: T,
) -> Result<LogDetOutcome<T>, EstimatorError> {
    let (moments, c, probe_seconds) = probe_matrix(a, cfg)?;
    run_pipeline(&moments, &c, grid, tol, eps_stop, probe_seconds, false)
}

/// Like [`logdet`], but fits every moment count up to the configured cap
/// even after the stopping rule triggers, so the full entropy and
/// informativeness curves are available for inspection. Selection and the
/// headline estimate are identical to [`logdet`] on the same inputs.
pub fn diagnose<T: Scalar>(
    a: &CsrMatrix<T>,
    cfg: &ProbeConfig,
    grid: &Grid<T>,
    tol: T,
    eps_stop: T,
) -> Result<LogDetOutcome<T>, EstimatorError> {
    let (moments, c, probe_seconds) = probe_matrix(a, cfg)?;
    run_pipeline(&moments, &c, grid, tol, eps_stop, probe_seconds, true)
}

/// Run the estimate on an existing moment set (for example exact moments of
/// a known spectrum, or probes computed elsewhere). `c` must be the constant
/// the spectrum was normalized by.
pub fn logdet_from_moments<T: Scalar>(
    moments: &MomentSet<T>,
    c: &NormalizationFactor<T>,
    grid: &Grid<T>,
    tol: T,
    eps_stop: T,
) -> Result<LogDetOutcome<T>, EstimatorError> {
    run_pipeline(moments, c, grid, tol, eps_stop, 0.0, false)
}

/// Full-sweep variant of [`logdet_from_moments`]; see [`diagnose`].
pub fn diagnose_from_moments<T: Scalar>(
    moments: &MomentSet<T>,
    c: &NormalizationFactor<T>,
    grid: &Grid<T>,
    tol: T,
    eps_stop: T,
) -> Result<LogDetOutcome<T>, EstimatorError> {
    run_pipeline(moments, c, grid, tol, eps_stop, 0.0, true)
}

fn probe_matrix<T: Scalar>(
    a: &CsrMatrix<T>,
    cfg: &ProbeConfig,
) -> Result<(MomentSet<T>, NormalizationFactor<T>, f64), EstimatorError> {
    let c = a.gershgorin_bound();
    let b = a.divided_by(c.value)?;
    let probe_start = Instant::now();
    let moments = estimate_moments(&b, cfg)?;
    Ok((moments, c, probe_start.elapsed().as_secs_f64()))
}

fn validate_moment_set<T: Scalar>(moments: &MomentSet<T>) -> Result<(), EstimatorError> {
    if moments.n == 0 {
        return Err(EstimatorError::InvalidMoments(
            "matrix dimension is zero".into(),
        ));
    }
    if moments.means.len() != moments.max_moment || moments.std.len() != moments.max_moment {
        return Err(EstimatorError::InvalidMoments(format!(
            "means/std lengths {}/{} do not match the declared order {}",
            moments.means.len(),
            moments.std.len(),
            moments.max_moment
        )));
    }
    if moments.max_moment < MIN_MOMENT_COUNT {
        return Err(EstimatorError::InsufficientMoments {
            available: moments.max_moment,
            needed: MIN_MOMENT_COUNT,
        });
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_pipeline<T: Scalar>(
    moments: &MomentSet<T>,
    c: &NormalizationFactor<T>,
    grid: &Grid<T>,
    tol: T,
    eps_stop: T,
    probe_seconds: f64,
    full_sweep: bool,
) -> Result<LogDetOutcome<T>, EstimatorError> {
    validate_moment_set(moments)?;
    let n = cast::<T>(moments.n as f64);
    let log_c = c.value.ln();
    let maxent_start = Instant::now();

    let mut entries: Vec<SweepEntry<T>> = Vec::new();
    let mut skipped: Vec<(usize, String)> = Vec::new();
    let mut warm: Vec<T> = Vec::new();
    let mut early_stop: Option<usize> = None;
    for m in MIN_MOMENT_COUNT..=moments.max_moment {
        let mut targets = Vec::with_capacity(m + 1);
        targets.push(T::one());
        targets.extend_from_slice(&moments.means[..m]);
        let mut init = warm.clone();
        init.resize(m + 1, T::zero());
        match solve_maxent_warm(&targets, grid, tol, DEFAULT_MAX_ITERS, &init) {
            Ok((density, report)) => {
                warm = density.alphas().to_vec();
                let logdet = n * (grid.log_moment(density.values()) + log_c);
                entries.push(SweepEntry {
                    moment_count: m,
                    entropy: report.entropy,
                    logdet,
                    residual: report.residual,
                    converged: report.converged,
                    alphas: warm.clone(),
                });
            }
            Err(err) => {
                log::warn!("moment count {m} failed to fit: {err}");
                skipped.push((m, err.to_string()));
            }
        }
        // The stopping rule reads adjacent fitted pairs left to right, so in
        // estimation mode the sweep can halt at the first trigger; fitting
        // further counts would not change the selection.
        if !full_sweep && entries.len() >= 2 {
            let cur = &entries[entries.len() - 1];
            let prev = &entries[entries.len() - 2];
            if cur.entropy > prev.entropy {
                early_stop = Some(prev.moment_count);
                break;
            }
            if prev.entropy - cur.entropy < eps_stop {
                early_stop = Some(cur.moment_count);
                break;
            }
        }
    }
    let maxent_seconds = maxent_start.elapsed().as_secs_f64();

    if entries.is_empty() {
        let last_error = skipped
            .last()
            .map(|(_, msg)| msg.clone())
            .unwrap_or_else(|| "empty sweep".into());
        return Err(EstimatorError::AllMomentCountsFailed { last_error });
    }

    let stopping_m = match early_stop {
        Some(m) => m,
        None => select_moment_count(&entries, eps_stop, moments.max_moment)?,
    };
    let selected = entries
        .iter()
        .find(|e| e.moment_count == stopping_m)
        .expect("stopping rule picks a present entry");

    let mut warnings: Vec<String> = Vec::new();
    if moments.any_mean_out_of_range() {
        warnings.push(
            "some moment estimates fall outside (0, 1]; the sampling noise is large relative \
             to the spectrum"
                .into(),
        );
    }
    // Fallback candidates stop at the selected count: the stopping rule
    // already judged larger counts uninformative, and the restriction keeps
    // the estimate identical between the early-stopping and full sweeps.
    let used = if selected.converged {
        selected
    } else if let Some(fallback) = entries
        .iter()
        .rev()
        .find(|e| e.converged && e.moment_count <= stopping_m)
    {
        warnings.push(format!(
            "fit at the selected moment count {} did not converge (residual {:.3e}); \
             falling back to the last converged count {}",
            selected.moment_count,
            selected.residual.to_f64().unwrap_or(f64::NAN),
            fallback.moment_count
        ));
        fallback
    } else {
        warnings.push(format!(
            "no converged fit at or below the selected moment count; using the best \
             available fit at {} (residual {:.3e})",
            selected.moment_count,
            selected.residual.to_f64().unwrap_or(f64::NAN)
        ));
        selected
    };

    let ic = informativeness(&entries, moments);
    let estimate = LogDetEstimate {
        value: used.logdet,
        n: moments.n,
        c: c.value,
        moments_used: used.moment_count,
        entropy: used.entropy,
        residual: used.residual,
        probe_seconds,
        maxent_seconds,
        warning: if warnings.is_empty() {
            None
        } else {
            Some(warnings.join("; "))
        },
    };
    Ok(LogDetOutcome {
        estimate,
        sweep: EntropySweep {
            entries,
            stopping_m,
            skipped,
        },
        ic,
    })
}

/// Apply the entropy stopping rule to fitted sweep entries (ascending by
/// moment count), considering only counts up to `cap`.
///
/// Walking adjacent pairs: an entropy increase selects the earlier count
/// immediately (the richer fit went the wrong way); a drop smaller than
/// `eps_stop` selects the later count (the information gain ran out); if
/// neither triggers, the last count wins.
pub fn select_moment_count<T: Scalar>(
    entries: &[SweepEntry<T>],
    eps_stop: T,
    cap: usize,
) -> Result<usize, EstimatorError> {
    let considered: Vec<&SweepEntry<T>> = entries
        .iter()
        .filter(|e| e.moment_count <= cap)
        .collect();
    if considered.is_empty() {
        return Err(EstimatorError::EmptySweep);
    }
    for pair in considered.windows(2) {
        let (prev, cur) = (pair[0], pair[1]);
        if cur.entropy > prev.entropy {
            return Ok(prev.moment_count);
        }
        if prev.entropy - cur.entropy < eps_stop {
            return Ok(cur.moment_count);
        }
    }
    Ok(considered.last().unwrap().moment_count)
}

/// Score every adjacent transition in the sweep.
///
/// For the transition to moment count `M`, the score is
/// `delta S + sum_i |delta alpha_i| * sigma_i` where `sigma_i` is the sample
/// standard deviation of the order-`i` moment estimate (zero for the exact
/// order-0 constraint) and coefficients absent from the smaller fit
/// contribute their full magnitude. With exact moments (`sigma = 0`) the
/// score reduces to the entropy change itself.
pub fn informativeness<T: Scalar>(
    entries: &[SweepEntry<T>],
    moments: &MomentSet<T>,
) -> ICReport<T> {
    let mut report = ICReport {
        entries: Vec::new(),
    };
    for pair in entries.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        let delta_entropy = cur.entropy - prev.entropy;
        let mut allowance = T::zero();
        for (i, &alpha) in cur.alphas.iter().enumerate() {
            if i == 0 {
                continue;
            }
            let delta = alpha - prev.alphas.get(i).copied().unwrap_or(T::zero());
            let sigma = moments.std.get(i - 1).copied().unwrap_or(T::zero());
            allowance += delta.abs() * sigma;
        }
        let ic = delta_entropy + allowance;
        report.entries.push(ICEntry {
            moment_count: cur.moment_count,
            ic,
            delta_entropy,
            flagged: ic > T::zero(),
        });
    }
    report
}

/// Bound on the per-eigenvalue log-determinant error implied by a divergence
/// `kl` between the true spectral density and the fit, over a spectrum
/// supported in `[x_min, x_max]`:
///
/// `|error| / n <= max(|ln x_min|, |ln x_max|) * sqrt(2 kl)`.
pub fn error_bound<T: Scalar>(x_min: T, x_max: T, kl: T) -> Result<T, EstimatorError> {
    if !(x_min > T::zero() && x_max >= x_min && x_max.is_finite()) {
        return Err(EstimatorError::InvalidBound(format!(
            "support must satisfy 0 < x_min <= x_max < inf, got [{x_min}, {x_max}]"
        )));
    }
    if kl.is_nan() || kl < T::zero() {
        return Err(EstimatorError::InvalidBound(format!(
            "divergence must be nonnegative, got {kl}"
        )));
    }
    let reach = x_min.ln().abs().max(x_max.ln().abs());
    Ok(reach * (cast::<T>(2.0) * kl).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matio::NormalizationFactor;
    use crate::maxent::solve_maxent;
    use crate::synth;

    fn fake_entry(m: usize, entropy: f64, alphas: Vec<f64>) -> SweepEntry<f64> {
        SweepEntry {
            moment_count: m,
            entropy,
            logdet: 0.0,
            residual: 0.0,
            converged: true,
            alphas,
        }
    }

    #[test]
    fn stopping_rule_selects_on_small_drop() {
        let entries = vec![
            fake_entry(2, -0.5, vec![]),
            fake_entry(3, -0.9, vec![]),
            fake_entry(4, -0.905, vec![]),
        ];
        assert_eq!(select_moment_count(&entries, 0.01, 8).unwrap(), 4);
    }

    #[test]
    fn stopping_rule_steps_back_on_entropy_increase() {
        let entries = vec![fake_entry(2, -0.5, vec![]), fake_entry(3, -0.4, vec![])];
        assert_eq!(select_moment_count(&entries, 0.01, 8).unwrap(), 2);
    }

    #[test]
    fn stopping_rule_exhausts_to_last_count() {
        let entries = vec![
            fake_entry(2, 0.0, vec![]),
            fake_entry(3, -0.5, vec![]),
            fake_entry(4, -1.0, vec![]),
        ];
        assert_eq!(select_moment_count(&entries, 0.01, 8).unwrap(), 4);
    }

    #[test]
    fn stopping_rule_respects_cap_and_rejects_empty() {
        let entries = vec![
            fake_entry(2, 0.0, vec![]),
            fake_entry(3, -0.5, vec![]),
            fake_entry(4, -0.504, vec![]),
            fake_entry(5, -1.0, vec![]),
        ];
        assert_eq!(select_moment_count(&entries, 0.01, 4).unwrap(), 4);
        assert!(matches!(
            select_moment_count::<f64>(&[], 0.01, 8),
            Err(EstimatorError::EmptySweep)
        ));
        assert!(matches!(
            select_moment_count(&entries, 0.01, 1),
            Err(EstimatorError::EmptySweep)
        ));
    }

    #[test]
    fn informativeness_equals_entropy_change_with_exact_moments() {
        let moments = MomentSet::from_exact(100, vec![0.5, 0.3, 0.2, 0.15]);
        let entries = vec![
            fake_entry(2, -0.5, vec![-1.0, 2.0, 0.5]),
            fake_entry(3, -0.7, vec![-1.1, 2.2, 0.4, 0.3]),
        ];
        let report = informativeness(&entries, &moments);
        assert_eq!(report.entries.len(), 1);
        let entry = &report.entries[0];
        assert_eq!(entry.moment_count, 3);
        assert_eq!(entry.ic, entry.delta_entropy);
        assert!(!entry.flagged);
        assert!(!report.any_flagged());
    }

    #[test]
    fn informativeness_flags_noisy_plateau() {
        let mut moments = MomentSet::from_exact(100, vec![0.5, 0.3, 0.2, 0.15]);
        moments.std = vec![0.1; 4];
        // Entropy barely moves but the coefficients jump: the noise
        // allowance dominates and the transition is flagged.
        let entries = vec![
            fake_entry(2, -0.700, vec![-1.0, 2.0, 0.5]),
            fake_entry(3, -0.705, vec![-1.2, 2.6, -0.3, 0.9]),
        ];
        let report = informativeness(&entries, &moments);
        let entry = &report.entries[0];
        assert!(entry.delta_entropy < 0.0);
        assert!(entry.ic > 0.0);
        assert!(entry.flagged);
    }

    #[test]
    fn error_bound_matches_closed_form_and_validates() {
        let bound = error_bound(1e-3f64, 1.0, 0.02).unwrap();
        let expected = (1e-3f64).ln().abs() * (0.04f64).sqrt();
        assert!((bound - expected).abs() < 1e-12);
        assert_eq!(error_bound(0.5f64, 1.0, 0.0).unwrap(), 0.0);
        assert!(error_bound(0.0f64, 1.0, 0.1).is_err());
        assert!(error_bound(0.5f64, 0.4, 0.1).is_err());
        assert!(error_bound(0.5f64, 1.0, -0.1).is_err());
        assert!(error_bound(0.5f64, 1.0, f64::NAN).is_err());
    }

    /// Targets generated from a density inside the fitted family are
    /// recovered, and the implied log-determinant matches the density's own
    /// log expectation.
    #[test]
    fn pipeline_recovers_exponential_family_density() {
        let grid = Grid::new(1e-3f64).unwrap();
        let truth = solve_maxent(&[1.0, 0.55, 0.35], &grid, 1e-12, 200_000)
            .unwrap()
            .0;
        let n = 500usize;
        let max_moment = 6;
        let mut means = Vec::new();
        for m in 1..=max_moment {
            means.push(truth.grid_moment(m));
        }
        let moments = MomentSet::from_exact(n, means);
        let c = NormalizationFactor::supplied(2.0f64).unwrap();
        let outcome =
            logdet_from_moments(&moments, &c, &grid, 1e-8, DEFAULT_EPS_STOP).unwrap();

        let expected = n as f64
            * (grid.log_moment(truth.values()) + 2.0f64.ln());
        assert!(
            (outcome.estimate.value - expected).abs() < 1e-3,
            "{} vs {expected}",
            outcome.estimate.value
        );
        assert!(outcome.estimate.warning.is_none());
        assert!(outcome.sweep.skipped.is_empty());
        assert_eq!(
            outcome.ic.entries.len(),
            outcome.sweep.entries.len() - 1
        );
        assert_eq!(outcome.estimate.moments_used, outcome.sweep.stopping_m);
        // With exact moments the scores are the entropy changes exactly.
        for entry in &outcome.ic.entries {
            assert_eq!(entry.ic, entry.delta_entropy);
        }
    }

    /// Scaling the matrix by a power of two scales the Gershgorin bound
    /// exactly, leaves the normalized matrix bit-identical, and shifts the
    /// estimate by exactly `n ln s`.
    #[test]
    fn estimate_is_scale_equivariant() {
        let n = 400;
        let a = synth::banded_spd::<f64>(n, 2, 4.0, 6.0, 0.5, 77);
        let scaled = crate::matio::CsrMatrix::from_triplets(
            n,
            a.triplets().map(|(i, j, v)| (i, j, 4.0 * v)),
        )
        .unwrap();
        let grid = Grid::new(1e-3f64).unwrap();
        let cfg = ProbeConfig {
            num_samples: 20,
            max_moment: 6,
            seed: 5,
        };
        let base = logdet(&a, &cfg, &grid, 1e-6, DEFAULT_EPS_STOP).unwrap();
        let shifted = logdet(&scaled, &cfg, &grid, 1e-6, DEFAULT_EPS_STOP).unwrap();
        let delta = shifted.estimate.value - base.estimate.value;
        let expected = n as f64 * 4.0f64.ln();
        assert!(
            (delta - expected).abs() < 1e-9 * n as f64,
            "delta {delta} vs {expected}"
        );
        assert_eq!(
            base.estimate.moments_used,
            shifted.estimate.moments_used
        );
    }

    /// The production path stops fitting at the first stopping-rule trigger;
    /// the diagnostic path fits everything. Both must agree on the selection
    /// and the estimate, and the shorter sweep must be a prefix of the full
    /// one.
    #[test]
    fn early_stop_matches_full_sweep() {
        let a = synth::banded_spd::<f64>(300, 2, 4.0, 6.0, 0.5, 9);
        let grid = Grid::new(1e-2f64).unwrap();
        let cfg = ProbeConfig {
            num_samples: 10,
            max_moment: 8,
            seed: 3,
        };
        let quick = logdet(&a, &cfg, &grid, 1e-6, DEFAULT_EPS_STOP).unwrap();
        let full = diagnose(&a, &cfg, &grid, 1e-6, DEFAULT_EPS_STOP).unwrap();
        assert_eq!(quick.sweep.stopping_m, full.sweep.stopping_m);
        assert_eq!(quick.estimate.value, full.estimate.value);
        assert_eq!(quick.estimate.moments_used, full.estimate.moments_used);
        assert_eq!(quick.estimate.warning, full.estimate.warning);
        assert!(quick.sweep.entries.len() <= full.sweep.entries.len());
        for (short, long) in quick.sweep.entries.iter().zip(&full.sweep.entries) {
            assert_eq!(short.alphas, long.alphas);
            assert_eq!(short.entropy, long.entropy);
        }
    }

    #[test]
    fn negative_moment_estimates_fail_every_count() {
        let moments = MomentSet::from_exact(50, vec![0.5, -0.1, 0.2]);
        let c = NormalizationFactor::supplied(1.0f64).unwrap();
        let grid = Grid::new(1e-2f64).unwrap();
        let err = logdet_from_moments(&moments, &c, &grid, 1e-6, 0.01).unwrap_err();
        assert!(matches!(
            err,
            EstimatorError::AllMomentCountsFailed { .. }
        ));
    }

    #[test]
    fn infeasible_moments_fall_back_with_warning() {
        // mu_2 = mu_1 forces all mass to {0, 1}, which the open-interval
        // grid cannot represent: nothing converges, the best effort is
        // reported with a warning.
        let moments = MomentSet::from_exact(50, vec![0.5, 0.5]);
        let c = NormalizationFactor::supplied(1.0f64).unwrap();
        let grid = Grid::new(1e-2f64).unwrap();
        let outcome = logdet_from_moments(&moments, &c, &grid, 1e-9, 0.01).unwrap();
        let warning = outcome.estimate.warning.expect("must warn");
        assert!(warning.contains("converge"), "{warning}");
        assert!(!outcome.sweep.entries.is_empty());
    }

    #[test]
    fn rejects_undersized_or_inconsistent_moment_sets() {
        let c = NormalizationFactor::supplied(1.0f64).unwrap();
        let grid = Grid::new(1e-2f64).unwrap();
        let single = MomentSet::from_exact(10, vec![0.5]);
        assert!(matches!(
            logdet_from_moments(&single, &c, &grid, 1e-6, 0.01),
            Err(EstimatorError::InsufficientMoments { .. })
        ));
        let mut broken = MomentSet::from_exact(10, vec![0.5, 0.3]);
        broken.std.pop();
        assert!(matches!(
            logdet_from_moments(&broken, &c, &grid, 1e-6, 0.01),
            Err(EstimatorError::InvalidMoments(_))
        ));
        let mut empty_n = MomentSet::from_exact(10, vec![0.5, 0.3]);
        empty_n.n = 0;
        assert!(matches!(
            logdet_from_moments(&empty_n, &c, &grid, 1e-6, 0.01),
            Err(EstimatorError::InvalidMoments(_))
        ));
    }
}
