//! Maximum-entropy reconstruction of a spectral density on the unit interval.
//!
//! Given normalized power moments `mu_0..mu_M` of a distribution supported on
//! `(0, 1]`, the routines here find the density of maximum Shannon entropy
//! with those moments. The solution has exponential-family form
//! `q(x) = exp(-1 - sum_k alpha_k x^k)`, and all quadrature runs on a uniform
//! midpoint grid `x_j = (j + 1/2) dx`, which keeps `log x` finite at every
//! node. The module also provides the entropy and Kullback-Leibler
//! functionals on that grid and the Pinsker-style bounds used to convert a
//! divergence into total-variation and log-moment error bounds.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{cast, Scalar};

/// Default grid spacing: 1000 nodes on the unit interval.
pub const DEFAULT_GRID_DX: f64 = 1e-3;
/// Largest permitted grid spacing (at least 100 nodes).
pub const MAX_GRID_DX: f64 = 1e-2;
/// Default convergence tolerance on the worst absolute moment residual.
pub const DEFAULT_TOL: f64 = 1e-6;
/// Default budget of coordinate-ascent cycles.
pub const DEFAULT_MAX_ITERS: usize = 100_000;

/// Cycle window over which the best residual must improve for the solver to
/// keep going.
const STAGNATION_WINDOW: usize = 1_000;
/// Relative improvement of the best residual, per window, that counts as
/// progress. Measured over the whole window so slow steady convergence is
/// not mistaken for stagnation.
const STAGNATION_RTOL: f64 = 1e-3;

/// Errors from grid construction, fitting, and divergence evaluation.
#[derive(Debug, Error)]
pub enum MaxEntError {
    #[error("grid spacing must satisfy 0 < dx <= {max}, got {got}")]
    InvalidGridSpacing { got: f64, max: f64 },
    #[error("invalid moment vector: {0}")]
    InvalidMoments(String),
    #[error("invalid initial coefficients: {0}")]
    InvalidInit(String),
    #[error("coefficient alpha[{index}] became non-finite while fitting; the moment constraints are numerically unreachable")]
    NonFiniteCoefficient { index: usize },
    #[error("densities live on different grids")]
    GridMismatch,
    #[error("invalid density: {0}")]
    InvalidDensity(String),
    #[error("expected a nonnegative finite value, got {0}")]
    NegativeInput(f64),
}

/// Uniform midpoint grid on the unit interval.
///
/// Nodes are `x_j = (j + 1/2) dx` for `j = 0..round(1/dx)`, all strictly
/// inside `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    dx: T,
    nodes: Vec<T>,
}

impl<T: Scalar> Grid<T> {
    /// Build a grid with spacing `dx`, where `0 < dx <= 0.01`.
    pub fn new(dx: T) -> Result<Self, MaxEntError> {
        let dx_f = dx.to_f64().unwrap_or(f64::NAN);
        if !(dx_f.is_finite() && dx_f > 0.0 && dx_f <= MAX_GRID_DX) {
            return Err(MaxEntError::InvalidGridSpacing {
                got: dx_f,
                max: MAX_GRID_DX,
            });
        }
        let count = (1.0 / dx_f).round() as usize;
        let half = cast::<T>(0.5);
        let nodes = (0..count)
            .map(|j| (T::from_usize(j).unwrap() + half) * dx)
            .collect();
        Ok(Self { dx, nodes })
    }

    /// Grid with the default spacing [`DEFAULT_GRID_DX`].
    pub fn with_default_spacing() -> Self {
        Self::new(cast(DEFAULT_GRID_DX)).expect("default spacing is valid")
    }

    /// Node spacing.
    pub fn dx(&self) -> T {
        self.dx
    }

    /// Node positions.
    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// True when the grid has no nodes (never, for a validated grid).
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Smallest node, `dx / 2`.
    pub fn x_min(&self) -> T {
        self.nodes[0]
    }

    /// Largest node, `1 - dx / 2`.
    pub fn x_max(&self) -> T {
        *self.nodes.last().unwrap()
    }

    /// Riemann sum `sum_j values_j dx`.
    pub fn integrate(&self, values: &[T]) -> T {
        let mut acc = T::zero();
        for &v in values {
            acc += v;
        }
        acc * self.dx
    }

    /// Power moment `sum_j x_j^order values_j dx`.
    pub fn moment(&self, values: &[T], order: usize) -> T {
        let mut acc = T::zero();
        for (&x, &v) in self.nodes.iter().zip(values) {
            acc += x.powi(order as i32) * v;
        }
        acc * self.dx
    }

    /// All power moments of orders `0..=max_order` in one pass.
    pub fn moments(&self, values: &[T], max_order: usize) -> Vec<T> {
        let mut acc = vec![T::zero(); max_order + 1];
        for (&x, &v) in self.nodes.iter().zip(values) {
            let mut xp = T::one();
            for slot in acc.iter_mut() {
                *slot += xp * v;
                xp *= x;
            }
        }
        for slot in acc.iter_mut() {
            *slot *= self.dx;
        }
        acc
    }

    /// Log-moment `sum_j ln(x_j) values_j dx`.
    ///
    /// Midpoint nodes keep the logarithm finite; the cell touching the origin
    /// carries a truncation bias of order `values(0+) * dx * |log dx|`.
    pub fn log_moment(&self, values: &[T]) -> T {
        let mut acc = T::zero();
        for (&x, &v) in self.nodes.iter().zip(values) {
            acc += x.ln() * v;
        }
        acc * self.dx
    }

    /// Shannon entropy `-sum_j v_j ln(v_j) dx`, with `0 ln 0 = 0`.
    pub fn entropy(&self, values: &[T]) -> T {
        let mut acc = T::zero();
        for &v in values {
            if v > T::zero() {
                acc -= v * v.ln();
            }
        }
        acc * self.dx
    }
}

/// A nonnegative function sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity<T> {
    grid: Grid<T>,
    values: Vec<T>,
}

impl<T: Scalar> GridDensity<T> {
    /// Wrap values on a grid, rejecting negative or non-finite entries and
    /// length mismatches.
    pub fn new(grid: Grid<T>, values: Vec<T>) -> Result<Self, MaxEntError> {
        if values.len() != grid.len() {
            return Err(MaxEntError::InvalidDensity(format!(
                "expected {} values for the grid, got {}",
                grid.len(),
                values.len()
            )));
        }
        for (j, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < T::zero() {
                return Err(MaxEntError::InvalidDensity(format!(
                    "value at node {j} is {v:?}"
                )));
            }
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Total mass `sum_j v_j dx`.
    pub fn mass(&self) -> T {
        self.grid.integrate(&self.values)
    }

    /// Shannon entropy of the density.
    pub fn entropy(&self) -> T {
        self.grid.entropy(&self.values)
    }

    /// Expectation of `ln x` under the density.
    pub fn expectation_log(&self) -> T {
        self.grid.log_moment(&self.values)
    }

    /// Power moment of the density.
    pub fn moment(&self, order: usize) -> T {
        self.grid.moment(&self.values, order)
    }

    /// Total-variation distance `1/2 sum_j |p_j - q_j| dx`.
    pub fn total_variation_distance(&self, other: &Self) -> Result<T, MaxEntError> {
        if self.grid != other.grid {
            return Err(MaxEntError::GridMismatch);
        }
        let mut acc = T::zero();
        for (&p, &q) in self.values.iter().zip(&other.values) {
            acc += (p - q).abs();
        }
        Ok(acc * self.grid.dx / cast(2.0))
    }
}

/// Exponential-family density fitted to a set of moments.
#[derive(Debug, Clone)]
pub struct MaxEntDensity<T> {
    alphas: Vec<T>,
    grid: Grid<T>,
    values: Vec<T>,
}

impl<T: Scalar> MaxEntDensity<T> {
    /// Exponential-family coefficients `alpha_0..alpha_M`.
    pub fn alphas(&self) -> &[T] {
        &self.alphas
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    /// Density values at the grid nodes.
    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Shannon entropy by grid quadrature.
    pub fn entropy(&self) -> T {
        self.grid.entropy(&self.values)
    }

    /// The density's own grid moment of the given order.
    pub fn grid_moment(&self, order: usize) -> T {
        self.grid.moment(&self.values, order)
    }

    /// Entropy through the algebraic identity
    /// `S = mass + sum_k alpha_k <x^k>`, where `<x^k>` are the density's own
    /// grid moments. Agrees with [`Self::entropy`] up to clamping.
    pub fn entropy_identity(&self) -> T {
        let moments = self.grid.moments(&self.values, self.alphas.len() - 1);
        let mut acc = moments[0];
        for (a, m) in self.alphas.iter().zip(&moments) {
            acc += *a * *m;
        }
        acc
    }

    /// View as a plain grid density (clones the values).
    pub fn as_grid_density(&self) -> GridDensity<T> {
        GridDensity {
            grid: self.grid.clone(),
            values: self.values.clone(),
        }
    }

    /// Write the density as two-column CSV `x,q`.
    pub fn write_csv<W: Write>(&self, writer: &mut W) -> std::io::Result<()> {
        writeln!(writer, "x,q")?;
        for (x, q) in self.grid.nodes().iter().zip(&self.values) {
            writeln!(writer, "{x:e},{q:e}")?;
        }
        Ok(())
    }
}

/// Outcome of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxEntReport<T> {
    /// Worst residual reached the tolerance and no positive exponent clamp
    /// was active in the returned density.
    pub converged: bool,
    /// Coordinate-ascent cycles executed.
    pub iterations: usize,
    /// Worst absolute moment residual of the returned density.
    pub residual: T,
    /// Entropy of the returned density.
    pub entropy: T,
}

/// Serializable summary of a fitted density:
/// `{alphas, dx, entropy, residual, converged}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxEntSummary<T> {
    pub alphas: Vec<T>,
    pub dx: T,
    pub entropy: T,
    pub residual: T,
    pub converged: bool,
}

impl<T: Scalar> MaxEntSummary<T> {
    pub fn new(density: &MaxEntDensity<T>, report: &MaxEntReport<T>) -> Self {
        Self {
            alphas: density.alphas().to_vec(),
            dx: density.grid().dx(),
            entropy: report.entropy,
            residual: report.residual,
            converged: report.converged,
        }
    }
}

/// Fit the maximum-entropy density for `moments[0..=M]` starting from
/// all-zero coefficients.
///
/// `moments[0]` is the normalization constraint (1 for a probability
/// density). The solver runs cyclic coordinate ascent: with the current
/// density's own moment `m_i`, the update `alpha_i += ln(m_i / mu_i)` is
/// exact for the order-0 constraint and moves every moment toward its target,
/// because each moment is strictly decreasing in its own coefficient. The
/// loop ends when the worst absolute residual drops to `tol`, the cycle
/// budget `max_iters` runs out, or the residual stops improving for
/// [`STAGNATION_WINDOW`] cycles; in the last two cases the best iterate is
/// returned with `converged = false` rather than an error.
///
/// Density exponents are clamped at [`Scalar::exponent_clamp`] before
/// exponentiation. A clamp on the positive side means the quadrature no
/// longer reflects the coefficients, so it also marks the fit non-converged;
/// clamping on the negative side merely rounds a vanishing density value
/// toward zero and is harmless.
pub fn solve_maxent<T: Scalar>(
    moments: &[T],
    grid: &Grid<T>,
    tol: T,
    max_iters: usize,
) -> Result<(MaxEntDensity<T>, MaxEntReport<T>), MaxEntError> {
    let init = vec![T::zero(); moments.len()];
    solve_maxent_warm(moments, grid, tol, max_iters, &init)
}

/// Like [`solve_maxent`], but starting from standard-normal random
/// coefficients drawn from a ChaCha8 stream seeded with `seed`.
pub fn solve_maxent_seeded<T: Scalar>(
    moments: &[T],
    grid: &Grid<T>,
    tol: T,
    max_iters: usize,
    seed: u64,
) -> Result<(MaxEntDensity<T>, MaxEntReport<T>), MaxEntError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init: Vec<T> = (0..moments.len())
        .map(|_| T::standard_normal(&mut rng))
        .collect();
    solve_maxent_warm(moments, grid, tol, max_iters, &init)
}

/// Like [`solve_maxent`], but starting from caller-supplied coefficients
/// (for example the solution at a smaller moment count, padded with zeros).
pub fn solve_maxent_warm<T: Scalar>(
    moments: &[T],
    grid: &Grid<T>,
    tol: T,
    max_iters: usize,
    init: &[T],
) -> Result<(MaxEntDensity<T>, MaxEntReport<T>), MaxEntError> {
    validate_moments(moments)?;
    if init.len() != moments.len() {
        return Err(MaxEntError::InvalidInit(format!(
            "expected {} coefficients, got {}",
            moments.len(),
            init.len()
        )));
    }
    if let Some(bad) = init.iter().find(|a| !a.is_finite()) {
        return Err(MaxEntError::InvalidInit(format!(
            "non-finite coefficient {bad:?}"
        )));
    }
    if !(tol.is_finite() && tol > T::zero()) {
        return Err(MaxEntError::InvalidMoments(format!(
            "tolerance must be positive and finite, got {tol:?}"
        )));
    }

    let order = moments.len() - 1;
    let nodes = grid.nodes();
    let mut alphas = init.to_vec();
    let mut q = vec![T::zero(); nodes.len()];

    let mut clamped = evaluate_density(&alphas, nodes, &mut q);
    let mut residual = worst_residual(&grid.moments(&q, order), moments);

    let mut best_alphas = alphas.clone();
    let mut best_residual = residual;
    let mut best_clamped = clamped;
    let mut cycles = 0usize;
    let mut window_start = 0usize;
    let mut window_anchor = best_residual;
    let progress_factor = T::one() - cast::<T>(STAGNATION_RTOL);

    // negated comparison so a NaN residual keeps iterating toward the budget
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    while !(residual <= tol) && cycles < max_iters {
        for i in 0..=order {
            let m_i = grid.moment(&q, i);
            let delta = (m_i / moments[i]).ln();
            alphas[i] += delta;
            if !alphas[i].is_finite() {
                return Err(MaxEntError::NonFiniteCoefficient { index: i });
            }
            clamped = evaluate_density(&alphas, nodes, &mut q);
        }
        cycles += 1;
        residual = worst_residual(&grid.moments(&q, order), moments);
        if residual < best_residual {
            best_residual = residual;
            best_alphas.copy_from_slice(&alphas);
            best_clamped = clamped;
        }
        if cycles - window_start >= STAGNATION_WINDOW {
            if best_residual > window_anchor * progress_factor {
                break;
            }
            window_anchor = best_residual;
            window_start = cycles;
        }
    }

    let final_clamped = evaluate_density(&best_alphas, nodes, &mut q);
    debug_assert_eq!(final_clamped, best_clamped);
    let density = MaxEntDensity {
        alphas: best_alphas,
        grid: grid.clone(),
        values: q,
    };
    let entropy = density.entropy();
    let report = MaxEntReport {
        converged: best_residual <= tol && !best_clamped,
        iterations: cycles,
        residual: best_residual,
        entropy,
    };
    Ok((density, report))
}

fn validate_moments<T: Scalar>(moments: &[T]) -> Result<(), MaxEntError> {
    if moments.is_empty() {
        return Err(MaxEntError::InvalidMoments("empty moment vector".into()));
    }
    for (i, &mu) in moments.iter().enumerate() {
        if !mu.is_finite() || mu <= T::zero() {
            return Err(MaxEntError::InvalidMoments(format!(
                "moment {i} is {mu:?}; moments of a distribution on (0, 1] must be positive"
            )));
        }
    }
    let one = T::one();
    if moments.iter().any(|&mu| mu > one) {
        log::warn!("moment target above 1; spectrum mass outside (0, 1] or sampling noise");
    }
    if moments.windows(2).any(|w| w[1] > w[0]) {
        log::warn!("moment targets are not nonincreasing; sampling noise or an invalid spectrum");
    }
    Ok(())
}

/// Evaluate `q_j = exp(-1 - sum_k alpha_k x_j^k)` with exponent clamping.
/// Returns whether the positive clamp was hit anywhere.
fn evaluate_density<T: Scalar>(alphas: &[T], nodes: &[T], q: &mut [T]) -> bool {
    let clamp = T::exponent_clamp();
    let mut clamped_positive = false;
    for (slot, &x) in q.iter_mut().zip(nodes) {
        let mut poly = T::zero();
        for &a in alphas.iter().rev() {
            poly = poly * x + a;
        }
        let mut exponent = -T::one() - poly;
        if exponent > clamp {
            exponent = clamp;
            clamped_positive = true;
        } else if exponent < -clamp {
            exponent = -clamp;
        }
        *slot = exponent.exp();
    }
    clamped_positive
}

fn worst_residual<T: Scalar>(achieved: &[T], targets: &[T]) -> T {
    let mut worst = T::zero();
    for (&m, &mu) in achieved.iter().zip(targets) {
        worst = worst.max((m - mu).abs());
    }
    worst
}

/// Kullback-Leibler divergence `D(p || q) = sum_j p_j ln(p_j / q_j) dx` in
/// nats.
///
/// Terms with `p_j = 0` contribute zero; a node with `p_j > 0` and `q_j = 0`
/// makes the divergence infinite, which is returned as `+inf` rather than an
/// error. Both densities must share the grid and carry unit mass within
/// `1e-4`: the gate rejects unnormalized input while tolerating the residual
/// mass drift of a fit that stopped near its tolerance.
pub fn kl_divergence<T: Scalar>(p: &GridDensity<T>, q: &GridDensity<T>) -> Result<T, MaxEntError> {
    if p.grid != q.grid {
        return Err(MaxEntError::GridMismatch);
    }
    let mass_tol = cast::<T>(1e-4);
    for (name, density) in [("p", p), ("q", q)] {
        let mass = density.mass();
        if (mass - T::one()).abs() > mass_tol {
            return Err(MaxEntError::InvalidDensity(format!(
                "{name} has mass {mass} but must be normalized within {mass_tol}"
            )));
        }
    }
    let mut acc = T::zero();
    for (&pv, &qv) in p.values.iter().zip(&q.values) {
        if pv > T::zero() {
            if qv <= T::zero() {
                return Ok(T::infinity());
            }
            acc += pv * (pv / qv).ln();
        }
    }
    Ok(acc * p.grid.dx)
}

/// Pinsker bound on total-variation distance: `TV <= sqrt(kl / 2)`.
pub fn total_variation_bound<T: Scalar>(kl: T) -> Result<T, MaxEntError> {
    if kl < T::zero() || kl.is_nan() {
        return Err(MaxEntError::NegativeInput(kl.to_f64().unwrap_or(f64::NAN)));
    }
    Ok((kl / cast(2.0)).sqrt())
}

/// Companion L1-norm form of the Pinsker bound: `|p - q|_1 <= sqrt(2 kl)`.
pub fn l1_bound<T: Scalar>(kl: T) -> Result<T, MaxEntError> {
    if kl < T::zero() || kl.is_nan() {
        return Err(MaxEntError::NegativeInput(kl.to_f64().unwrap_or(f64::NAN)));
    }
    Ok((cast::<T>(2.0) * kl).sqrt())
}
