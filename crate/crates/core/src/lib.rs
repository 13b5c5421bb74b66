//! Log-determinant estimation for large sparse symmetric positive-definite
//! matrices.
//!
//! The estimator never factorizes the input. It combines three ingredients:
//!
//! 1. **Moment probing** ([`probe`]): Hutchinson-style stochastic trace
//!    estimation with Gaussian probe vectors yields the normalized spectral
//!    moments `mu_m = Tr(B^m) / n` of `B = A / c`, where `c` is a Gershgorin
//!    upper bound on the spectrum so that the eigenvalues of `B` lie in
//!    `(0, 1]`.
//! 2. **Density reconstruction** ([`maxent`]): the maximum-entropy density on
//!    a unit-interval grid consistent with those moments is found by cyclic
//!    coordinate ascent on the exponential-family coefficients.
//! 3. **Model selection** ([`estimator`]): moment counts are swept upward and
//!    the sweep stops when the entropy of the reconstruction stops falling,
//!    with a noise-corrected informativeness score flagging moments whose
//!    contribution is indistinguishable from sampling error. The estimate is
//!    `n * E_q[log lambda] + n * log c` under the reconstructed density `q`.
//!
//! [`matio`] supplies Matrix Market parsing and CSR storage, [`oracle`] exact
//! dense references for validation, and [`synth`] reproducible synthetic
//! fixtures.
//!
//! All numerical routines are generic over the floating-point type through
//! the [`Scalar`] trait (`f32` or `f64`); the `*64` aliases at the crate root
//! pick the double-precision instantiations used by the CLI. Randomized
//! routines draw from ChaCha8 (`rand_chacha::ChaCha8Rng`), a portable counter
//! RNG whose output is identical across platforms; each probe sample uses its
//! own ChaCha8 stream so results do not depend on evaluation order.

pub mod estimator;
pub mod matio;
pub mod maxent;
pub mod oracle;
pub mod probe;
pub mod scalar;
pub mod synth;

pub use scalar::Scalar;

/// Double-precision sparse symmetric matrix.
pub type CsrMatrix64 = matio::CsrMatrix<f64>;
/// Double-precision normalization factor.
pub type NormalizationFactor64 = matio::NormalizationFactor<f64>;
/// Double-precision moment estimates.
pub type MomentSet64 = probe::MomentSet<f64>;
/// Double-precision reconstruction grid.
pub type Grid64 = maxent::Grid<f64>;
/// Double-precision grid density.
pub type GridDensity64 = maxent::GridDensity<f64>;
/// Double-precision maximum-entropy density.
pub type MaxEntDensity64 = maxent::MaxEntDensity<f64>;
/// Double-precision estimate with diagnostics.
pub type LogDetOutcome64 = estimator::LogDetOutcome<f64>;
/// Double-precision exact spectrum.
pub type DenseSpectrum64 = oracle::DenseSpectrum<f64>;

/// Single-precision sparse symmetric matrix.
pub type CsrMatrix32 = matio::CsrMatrix<f32>;
/// Single-precision moment estimates.
pub type MomentSet32 = probe::MomentSet<f32>;
/// Single-precision reconstruction grid.
pub type Grid32 = maxent::Grid<f32>;
