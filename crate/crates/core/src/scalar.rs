//! Floating-point abstraction shared by every numerical routine in the crate.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Floating-point scalar usable throughout the estimator.
///
/// Implemented for `f32` and `f64`. The supertraits cover arithmetic,
/// transcendental functions, conversions, and formatting; the two methods
/// below cover what `num_traits` does not: drawing standard-normal variates
/// and the type-appropriate exponent clamp for density evaluation.
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + num_traits::NumAssign
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + std::fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    /// Magnitude at which density exponents are clamped before calling `exp`,
    /// chosen so `exp(clamp)` stays finite with headroom for quadrature sums.
    fn exponent_clamp() -> Self;

    /// Draw one standard-normal variate from `rng`.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Scalar for f64 {
    fn exponent_clamp() -> Self {
        700.0
    }

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

impl Scalar for f32 {
    fn exponent_clamp() -> Self {
        80.0
    }

    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

/// Convert an `f64` constant to `T`, panicking only if the target type cannot
/// represent any nearby value (never the case for f32/f64).
pub(crate) fn cast<T: Scalar>(value: f64) -> T {
    T::from_f64(value).expect("constant representable in scalar type")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exponent_clamp_is_exp_safe() {
        assert!(f64::exponent_clamp().exp().is_finite());
        assert!(f32::exponent_clamp().exp().is_finite());
    }

    #[test]
    fn standard_normal_is_deterministic_per_seed() {
        let mut a = ChaCha8Rng::seed_from_u64(42);
        let mut b = ChaCha8Rng::seed_from_u64(42);
        let xa: Vec<f64> = (0..8).map(|_| f64::standard_normal(&mut a)).collect();
        let xb: Vec<f64> = (0..8).map(|_| f64::standard_normal(&mut b)).collect();
        assert_eq!(xa, xb);
    }

    #[test]
    fn standard_normal_moments_are_plausible() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 20_000;
        let xs: Vec<f64> = (0..n).map(|_| f64::standard_normal(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 0.03, "mean {mean} too far from 0");
        assert!((var - 1.0).abs() < 0.05, "variance {var} too far from 1");
    }
}
