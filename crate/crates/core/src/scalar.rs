//! Floating-point scalar abstraction shared by the energy functionals and samplers.

use std::fmt::{Debug, Display};

/// Floating point scalar used by the Monte Carlo engines and observables.
///
/// Implemented for [`f32`] and [`f64`]. Exact arithmetic (rationals) is only
/// supported by the parameter algebra in [`crate::model`], which is written
/// against [`num_traits::Num`] instead.
pub trait Real:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`, used for schedule controls and literals.
    fn lit(x: f64) -> Self;

    fn as_f64(self) -> f64;

    /// Uniform draw in `[0, 1)` from a 64-bit generator.
    fn unit<R: rand::RngCore + ?Sized>(rng: &mut R) -> Self;
}

impl Real for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }

    #[inline]
    fn unit<R: rand::RngCore + ?Sized>(rng: &mut R) -> Self {
        // 24 high bits -> exactly representable in f32
        (rng.next_u32() >> 8) as f32 * (1.0 / (1u32 << 24) as f32)
    }
}

impl Real for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }

    #[inline]
    fn unit<R: rand::RngCore + ?Sized>(rng: &mut R) -> Self {
        (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn unit_draws_stay_in_half_open_interval() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let a = <f64 as Real>::unit(&mut rng);
            let b = <f32 as Real>::unit(&mut rng);
            assert!((0.0..1.0).contains(&a));
            assert!((0.0..1.0).contains(&b));
        }
    }
}
