//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar representable as f64")
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Unnormalised sinc, `sin(z)/z` with `sinc(0) = 1`.
pub fn sinc<T: Real>(z: T) -> T {
    if z.abs() < T::lit(1e-4) {
        let z2 = z * z;
        T::one() - z2 / T::lit(6.0) + z2 * z2 / T::lit(120.0)
    } else {
        z.sin() / z
    }
}

/// Converts a loss in dB to a power transmission factor.
pub fn db_to_power<T: Real>(db: T) -> T {
    T::lit(10.0).powf(-db / T::lit(10.0))
}

/// Converts a gain/efficiency quoted in dB (negative for loss) to a fraction.
pub fn db_to_fraction<T: Real>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinc_is_continuous_across_series_cutoff() {
        let below = sinc(0.999_999e-4_f64);
        let above = sinc(1.000_001e-4_f64);
        assert!((below - above).abs() < 1e-12);
        assert_eq!(sinc(0.0_f64), 1.0);
        assert!((sinc(std::f64::consts::PI)).abs() < 1e-15);
    }

    #[test]
    fn db_conversions() {
        assert!((db_to_fraction(-24.2_f64) - 3.801_893_963_205_6e-3).abs() < 1e-15);
        assert!((db_to_power(2.132_f64) - 0.612_068_458_870_46).abs() < 1e-12);
        assert!((db_to_fraction(-11.0_f32) - 0.079_432_82).abs() < 1e-7);
    }
}
