//! Scalar abstraction shared by the model builder, the bound formulas, the LP
//! engine and the branch-and-bound.
//!
//! Floating-point scalars carry the usual simplex tolerances; exact rationals
//! use zero tolerances, which turns the same code into an exact solver for
//! small cross-checks.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

pub trait Scalar:
    Clone + Debug + Display + PartialOrd + Num + Signed + Send + Sync + 'static
{
    /// Magnitudes at or below this are treated as structural zeros.
    fn zero_tol() -> Self;
    /// Bound violation tolerated on primal values.
    fn feas_tol() -> Self;
    /// Reduced-cost tolerance for optimality.
    fn opt_tol() -> Self;
    /// Distance to the nearest integer accepted as integral.
    fn int_tol() -> Self;
    /// Slack added before `floor` and removed before `ceil` in the bound
    /// formulas so representation error cannot drop a valid integer.
    fn rounding_guard() -> Self;
    /// Whether arithmetic is exact (no tolerances needed).
    fn is_exact() -> bool;

    fn floor(&self) -> Self;
    fn ceil(&self) -> Self;
    fn round(&self) -> Self;

    /// Converts a finite `f64`; rationals take the exact binary value.
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;

    fn from_i64(x: i64) -> Self;

    fn half() -> Self {
        Self::one() / (Self::one() + Self::one())
    }

    fn is_negligible(&self) -> bool {
        self.abs() <= Self::zero_tol()
    }

    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if a <= b {
            a
        } else {
            b
        }
    }

    /// `floor(self + guard)`.
    fn guarded_floor(&self) -> Self {
        (self.clone() + Self::rounding_guard()).floor()
    }

    /// `ceil(self - guard)`.
    fn guarded_ceil(&self) -> Self {
        (self.clone() - Self::rounding_guard()).ceil()
    }
}

impl Scalar for f64 {
    fn zero_tol() -> Self {
        1e-11
    }
    fn feas_tol() -> Self {
        1e-8
    }
    fn opt_tol() -> Self {
        1e-9
    }
    fn int_tol() -> Self {
        1e-6
    }
    fn rounding_guard() -> Self {
        1e-9
    }
    fn is_exact() -> bool {
        false
    }
    fn floor(&self) -> Self {
        f64::floor(*self)
    }
    fn ceil(&self) -> Self {
        f64::ceil(*self)
    }
    fn round(&self) -> Self {
        f64::round(*self)
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn from_i64(x: i64) -> Self {
        x as f64
    }
    fn half() -> Self {
        0.5
    }
}

impl Scalar for f32 {
    fn zero_tol() -> Self {
        1e-6
    }
    fn feas_tol() -> Self {
        1e-4
    }
    fn opt_tol() -> Self {
        1e-5
    }
    fn int_tol() -> Self {
        1e-3
    }
    fn rounding_guard() -> Self {
        1e-5
    }
    fn is_exact() -> bool {
        false
    }
    fn floor(&self) -> Self {
        f32::floor(*self)
    }
    fn ceil(&self) -> Self {
        f32::ceil(*self)
    }
    fn round(&self) -> Self {
        f32::round(*self)
    }
    fn from_f64(x: f64) -> Self {
        x as f32
    }
    fn to_f64(&self) -> f64 {
        *self as f64
    }
    fn from_i64(x: i64) -> Self {
        x as f32
    }
    fn half() -> Self {
        0.5
    }
}

impl Scalar for BigRational {
    fn zero_tol() -> Self {
        Self::zero()
    }
    fn feas_tol() -> Self {
        Self::zero()
    }
    fn opt_tol() -> Self {
        Self::zero()
    }
    fn int_tol() -> Self {
        Self::zero()
    }
    fn rounding_guard() -> Self {
        Self::zero()
    }
    fn is_exact() -> bool {
        true
    }
    fn floor(&self) -> Self {
        BigRational::floor(self)
    }
    fn ceil(&self) -> Self {
        BigRational::ceil(self)
    }
    fn round(&self) -> Self {
        BigRational::round(self)
    }
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite value")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn from_i64(x: i64) -> Self {
        BigRational::from_integer(BigInt::from_i64(x).expect("i64 fits"))
    }
    fn half() -> Self {
        BigRational::new(BigInt::one(), BigInt::from(2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn guarded_rounding_absorbs_representation_error() {
        // 0.1 + 0.2 lands just above 0.3; 3 * (0.1 + 0.2) / 0.9 is 1.0000000000000002
        let x = (0.1f64 + 0.2) * 10.0 / 3.0;
        assert_eq!(x.guarded_floor(), 1.0);
        let y = 1.0f64 - 1e-12;
        assert_eq!(y.guarded_floor(), 1.0);
        assert_eq!((1.0f64 + 1e-12).guarded_ceil(), 1.0);
    }

    #[test]
    fn rationals_are_exact() {
        let half = <BigRational as Scalar>::half();
        let x = <BigRational as Scalar>::from_f64(0.5);
        assert_eq!(half, x);
        assert_eq!(Scalar::floor(&(x.clone() + BigRational::one())), BigRational::one());
        assert!(<BigRational as Scalar>::is_exact());
        assert_eq!(Scalar::to_f64(&x), 0.5);
    }

    #[test]
    fn f32_round_trips_simple_values() {
        assert_eq!(Scalar::to_f64(&<f32 as Scalar>::from_f64(0.25)), 0.25);
        assert_eq!(Scalar::floor(&1.75f32), 1.0);
    }
}
