//! Scalar abstractions.
//!
//! [`Scalar`] is an ordered field: enough for joint distributions, centering and the
//! very-noisy inner-product geometry, which therefore also run over exact rationals.
//! [`Real`] adds the transcendental functions needed by divergences and solvers.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::Neg;

use num_rational::Rational64;
use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// Ordered field element usable throughout the crate.
pub trait Scalar:
    Num + Neg<Output = Self> + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Absolute slack allowed when validating sums to one and other equalities.
    fn validation_tol() -> Self;

    /// Two values closer than this are treated as tied.
    fn tie_tol() -> Self;

    /// Converts a literal; panics only if the type cannot represent it at all.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).unwrap_or_else(|| panic!("{x} is not representable"))
    }

    fn abs_val(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

/// Floating-point scalar with logarithms, used by every divergence-based routine.
pub trait Real: Scalar + Float + Sum {
    /// Clamps a requested solver tolerance to something the type can resolve.
    fn resolvable(tol: f64) -> Self {
        Self::lit(tol).max(Self::epsilon() * Self::lit(64.0))
    }
}

impl Scalar for f64 {
    fn validation_tol() -> Self {
        1e-12
    }
    fn tie_tol() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    fn validation_tol() -> Self {
        1e-5
    }
    fn tie_tol() -> Self {
        1e-5
    }
}

impl Real for f64 {}
impl Real for f32 {}

impl Scalar for Rational64 {
    fn validation_tol() -> Self {
        Rational64::from_integer(0)
    }
    fn tie_tol() -> Self {
        Rational64::from_integer(0)
    }
}

/// Sum of `a[i] * b[i]`.
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub(crate) fn total<T: Scalar>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |acc, &x| acc + x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_literals_are_exact_for_dyadics() {
        let half = Rational64::lit(0.5);
        assert_eq!(half, Rational64::new(1, 2));
        assert_eq!(Rational64::tie_tol(), Rational64::from_integer(0));
    }

    #[test]
    fn resolvable_clamps_to_precision() {
        assert_eq!(f64::resolvable(1e-10), 1e-10);
        assert!(f32::resolvable(1e-10) > 1e-6);
    }

    #[test]
    fn helpers() {
        assert_eq!((-2.0f64).abs_val(), 2.0);
        assert_eq!(3.0f64.max_of(4.0), 4.0);
        assert_eq!(dot(&[1.0, 2.0], &[3.0, 4.0]), 11.0);
        assert_eq!(total(&[Rational64::new(1, 3), Rational64::new(2, 3)]), Rational64::from_integer(1));
    }
}
