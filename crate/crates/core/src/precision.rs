//! Working precision for moment and Hankel arithmetic.
//!
//! Hankel moment matrices lose roughly a factor of ten in conditioning per
//! extra moment, so problems beyond [`EXTENDED_ABOVE_K`] switch from `f64`
//! to double-double ([`TwoFloat`]).

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, ToPrimitive};
use twofloat::TwoFloat;

/// Problems with `k` larger than this run in double-double.
pub const EXTENDED_ABOVE_K: usize = 6;

pub fn needs_extended(k: usize) -> bool {
    k > EXTENDED_ABOVE_K
}

/// Floating types the moment code is generic over.
pub trait Scalar: Float + Debug + Send + Sync + 'static {
    fn from_dd(x: TwoFloat) -> Self;
    fn to_dd(self) -> TwoFloat;
    fn of(x: f64) -> Self;
    fn as_f64(self) -> f64;
    /// Relative pivot below which a Hankel matrix is treated as singular.
    fn pivot_tolerance() -> f64;
    /// Relative rounding error of one operation.
    fn unit_roundoff() -> f64;
    /// Correctly rounded quotient. `TwoFloat`'s `/` by a double-double
    /// divisor is only accurate to about 1e-16, so generic code divides
    /// through this instead.
    fn quot(self, rhs: Self) -> Self;
}

impl Scalar for f64 {
    fn from_dd(x: TwoFloat) -> Self {
        x.hi() + x.lo()
    }
    fn to_dd(self) -> TwoFloat {
        TwoFloat::from(self)
    }
    fn of(x: f64) -> Self {
        x
    }
    fn as_f64(self) -> f64 {
        self
    }
    fn pivot_tolerance() -> f64 {
        1e-12
    }
    fn unit_roundoff() -> f64 {
        f64::EPSILON
    }
    fn quot(self, rhs: Self) -> Self {
        self / rhs
    }
}

impl Scalar for TwoFloat {
    fn from_dd(x: TwoFloat) -> Self {
        x
    }
    fn to_dd(self) -> TwoFloat {
        self
    }
    fn of(x: f64) -> Self {
        TwoFloat::from(x)
    }
    fn as_f64(self) -> f64 {
        self.hi() + self.lo()
    }
    fn pivot_tolerance() -> f64 {
        1e-24
    }
    fn unit_roundoff() -> f64 {
        f64::EPSILON * f64::EPSILON
    }
    fn quot(self, rhs: Self) -> Self {
        dd_div(self, rhs)
    }
}

/// Long division: three f64 quotient digits with exact remainders.
fn dd_div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q1 = a.hi() / b.hi();
    if !q1.is_finite() {
        return a / b;
    }
    let r = a - b * q1;
    let q2 = r.hi() / b.hi();
    let r = r - b * q2;
    let q3 = r.hi() / b.hi();
    TwoFloat::new_add(q1, q2) + q3
}

/// Nearest double-double to an exact rational.
pub fn rational_to_dd(r: &BigRational) -> TwoFloat {
    let hi = r.to_f64().unwrap_or(f64::NAN);
    if !hi.is_finite() || hi == 0.0 {
        return TwoFloat::from(hi);
    }
    let rem = match BigRational::from_float(hi) {
        Some(h) => r - h,
        None => return TwoFloat::from(hi),
    };
    let lo = rem.to_f64().unwrap_or(0.0);
    TwoFloat::new_add(hi, lo)
}

/// Exact rational value of a double-double.
pub fn dd_to_rational(x: TwoFloat) -> BigRational {
    let hi = BigRational::from_float(x.hi()).unwrap_or_else(|| BigRational::from_integer(BigInt::from(0)));
    let lo = BigRational::from_float(x.lo()).unwrap_or_else(|| BigRational::from_integer(BigInt::from(0)));
    hi + lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Signed;

    #[test]
    fn quotient_is_double_double_accurate() {
        let third = TwoFloat::from(1.0).quot(TwoFloat::from(3.0));
        let err = third * 3.0 - 1.0;
        assert!(err.hi().abs() < 1e-31, "{err:?}");
        let c = TwoFloat::from(1.0).quot(TwoFloat::from(2.0).sqrt());
        let err = c * c * 2.0 - 1.0;
        assert!(err.hi().abs() < 1e-30, "{err:?}");
        let x = TwoFloat::new_add(7.0, 1e-20);
        let y = TwoFloat::new_add(3.0, -2e-21);
        let err = x.quot(y) * y - x;
        assert!(err.hi().abs() < 1e-30, "{err:?}");
    }
    use num_bigint::BigInt;

    #[test]
    fn rational_round_trip_beats_f64() {
        let third = BigRational::new(BigInt::from(1), BigInt::from(3));
        let dd = rational_to_dd(&third);
        let err = (dd * 3.0 - 1.0).abs();
        assert!(err < 1e-30, "{err:e}");
        let back = dd_to_rational(dd);
        assert!(((back - &third) * BigInt::from(10).pow(30)).abs() < BigRational::from_integer(BigInt::from(1)));
    }

    #[test]
    fn large_integers_are_exact() {
        let big = BigRational::from_integer(BigInt::from(12_271_512u64) * BigInt::from(1u64 << 40));
        let dd = rational_to_dd(&big);
        assert_eq!(dd_to_rational(dd), big);
    }
}
