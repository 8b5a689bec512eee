//! Numeric abstraction shared by every algorithm in the crate.
//!
//! All decision procedures are written against [`Scalar`]. The exact
//! instantiation ([`Rational`]) is the one the library is meant to be used
//! with: probabilities compare exactly and every verdict is a theorem about
//! the model. The floating point instantiations exist for quick numeric
//! experiments and compare with a small absolute tolerance.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive, Zero};

/// Arbitrary precision rational number.
pub type Rational = BigRational;

/// A number type that can carry probabilities, capacities and distances.
pub trait Scalar:
    Clone + fmt::Debug + fmt::Display + PartialOrd + Num + Signed + Send + Sync + 'static
{
    /// Converts an exact rational into this scalar type.
    fn from_rational(r: &Rational) -> Self;

    /// Exact value when the representation allows it.
    fn to_rational(&self) -> Option<Rational>;

    fn to_f64(&self) -> f64;

    /// Absolute tolerance used by the comparison helpers below. Zero for exact
    /// types.
    fn tolerance() -> Self {
        Self::zero()
    }

    fn is_exact() -> bool;

    fn approx_eq(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).abs() <= Self::tolerance()
    }

    fn is_negligible(&self) -> bool {
        self.abs() <= Self::tolerance()
    }

    /// Strictly positive beyond the tolerance.
    fn is_significant(&self) -> bool {
        *self > Self::tolerance()
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_rational(&Rational::new(BigInt::from(num), BigInt::from(den)))
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
}

impl Scalar for Rational {
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn is_exact() -> bool {
        true
    }

    fn approx_eq(&self, other: &Self) -> bool {
        self == other
    }

    fn is_negligible(&self) -> bool {
        self.is_zero()
    }

    fn is_significant(&self) -> bool {
        self.is_positive()
    }
}

macro_rules! float_scalar {
    ($t:ty, $tol:expr) => {
        impl Scalar for $t {
            fn from_rational(r: &Rational) -> Self {
                ToPrimitive::to_f64(r).unwrap_or(f64::NAN) as $t
            }

            fn to_rational(&self) -> Option<Rational> {
                Rational::from_float(*self)
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn tolerance() -> Self {
                $tol
            }

            fn is_exact() -> bool {
                false
            }
        }
    };
}

float_scalar!(f64, 1e-9);
float_scalar!(f32, 1e-5);

/// Parses `p/q`, an integer, or a finite decimal such as `0.125` into an
/// exact rational. Signs are not accepted.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if text.is_empty() {
        return None;
    }
    if let Some((num, den)) = text.split_once('/') {
        let num = parse_digits(num)?;
        let den = parse_digits(den)?;
        if den.is_zero() {
            return None;
        }
        return Some(Rational::new(num, den));
    }
    if let Some((int, frac)) = text.split_once('.') {
        if int.is_empty() && frac.is_empty() {
            return None;
        }
        let int = if int.is_empty() {
            BigInt::zero()
        } else {
            parse_digits(int)?
        };
        let frac_val = if frac.is_empty() {
            BigInt::zero()
        } else {
            parse_digits(frac)?
        };
        let scale = num_traits::pow(BigInt::from(10u32), frac.len());
        return Some(Rational::new(int * &scale + frac_val, scale));
    }
    Some(Rational::from_integer(parse_digits(text)?))
}

fn parse_digits(s: &str) -> Option<BigInt> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    BigInt::parse_bytes(s.as_bytes(), 10)
}

/// Rational from small integers; used pervasively in tests and examples.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}
