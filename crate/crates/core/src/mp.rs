//! Small helpers around `rug::Float` so call sites do not repeat precision
//! plumbing.

use rug::float::{Constant, Round};
use rug::ops::Pow;
use rug::{Float, Rational};

/// Default mantissa width in bits.
pub const DEFAULT_PRECISION: u32 = 256;

pub fn zero(prec: u32) -> Float {
    Float::new(prec)
}

pub fn one(prec: u32) -> Float {
    Float::with_val(prec, 1)
}

pub fn from_f64(prec: u32, v: f64) -> Float {
    Float::with_val(prec, v)
}

pub fn from_rational(prec: u32, q: &Rational) -> Float {
    Float::with_val(prec, q)
}

pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi)
}

/// Parses a decimal string (plain or scientific notation).
pub fn parse(prec: u32, s: &str) -> Option<Float> {
    Float::parse(s).ok().map(|p| Float::with_val(prec, p))
}

/// Formats `x` with `digits` significant decimal digits in scientific form.
pub fn to_sci(x: &Float, digits: usize) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    x.to_string_radix_round(10, Some(digits.max(1)), Round::Nearest)
}

/// Number of decimal digits that round-trips a `prec`-bit mantissa.
pub fn round_trip_digits(prec: u32) -> usize {
    (f64::from(prec) * std::f64::consts::LOG10_2).ceil() as usize + 2
}

/// Exact rational value of a finite float.
pub fn to_rational(x: &Float) -> Rational {
    x.to_rational().expect("finite float")
}

pub fn pow_u(x: &Float, e: u32) -> Float {
    Float::with_val(x.prec(), x.pow(e))
}
