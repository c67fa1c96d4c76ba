//! Closed intervals with outward-rounded endpoints.
//!
//! Every operation rounds the lower endpoint toward `-∞` and the upper toward
//! `+∞`, using MPFR's correctly rounded primitives, so the result encloses
//! the exact result for every choice of real operands in the inputs.

use std::cmp::Ordering;
use std::fmt;

use rug::float::{Constant, Round};
use rug::{Float, Rational};

#[derive(Clone, PartialEq)]
pub struct Interval {
    lo: Float,
    hi: Float,
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.6e}, {:.6e}]", self.lo.to_f64(), self.hi.to_f64())
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal(20))
    }
}

macro_rules! down {
    ($prec:expr, $e:expr) => {
        Float::with_val_round($prec, $e, Round::Down).0
    };
}

macro_rules! up {
    ($prec:expr, $e:expr) => {
        Float::with_val_round($prec, $e, Round::Up).0
    };
}

impl Interval {
    /// `[lo, hi]`; panics when `lo > hi` or an endpoint is NaN.
    pub fn new(lo: Float, hi: Float) -> Self {
        assert!(lo <= hi, "interval endpoints out of order");
        Interval { lo, hi }
    }

    pub fn zero(prec: u32) -> Self {
        Interval { lo: Float::new(prec), hi: Float::new(prec) }
    }

    pub fn one(prec: u32) -> Self {
        Self::from_int(prec, 1)
    }

    pub fn from_int(prec: u32, v: i64) -> Self {
        Interval { lo: down!(prec, v), hi: up!(prec, v) }
    }

    /// Enclosure of an exact float, rounded outward to `prec` bits.
    pub fn from_float(prec: u32, x: &Float) -> Self {
        Interval { lo: down!(prec, x), hi: up!(prec, x) }
    }

    pub fn from_rational(prec: u32, q: &Rational) -> Self {
        Interval { lo: down!(prec, q), hi: up!(prec, q) }
    }

    pub fn pi(prec: u32) -> Self {
        Interval { lo: down!(prec, Constant::Pi), hi: up!(prec, Constant::Pi) }
    }

    pub fn prec(&self) -> u32 {
        self.lo.prec()
    }

    pub fn lo(&self) -> &Float {
        &self.lo
    }

    pub fn hi(&self) -> &Float {
        &self.hi
    }

    pub fn mid(&self) -> Float {
        let p = self.prec();
        Float::with_val(p + 1, &self.lo + &self.hi) / 2u32
    }

    /// `hi - lo`, rounded up.
    pub fn width(&self) -> Float {
        up!(self.prec(), &self.hi - &self.lo)
    }

    /// Largest absolute value in the interval.
    pub fn mag(&self) -> Float {
        let a = Float::with_val(self.prec(), self.lo.abs_ref());
        let b = Float::with_val(self.prec(), self.hi.abs_ref());
        a.max(&b)
    }

    pub fn contains(&self, x: &Float) -> bool {
        self.lo <= *x && *x <= self.hi
    }

    pub fn contains_rational(&self, q: &Rational) -> bool {
        self.lo.partial_cmp(q) != Some(Ordering::Greater) && self.hi.partial_cmp(q) != Some(Ordering::Less)
    }

    pub fn contains_zero(&self) -> bool {
        self.lo <= 0 && self.hi >= 0
    }

    /// `other ⊆ self`.
    pub fn encloses(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn is_positive(&self) -> bool {
        self.lo > 0
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval { lo: self.lo.clone().min(&other.lo), hi: self.hi.clone().max(&other.hi) }
    }

    pub fn add(&self, o: &Interval) -> Interval {
        let p = self.prec().max(o.prec());
        Interval { lo: down!(p, &self.lo + &o.lo), hi: up!(p, &self.hi + &o.hi) }
    }

    pub fn sub(&self, o: &Interval) -> Interval {
        let p = self.prec().max(o.prec());
        Interval { lo: down!(p, &self.lo - &o.hi), hi: up!(p, &self.hi - &o.lo) }
    }

    pub fn neg(&self) -> Interval {
        Interval { lo: Float::with_val(self.prec(), -&self.hi), hi: Float::with_val(self.prec(), -&self.lo) }
    }

    pub fn mul(&self, o: &Interval) -> Interval {
        let p = self.prec().max(o.prec());
        let pairs = [(&self.lo, &o.lo), (&self.lo, &o.hi), (&self.hi, &o.lo), (&self.hi, &o.hi)];
        let mut lo = Float::with_val(p, f64::INFINITY);
        let mut hi = Float::with_val(p, f64::NEG_INFINITY);
        for (a, b) in pairs {
            lo.min_mut(&down!(p, a * b));
            hi.max_mut(&up!(p, a * b));
        }
        Interval { lo, hi }
    }

    pub fn sqr(&self) -> Interval {
        let p = self.prec();
        if self.contains_zero() {
            let m = self.mag();
            Interval { lo: Float::new(p), hi: up!(p, m.square_ref()) }
        } else {
            let a = Float::with_val(p, self.lo.abs_ref());
            let b = Float::with_val(p, self.hi.abs_ref());
            let (small, big) = if a < b { (a, b) } else { (b, a) };
            Interval { lo: down!(p, small.square_ref()), hi: up!(p, big.square_ref()) }
        }
    }

    /// `None` when the divisor contains zero.
    pub fn div(&self, o: &Interval) -> Option<Interval> {
        if o.contains_zero() {
            return None;
        }
        let p = self.prec().max(o.prec());
        let pairs = [(&self.lo, &o.lo), (&self.lo, &o.hi), (&self.hi, &o.lo), (&self.hi, &o.hi)];
        let mut lo = Float::with_val(p, f64::INFINITY);
        let mut hi = Float::with_val(p, f64::NEG_INFINITY);
        for (a, b) in pairs {
            lo.min_mut(&down!(p, a / b));
            hi.max_mut(&up!(p, a / b));
        }
        Some(Interval { lo, hi })
    }

    pub fn mul_rational(&self, q: &Rational) -> Interval {
        self.mul(&Interval::from_rational(self.prec(), q))
    }

    pub fn div_u(&self, k: u32) -> Interval {
        let p = self.prec();
        Interval { lo: down!(p, &self.lo / k), hi: up!(p, &self.hi / k) }
    }

    pub fn mul_u(&self, k: u32) -> Interval {
        let p = self.prec();
        Interval { lo: down!(p, &self.lo * k), hi: up!(p, &self.hi * k) }
    }

    /// `None` unless the interval is nonnegative.
    pub fn sqrt(&self) -> Option<Interval> {
        if self.lo < 0 {
            return None;
        }
        let p = self.prec();
        Some(Interval { lo: down!(p, self.lo.sqrt_ref()), hi: up!(p, self.hi.sqrt_ref()) })
    }

    pub fn exp(&self) -> Interval {
        let p = self.prec();
        Interval { lo: down!(p, self.lo.exp_ref()), hi: up!(p, self.hi.exp_ref()) }
    }

    pub fn erf(&self) -> Interval {
        let p = self.prec();
        Interval { lo: down!(p, self.lo.erf_ref()), hi: up!(p, self.hi.erf_ref()) }
    }

    /// `x^k` for `k ≥ 0`.
    pub fn powu(&self, k: u32) -> Interval {
        let mut acc = Interval::one(self.prec());
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// `[lo, hi]` printed with `digits` significant digits, each endpoint
    /// rounded outward.
    pub fn to_decimal(&self, digits: usize) -> String {
        format!("[{}, {}]", round_str(&self.lo, digits, Round::Down), round_str(&self.hi, digits, Round::Up))
    }
}

/// `x` in scientific notation, rounded in direction `round`.
pub fn round_str(x: &Float, digits: usize, round: Round) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    x.to_string_radix_round(10, Some(digits.max(1)), round)
}

/// Enclosure of a decimal endpoint string.
pub fn parse_interval(s: &str, prec: u32) -> Option<Interval> {
    let t = s.trim().strip_prefix('[')?.strip_suffix(']')?;
    let (a, b) = t.split_once(',')?;
    let lo = crate::certio::parse_decimal(a)?;
    let hi = crate::certio::parse_decimal(b)?;
    let lo = down!(prec, &lo);
    let hi = up!(prec, &hi);
    (lo <= hi).then_some(Interval { lo, hi })
}

/// Convenience for callers holding a float they want enclosed exactly.
pub fn point(x: &Float) -> Interval {
    Interval::from_float(x.prec(), x)
}
