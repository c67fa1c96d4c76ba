//! Partial Gaussian moments `∫_a^∞ x^m e^{-πx²} dx` and the upper incomplete
//! gamma function behind them.

use rug::ops::Pow;
use rug::Float;

use crate::error::{Error, Result};
use crate::mp;

/// Extra working bits for the incomplete gamma evaluation.
const GUARD_BITS: u32 = 64;

/// Upper incomplete gamma `Γ(s, x)` for `s > 0`, `x ≥ 0`.
///
/// Series for the lower function when `x < s + 1`, modified Lentz continued
/// fraction otherwise. The result carries the precision of `s`.
pub fn upper_incomplete_gamma(s: &Float, x: &Float) -> Float {
    let prec = s.prec().max(x.prec());
    let w = prec + GUARD_BITS;
    let s = Float::with_val(w, s);
    let x = Float::with_val(w, x);
    assert!(s > 0, "incomplete gamma needs s > 0");
    assert!(x >= 0, "incomplete gamma needs x >= 0");
    let eps = Float::with_val(w, Float::u_exp(1, -(w as i32)));

    if x.is_zero() {
        return Float::with_val(prec, s.gamma_ref());
    }
    let prefactor = {
        let ln = Float::with_val(w, &s * Float::with_val(w, x.ln_ref())) - &x;
        ln.exp()
    };
    let out = if x < Float::with_val(w, &s + 1u32) {
        let mut term = Float::with_val(w, 1) / &s;
        let mut sum = term.clone();
        let mut a = s.clone();
        loop {
            a += 1u32;
            term *= &x;
            term /= &a;
            sum += &term;
            if Float::with_val(w, term.abs_ref()) <= Float::with_val(w, &sum * &eps) {
                break;
            }
        }
        let lower = prefactor * sum;
        Float::with_val(w, s.gamma_ref()) - lower
    } else {
        let tiny = Float::with_val(w, Float::u_exp(1, -(4 * w as i32)));
        let mut b = Float::with_val(w, &x + 1u32) - &s;
        let mut c = Float::with_val(w, 1) / &tiny;
        let mut d = Float::with_val(w, 1) / &b;
        let mut h = d.clone();
        let mut i = 1u32;
        loop {
            let an = -(Float::with_val(w, i) * (Float::with_val(w, i) - &s));
            b += 2u32;
            d = Float::with_val(w, &an * &d) + &b;
            if Float::with_val(w, d.abs_ref()) < tiny {
                d.clone_from(&tiny);
            }
            c = Float::with_val(w, &an / &c) + &b;
            if Float::with_val(w, c.abs_ref()) < tiny {
                c.clone_from(&tiny);
            }
            d.recip_mut();
            let del = Float::with_val(w, &d * &c);
            h *= &del;
            if Float::with_val(w, del - 1u32).abs() <= eps {
                break;
            }
            i += 1;
            assert!(i < 100_000, "incomplete gamma continued fraction did not converge");
        }
        prefactor * h
    };
    Float::with_val(prec, out)
}

/// `∫_a^∞ x^m e^{-πx²} dx = Γ((m+1)/2, πa²) / (2 π^{(m+1)/2})` for `a ≥ 0`.
pub fn partial_moment(m: i64, a: &Float, prec: u32) -> Result<Float> {
    if m < 0 {
        return Err(Error::NegativeMoment(m));
    }
    if *a < 0 {
        return Err(Error::InvalidInterval { lo: a.to_string(), hi: "inf".into() });
    }
    let w = prec + GUARD_BITS;
    let pi = mp::pi(w);
    let s = Float::with_val(w, m + 1) / 2u32;
    let y = Float::with_val(w, &pi * Float::with_val(w, a.square_ref()));
    let g = upper_incomplete_gamma(&s, &y);
    let denom = Float::with_val(w, (&pi).pow(&s)) * 2u32;
    Ok(Float::with_val(prec, g / denom))
}

/// Table of `M_m(a) = ∫_a^∞ x^m e^{-πx²} dx` for `m = 0..=max_m`.
///
/// `M_0` and `M_1` come from the incomplete gamma function; higher orders
/// follow from integrating by parts,
/// `M_{m+2} = ((m+1) M_m + a^{m+1} e^{-πa²}) / (2π)`, which only adds
/// positive terms. `a = None` stands for `+∞` (all entries zero).
#[derive(Clone, Debug)]
pub struct MomentTable {
    pub values: Vec<Float>,
    pub precision: u32,
}

impl MomentTable {
    pub fn new(max_m: usize, a: Option<&Float>, prec: u32) -> Result<Self> {
        let Some(a) = a else {
            return Ok(MomentTable { values: vec![Float::new(prec); max_m + 1], precision: prec });
        };
        if *a < 0 {
            return Err(Error::InvalidInterval { lo: a.to_string(), hi: "inf".into() });
        }
        let w = prec + GUARD_BITS;
        let a = Float::with_val(w, a);
        let pi = mp::pi(w);
        let two_pi = Float::with_val(w, &pi * 2u32);
        let gauss = Float::with_val(w, -(Float::with_val(w, &pi * Float::with_val(w, a.square_ref())))).exp();
        let mut vals: Vec<Float> = Vec::with_capacity(max_m + 2);
        vals.push(Float::with_val(w, partial_moment(0, &a, w)?));
        vals.push(Float::with_val(w, &gauss / &two_pi));
        let mut apow = a.clone(); // a^{m+1} for m = 0
        for m in 0..max_m.saturating_sub(1) {
            let next = (Float::with_val(w, m as u32 + 1) * &vals[m] + &apow * &gauss) / &two_pi;
            vals.push(next);
            apow *= &a;
        }
        vals.truncate(max_m + 1);
        Ok(MomentTable { values: vals.into_iter().map(|v| Float::with_val(prec, v)).collect(), precision: prec })
    }

    pub fn get(&self, m: usize) -> &Float {
        &self.values[m]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
