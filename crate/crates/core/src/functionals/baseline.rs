//! Closed forms of the hat and Selberg functions and their transforms.

use rug::Float;

use super::quadrature;
use crate::mp;

/// Quadrature target for the baselines.
pub const BASELINE_TOL: f64 = 1e-18;

pub fn hat(x: &Float) -> Float {
    let p = x.prec();
    let v = Float::with_val(p, 1) - Float::with_val(p, x.abs_ref());
    if v > 0 {
        v
    } else {
        Float::new(p)
    }
}

/// `sin(πx)/(πx)`, equal to 1 at the origin.
fn sinc(x: &Float) -> Float {
    let p = x.prec();
    if x.is_zero() {
        return Float::with_val(p, 1);
    }
    let px = Float::with_val(p, x * mp::pi(p));
    Float::with_val(p, px.sin_ref()) / px
}

pub fn hat_hat(x: &Float) -> Float {
    sinc(x).square()
}

pub fn selberg(x: &Float) -> Float {
    let p = x.prec();
    let one_minus = Float::with_val(p, 1) - Float::with_val(p, x.square_ref());
    if one_minus.is_zero() {
        return Float::new(p);
    }
    sinc(x).square() / one_minus
}

pub fn selberg_hat(x: &Float) -> Float {
    let p = x.prec();
    let ax = Float::with_val(p, x.abs_ref());
    if ax >= 1 {
        return Float::new(p);
    }
    let two_pi = Float::with_val(p, mp::pi(p) * 2u32);
    let s = Float::with_val(p, &two_pi * &ax).sin() / &two_pi;
    Float::with_val(p, 1) - ax + s
}

/// Integrates over `[a, b]` after splitting at the kinks `-1, 0, 1` of the
/// baselines, so every panel sees a smooth integrand.
pub fn integrate_with_breaks<F: Fn(&Float) -> Float>(f: F, a: &Float, b: &Float, prec: u32) -> Float {
    let mut cuts = vec![Float::with_val(prec, a)];
    for k in [-1i32, 0, 1] {
        if *a < k && *b > k {
            cuts.push(Float::with_val(prec, k));
        }
    }
    cuts.push(Float::with_val(prec, b));
    let mut acc = Float::new(prec);
    for w in cuts.windows(2) {
        acc += quadrature::integrate(&f, &w[0], &w[1], BASELINE_TOL, prec);
    }
    acc
}
