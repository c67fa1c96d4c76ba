//! One-dimensional minimization and threshold location.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BrentResult {
    pub x: f64,
    pub fx: f64,
    pub evaluations: usize,
}

/// Brent's minimization on `[a, b]` to absolute tolerance `tol`.
///
/// `+∞` values are allowed; parabolic steps are skipped while any of the
/// three interpolation points is infinite, so the bracket contracts away
/// from failed evaluations by golden-section steps.
pub fn brent_minimize(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64, max_evaluations: usize) -> BrentResult {
    const GOLDEN: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = (a.min(b), a.max(b));
    let mut x = a + GOLDEN * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let mut evaluations = 1;
    let (mut d, mut e) = (0.0f64, 0.0f64);
    while evaluations < max_evaluations {
        let m = 0.5 * (a + b);
        let tol1 = tol + f64::EPSILON.sqrt() * 1e-3 * x.abs();
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 && fx.is_finite() && fw.is_finite() && fv.is_finite() {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            } else {
                q = -q;
            }
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if m > x { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < m { b - x } else { a - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = f(u);
        evaluations += 1;
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            (v, fv) = (w, fw);
            (w, fw) = (x, fx);
            (x, fx) = (u, fu);
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                (v, fv) = (w, fw);
                (w, fw) = (u, fu);
            } else if fu <= fv || v == x || v == w {
                (v, fv) = (u, fu);
            }
        }
    }
    BrentResult { x, fx, evaluations }
}

/// Outcome of one threshold probe.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Probe {
    pub feasible: bool,
    /// Signed distance to the threshold when the oracle knows it, positive
    /// on the feasible side.
    pub margin: Option<f64>,
}

/// Smallest feasible point of `[lo, hi]` to within `tol`, for an oracle
/// infeasible at `lo` and feasible at `hi`.
///
/// Brent's root finder on the signed margin, which keeps a bracket with a
/// sign change and falls back to bisection whenever interpolation does not
/// pay. Probes without a finite margin count as `±1`, so a purely boolean
/// oracle gets plain bisection. Returns the feasible end of the final
/// bracket, whose width is at most `tol`.
pub fn threshold_search(mut oracle: impl FnMut(f64) -> Result<Probe>, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let value = |p: Probe| -> f64 {
        match p.margin.filter(|m| m.is_finite() && (*m >= 0.0) == p.feasible) {
            Some(m) => m,
            None if p.feasible => 1.0,
            None => -1.0,
        }
    };
    let plo = oracle(lo)?;
    let phi = oracle(hi)?;
    if plo.feasible || !phi.feasible {
        return Err(Error::BadBracket { lo_feasible: plo.feasible, hi_feasible: phi.feasible });
    }
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (value(plo), value(phi));
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    loop {
        if (fb >= 0.0) == (fc >= 0.0) {
            (c, fc) = (a, fa);
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            (a, fa) = (b, fb);
            (b, fb) = (c, fc);
            (c, fc) = (a, fa);
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(if fb >= 0.0 { b } else { c });
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        (a, fa) = (b, fb);
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = value(oracle(b)?);
    }
}
