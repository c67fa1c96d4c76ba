//! Adaptive Gauss–Legendre quadrature in multiple precision.
//!
//! Used for the closed-form baselines and as an independent oracle in tests.
//! Each panel is compared against the sum over its two halves; panels that
//! disagree by more than the tolerance are split.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rug::Float;

use crate::mp;

/// Points per panel.
pub const DEFAULT_POINTS: usize = 20;
const MAX_DEPTH: u32 = 48;

type Rule = Arc<(Vec<Float>, Vec<Float>)>;

static RULES: OnceLock<Mutex<HashMap<(usize, u32), Rule>>> = OnceLock::new();

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize, prec: u32) -> Rule {
    let cache = RULES.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().expect("quadrature cache").get(&(n, prec)) {
        return Arc::clone(rule);
    }
    let rule = Arc::new(compute_rule(n, prec));
    cache.lock().expect("quadrature cache").insert((n, prec), Arc::clone(&rule));
    rule
}

fn compute_rule(n: usize, prec: u32) -> (Vec<Float>, Vec<Float>) {
    let w = prec + 32;
    let pi = mp::pi(w);
    let tol = Float::with_val(w, Float::u_exp(1, 8 - w as i32));
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 1..=n {
        let guess = (f64::from(i as u32) - 0.25) / (n as f64 + 0.5);
        let mut x = Float::with_val(w, &pi * guess).cos();
        let mut deriv = Float::new(w);
        for _ in 0..200 {
            let (p, dp) = legendre_with_derivative(n, &x);
            let dx = Float::with_val(w, &p / &dp);
            x -= &dx;
            deriv = dp;
            if dx.abs() < tol {
                let (_, dp) = legendre_with_derivative(n, &x);
                deriv = dp;
                break;
            }
        }
        let one_minus = Float::with_val(w, 1) - Float::with_val(w, x.square_ref());
        let wt = Float::with_val(w, 2) / (one_minus * Float::with_val(w, deriv.square_ref()));
        nodes.push(Float::with_val(prec, &x));
        weights.push(Float::with_val(prec, wt));
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: &Float) -> (Float, Float) {
    let w = x.prec();
    let mut p0 = Float::with_val(w, 1);
    let mut p1 = x.clone();
    for k in 2..=n {
        let k = k as u32;
        let next = (Float::with_val(w, x * &p1) * (2 * k - 1) - Float::with_val(w, &p0 * (k - 1))) / k;
        p0 = std::mem::replace(&mut p1, next);
    }
    let x2m1 = Float::with_val(w, x.square_ref()) - 1u32;
    let dp = (Float::with_val(w, x * &p1) - &p0) * n as u32 / x2m1;
    (p1, dp)
}

fn panel<F: Fn(&Float) -> Float>(f: &F, a: &Float, b: &Float, rule: &Rule) -> Float {
    let prec = a.prec();
    let half = Float::with_val(prec, b - a) / 2u32;
    let mid = Float::with_val(prec, a + b) / 2u32;
    let mut acc = Float::new(prec);
    for (x, wt) in rule.0.iter().zip(&rule.1) {
        let node = Float::with_val(prec, &half * x) + &mid;
        acc += Float::with_val(prec, wt * f(&node));
    }
    acc * half
}

/// `∫_a^b f(x) dx` to relative tolerance `tol` (absolute when the integral
/// is tiny), at `prec` bits.
pub fn integrate<F: Fn(&Float) -> Float>(f: F, a: &Float, b: &Float, tol: f64, prec: u32) -> Float {
    let rule = gauss_legendre(DEFAULT_POINTS, prec);
    let a = Float::with_val(prec, a);
    let b = Float::with_val(prec, b);
    if a == b {
        return Float::new(prec);
    }
    let whole = panel(&f, &a, &b, &rule);
    let scale = Float::with_val(prec, whole.abs_ref()).max(&Float::with_val(prec, 1e-30));
    let eps = scale * tol;
    let width = Float::with_val(prec, &b - &a);
    refine(&f, a, b, whole, &eps, &width, &rule, 0)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(&Float) -> Float>(
    f: &F,
    a: Float,
    b: Float,
    whole: Float,
    eps: &Float,
    total_width: &Float,
    rule: &Rule,
    depth: u32,
) -> Float {
    let prec = a.prec();
    let mid = Float::with_val(prec, &a + &b) / 2u32;
    let left = panel(f, &a, &mid, rule);
    let right = panel(f, &mid, &b, rule);
    let halves = Float::with_val(prec, &left + &right);
    let diff = Float::with_val(prec, &halves - &whole).abs();
    let share = Float::with_val(prec, &b - &a) / total_width;
    if diff <= Float::with_val(prec, eps * &share) || depth >= MAX_DEPTH {
        return halves;
    }
    refine(f, a, mid.clone(), left, eps, total_width, rule, depth + 1)
        + refine(f, mid, b, right, eps, total_width, rule, depth + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::ops::Pow;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let rule = gauss_legendre(10, 200);
        // ∫_{-1}^{1} x^18 dx = 2/19
        let mut acc = Float::new(200);
        for (x, w) in rule.0.iter().zip(&rule.1) {
            acc += Float::with_val(200, x.pow(18u32)) * w;
        }
        let expect = Float::with_val(200, 2) / 19u32;
        assert!(Float::with_val(200, acc - expect).abs() < 1e-55);
    }

    #[test]
    fn adaptive_handles_kinks() {
        let p = 128;
        let v = integrate(|x| Float::with_val(p, x.abs_ref()), &Float::with_val(p, -1), &Float::with_val(p, 2), 1e-20, p);
        assert!(Float::with_val(p, v - 2.5f64).abs() < 1e-19);
        let s = integrate(|x| Float::with_val(p, x.sin_ref()), &Float::new(p), &mp::pi(p), 1e-25, p);
        assert!(Float::with_val(p, s - 2u32).abs() < 1e-24);
    }
}
