//! The pair-correlation functionals as linear forms, and their evaluation on
//! candidate functions.
//!
//! Every functional is a linear form in either `f` or `f̂`:
//! a multiple of the value at the origin plus integrals of the function
//! against polynomial weights over finite intervals. The forms carry exact
//! rational data so that the same description feeds floating-point
//! evaluation, SDP cost matrices and interval verification.

pub mod baseline;
pub mod quadrature;

use rug::ops::Pow;
use rug::{Float, Rational};

use crate::error::{Error, Result};
use crate::gausspoly::{weighted_moment_functional, GaussianPoly};
use crate::{mp, FunctionalKind};

const GUARD_BITS: u32 = 64;

/// Truncation of the infinite series in `Z1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesTruncation {
    /// Last series index kept.
    pub k: usize,
    /// Added to every `Z1` value to cover the dropped terms.
    pub tail_bound: Rational,
}

impl Default for SeriesTruncation {
    fn default() -> Self {
        SeriesTruncation { k: 15, tail_bound: Rational::from((1, 10_000_000_000u64)) }
    }
}

impl SeriesTruncation {
    pub fn new(k: usize, tail_bound: Rational) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("series truncation needs K >= 1".into()));
        }
        Ok(SeriesTruncation { k, tail_bound })
    }
}

/// `c_k = 2^{2k+1} (k-1)! / (2k)!`.
pub fn series_coefficient(k: usize) -> Rational {
    assert!(k >= 1);
    let mut num = rug::Integer::from(1) << (2 * k as u32 + 1);
    for j in 1..k {
        num *= j as u32;
    }
    let mut den = rug::Integer::from(1);
    for j in 1..=(2 * k) {
        den *= j as u32;
    }
    Rational::from((num, den))
}

/// Which function a form integrates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Function,
    Fourier,
}

/// `∫_a^b g(x) Σ_j weight[j] x^j dx`.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub a: Rational,
    pub b: Rational,
    pub weight: Vec<Rational>,
}

/// `value = (origin_coef·g(0) + Σ pieces) / (f̂(0) if normalized) + constant`,
/// where `g` is `f` or `f̂` according to `side`.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionalForm {
    pub kind: FunctionalKind,
    pub side: Side,
    pub origin_coef: Rational,
    pub pieces: Vec<Piece>,
    pub constant: Rational,
    pub normalized: bool,
}

impl FunctionalForm {
    pub fn max_weight_degree(&self) -> usize {
        self.pieces.iter().map(|p| p.weight.len().saturating_sub(1)).max().unwrap_or(0)
    }
}

/// Modified objective form of `Z`, `ZTilde`, `L` or `Z1` at last sign change `r`.
pub fn objective_form(kind: FunctionalKind, r: &Rational, trunc: &SeriesTruncation) -> Result<FunctionalForm> {
    if *r <= 0 {
        return Err(Error::NonpositiveRadius);
    }
    let two_over_r = Rational::from(2) / r.clone();
    let zero = Rational::new();
    let mut constant = Rational::new();
    let (origin_coef, pieces) = match kind {
        FunctionalKind::Z => {
            (r.clone(), vec![Piece { a: zero, b: r.clone(), weight: vec![Rational::new(), two_over_r] }])
        }
        FunctionalKind::ZTilde => {
            let r32 = Rational::from(r * Rational::from((3, 2)));
            (
                r.clone(),
                vec![
                    Piece { a: zero, b: r.clone(), weight: vec![Rational::new(), two_over_r.clone()] },
                    Piece { a: r.clone(), b: r32, weight: vec![Rational::from(3), -two_over_r] },
                ],
            )
        }
        FunctionalKind::L => {
            let half = Rational::from(r / Rational::from(2));
            let four_over_r = Rational::from(4) / r.clone();
            (
                half.clone(),
                vec![
                    Piece { a: zero, b: half.clone(), weight: vec![Rational::new(), four_over_r] },
                    Piece { a: half, b: r.clone(), weight: vec![Rational::from(2)] },
                ],
            )
        }
        FunctionalKind::Z1 => {
            let degree = 2 * trunc.k + 1;
            let mut weight = vec![Rational::new(); degree + 1];
            weight[1] = two_over_r;
            weight[2] = -Rational::from(8) / Rational::from(r.square_ref());
            let mut rpow = r.clone();
            for k in 1..=trunc.k {
                rpow *= Rational::from(r.square_ref());
                weight[2 * k + 1] += Rational::from(2) * series_coefficient(k) / rpow.clone();
            }
            constant = trunc.tail_bound.clone();
            (r.clone(), vec![Piece { a: zero, b: r.clone(), weight }])
        }
        FunctionalKind::P | FunctionalKind::PTilde => return Err(Error::FeasibilityKind(kind)),
    };
    Ok(FunctionalForm { kind, side: Side::Function, origin_coef, pieces, constant, normalized: true })
}

/// `p_f(λ)` or `p̃_f(λ)` as a form on `f̂`.
pub fn threshold_form(kind: FunctionalKind, r: &Rational, lambda: &Rational) -> Result<FunctionalForm> {
    if *r <= 0 {
        return Err(Error::NonpositiveRadius);
    }
    if *lambda <= 0 {
        return Err(Error::NonpositiveLambda);
    }
    let s = Rational::from(lambda / r);
    let two_over_s = Rational::from(2) / s.clone();
    let mut pieces =
        vec![Piece { a: Rational::new(), b: s.clone(), weight: vec![Rational::new(), two_over_s.clone()] }];
    match kind {
        FunctionalKind::P => {}
        FunctionalKind::PTilde => {
            let s32 = Rational::from(&s * Rational::from((3, 2)));
            pieces.push(Piece { a: s.clone(), b: s32, weight: vec![Rational::from(3), -two_over_s] });
        }
        _ => return Err(Error::MinimizationKind(kind)),
    }
    Ok(FunctionalForm {
        kind,
        side: Side::Fourier,
        origin_coef: Rational::new(),
        pieces,
        constant: s - Rational::from(1),
        normalized: false,
    })
}

/// A function in the admissible class together with its declared last sign
/// change.
#[derive(Clone, Debug)]
pub enum Candidate {
    Poly { f: GaussianPoly, fhat: GaussianPoly, radius: Float },
    /// `(1 - |x|)_+`, with `f̂(x) = sin²(πx)/(πx)²`.
    Hat,
    /// `sin²(πx)/((πx)²(1 - x²))`, with `f̂(x) = 1 - |x| + sin(2π|x|)/(2π)` on `|x| < 1`.
    Selberg,
}

impl Candidate {
    pub fn poly(f: GaussianPoly, radius: Float) -> Result<Self> {
        if radius <= 0 {
            return Err(Error::NonpositiveRadius);
        }
        let fhat = f.fourier();
        Ok(Candidate::Poly { f, fhat, radius })
    }

    pub fn radius(&self) -> Rational {
        match self {
            Candidate::Poly { radius, .. } => mp::to_rational(radius),
            Candidate::Hat | Candidate::Selberg => Rational::from(1),
        }
    }

    /// Pointwise value of `f` or `f̂`.
    pub fn value(&self, side: Side, x: &Float) -> Float {
        match (self, side) {
            (Candidate::Poly { f, .. }, Side::Function) => f.evaluate(x),
            (Candidate::Poly { fhat, .. }, Side::Fourier) => fhat.evaluate(x),
            (Candidate::Hat, Side::Function) => baseline::hat(x),
            (Candidate::Hat, Side::Fourier) => baseline::hat_hat(x),
            (Candidate::Selberg, Side::Function) => baseline::selberg(x),
            (Candidate::Selberg, Side::Fourier) => baseline::selberg_hat(x),
        }
    }

    /// `∫_a^b g(x) w(x) dx` for the piece, at `prec` bits.
    pub fn integrate(&self, side: Side, piece: &Piece, prec: u32) -> Result<Float> {
        if piece.a >= piece.b {
            return Err(Error::InvalidInterval { lo: piece.a.to_string(), hi: piece.b.to_string() });
        }
        let w = prec + GUARD_BITS;
        let a = Float::with_val(w, &piece.a);
        let b = Float::with_val(w, &piece.b);
        let weight: Vec<Float> = piece.weight.iter().map(|q| Float::with_val(w, q)).collect();
        match self {
            Candidate::Poly { f, fhat, .. } => {
                let g = match side {
                    Side::Function => f,
                    Side::Fourier => fhat,
                };
                let g = GaussianPoly::new(g.basis(), g.coeffs().iter().map(|c| Float::with_val(w, c)).collect())?;
                let v = weighted_moment_functional(&g, &weight, &a, Some(&b))?;
                Ok(Float::with_val(prec, v))
            }
            _ => {
                let integrand = |x: &Float| {
                    let mut poly = Float::new(w);
                    for c in weight.iter().rev() {
                        poly *= x;
                        poly += c;
                    }
                    poly * self.value(side, x)
                };
                let v = baseline::integrate_with_breaks(integrand, &a, &b, w);
                Ok(Float::with_val(prec, v))
            }
        }
    }

    /// Cheap sampled check of the class conditions: `f ≤ 0` on `[R, R + 10]`,
    /// eventual sign from the leading coefficient, and `f̂ ≥ 0` on a grid.
    pub fn sample_check(&self, prec: u32) -> bool {
        let Candidate::Poly { f, fhat, radius } = self else {
            return true;
        };
        let tol = Float::with_val(prec, Float::u_exp(1, -(prec as i32) / 2));
        let r = Float::with_val(prec, radius);
        for i in 1..=400u32 {
            let x = Float::with_val(prec, &r + Float::with_val(prec, i) / 40u32);
            if f.evaluate(&x) > tol {
                return false;
            }
        }
        let lead = f.monomial_coeffs().into_iter().rev().find(|c| !c.is_zero());
        if lead.is_some_and(|c| c > 0) {
            return false;
        }
        (0..=400u32).all(|i| {
            let x = Float::with_val(prec, i) / 40u32;
            let v = fhat.evaluate(&x);
            v >= Float::with_val(prec, -&tol)
        })
    }
}

/// Evaluates a form on a candidate at `prec` bits.
pub fn evaluate_form(c: &Candidate, form: &FunctionalForm, prec: u32) -> Result<Float> {
    let w = prec + GUARD_BITS;
    let zero = Float::new(w);
    let mut acc = Float::new(w);
    if form.origin_coef != 0 {
        acc += Float::with_val(w, &form.origin_coef) * c.value(form.side, &zero);
    }
    for piece in &form.pieces {
        acc += c.integrate(form.side, piece, w)?;
    }
    if form.normalized {
        let fhat0 = c.value(Side::Fourier, &zero);
        acc /= fhat0;
    }
    acc += Float::with_val(w, &form.constant);
    Ok(Float::with_val(prec, acc))
}

/// Evaluates `kind` on `c`; `lambda` is required for the threshold kinds.
pub fn eval(
    c: &Candidate,
    kind: FunctionalKind,
    lambda: Option<&Float>,
    trunc: &SeriesTruncation,
    prec: u32,
) -> Result<Float> {
    let form = if kind.is_threshold() {
        let lambda = lambda.ok_or_else(|| Error::InvalidArgument(format!("{kind} needs a lambda")))?;
        if *lambda <= 0 {
            return Err(Error::NonpositiveLambda);
        }
        threshold_form(kind, &c.radius(), &mp::to_rational(lambda))?
    } else {
        objective_form(kind, &c.radius(), trunc)?
    };
    evaluate_form(c, &form, prec)
}

pub fn eval_z(c: &Candidate, prec: u32) -> Result<Float> {
    eval(c, FunctionalKind::Z, None, &SeriesTruncation::default(), prec)
}

pub fn eval_z_tilde(c: &Candidate, prec: u32) -> Result<Float> {
    eval(c, FunctionalKind::ZTilde, None, &SeriesTruncation::default(), prec)
}

pub fn eval_l(c: &Candidate, prec: u32) -> Result<Float> {
    eval(c, FunctionalKind::L, None, &SeriesTruncation::default(), prec)
}

pub fn eval_z1(c: &Candidate, trunc: &SeriesTruncation, prec: u32) -> Result<Float> {
    eval(c, FunctionalKind::Z1, None, trunc, prec)
}

pub fn eval_p(c: &Candidate, lambda: &Float, prec: u32) -> Result<Float> {
    eval(c, FunctionalKind::P, Some(lambda), &SeriesTruncation::default(), prec)
}

pub fn eval_p_tilde(c: &Candidate, lambda: &Float, prec: u32) -> Result<Float> {
    eval(c, FunctionalKind::PTilde, Some(lambda), &SeriesTruncation::default(), prec)
}

/// Ratio of the geometric scan used to bracket the first sign change.
const SCAN_RATIO: f64 = 1.01;

/// First `λ` at which the threshold function turns positive.
///
/// Scans `λ` geometrically from `10⁻³·r` upward, then bisects the first
/// bracket `[lo, hi]` with `p(lo) ≤ 0 < p(hi)` down to width `tol` and
/// returns `hi`.
pub fn last_positive_crossing(
    c: &Candidate,
    which: FunctionalKind,
    tol: f64,
    lambda_max: f64,
    prec: u32,
) -> Result<Float> {
    if !which.is_threshold() {
        return Err(Error::MinimizationKind(which));
    }
    if tol <= 0.0 {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let trunc = SeriesTruncation::default();
    let p = |lambda: &Float| eval(c, which, Some(lambda), &trunc, prec);
    let r = Float::with_val(prec, &c.radius()).to_f64();
    let mut lo = Float::with_val(prec, 1e-3 * r);
    if p(&lo)? > 0 {
        return Ok(lo);
    }
    let mut hi = Float::with_val(prec, &lo * SCAN_RATIO);
    loop {
        if hi.to_f64() > lambda_max {
            return Err(Error::NoCrossing(lambda_max));
        }
        if p(&hi)? > 0 {
            break;
        }
        lo = hi.clone();
        hi *= SCAN_RATIO;
    }
    while Float::with_val(prec, &hi - &lo).to_f64() > tol {
        let mid = Float::with_val(prec, &lo + &hi) / 2u32;
        if p(&mid)? > 0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Exact value of a minimization functional on the hat function.
///
/// Each piece reduces to `∫ (1 - x) x^j dx` over `[a, b] ∩ [0, 1]`.
pub fn hat_exact(kind: FunctionalKind, trunc: &SeriesTruncation) -> Result<Rational> {
    let form = objective_form(kind, &Rational::from(1), trunc)?;
    let mut acc = form.origin_coef.clone();
    for piece in &form.pieces {
        let a = piece.a.clone().max(Rational::new());
        let b = piece.b.clone().min(Rational::from(1));
        if a >= b {
            continue;
        }
        for (j, wj) in piece.weight.iter().enumerate() {
            if *wj == 0 {
                continue;
            }
            let prim = |x: &Rational| {
                let j = j as u32;
                let p1 = Rational::from(x.pow(j + 1)) / (j + 1);
                let p2 = Rational::from(x.pow(j + 2)) / (j + 2);
                p1 - p2
            };
            acc += Rational::from(wj * (prim(&b) - prim(&a)));
        }
    }
    Ok(acc + form.constant)
}

#[cfg(test)]
mod tests;
