//! Even polynomials times `e^{-πx²}`: bases, evaluation, the Fourier
//! operator and exact moment integrals.

pub mod laguerre;
pub mod moments;

use rug::ops::Pow;
use rug::{Assign, Float, Rational};

use crate::error::{Error, Result};
use crate::mp;

pub use moments::{partial_moment, upper_incomplete_gamma, MomentTable};

const GUARD_BITS: u32 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasisKind {
    /// Coefficient `k` multiplies `x^{2k}`.
    MonomialInXSquared,
    /// Coefficient `n` multiplies `L_n^{-1/2}(2πx²)`.
    LaguerreHalf,
}

/// Basis of the even polynomials of degree at most `2 * degree_bound`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EvenPolyBasis {
    pub kind: BasisKind,
    pub degree_bound: usize,
}

impl EvenPolyBasis {
    pub fn monomial(degree_bound: usize) -> Self {
        EvenPolyBasis { kind: BasisKind::MonomialInXSquared, degree_bound }
    }

    pub fn laguerre(degree_bound: usize) -> Self {
        EvenPolyBasis { kind: BasisKind::LaguerreHalf, degree_bound }
    }

    pub fn dim(&self) -> usize {
        self.degree_bound + 1
    }
}

/// `f(x) = p(x) e^{-πx²}` with `p` even, stored by its coefficients in `basis`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianPoly {
    basis: EvenPolyBasis,
    coeffs: Vec<Float>,
}

impl GaussianPoly {
    /// Pads `coeffs` with zeros up to the basis dimension.
    pub fn new(basis: EvenPolyBasis, mut coeffs: Vec<Float>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument("empty coefficient vector".into()));
        }
        if coeffs.len() > basis.dim() {
            let needed = effective_degree(&coeffs);
            if needed > basis.degree_bound {
                return Err(Error::DegreeTooSmall { target: basis.degree_bound, needed });
            }
            coeffs.truncate(basis.dim());
        }
        let prec = coeffs.iter().map(Float::prec).max().unwrap_or(mp::DEFAULT_PRECISION);
        coeffs.resize(basis.dim(), Float::new(prec));
        Ok(GaussianPoly { basis, coeffs })
    }

    /// `Σ coeffs[k] x^{2k} e^{-πx²}`.
    pub fn from_monomial(coeffs: Vec<Float>) -> Self {
        let d = coeffs.len().saturating_sub(1).max(1);
        Self::new(EvenPolyBasis::monomial(d), coeffs).expect("degree fits by construction")
    }

    /// `Σ coeffs[n] L_n^{-1/2}(2πx²) e^{-πx²}`.
    pub fn from_laguerre(coeffs: Vec<Float>) -> Self {
        let d = coeffs.len().saturating_sub(1).max(1);
        Self::new(EvenPolyBasis::laguerre(d), coeffs).expect("degree fits by construction")
    }

    pub fn basis(&self) -> EvenPolyBasis {
        self.basis
    }

    pub fn coeffs(&self) -> &[Float] {
        &self.coeffs
    }

    pub fn prec(&self) -> u32 {
        self.coeffs[0].prec()
    }

    /// Polynomial part `p` at `t = x²`.
    pub fn poly_at_t(&self, t: &Float) -> Float {
        let prec = self.prec().max(t.prec());
        match self.basis.kind {
            BasisKind::MonomialInXSquared => {
                let mut acc = Float::new(prec);
                for c in self.coeffs.iter().rev() {
                    acc *= t;
                    acc += c;
                }
                acc
            }
            BasisKind::LaguerreHalf => {
                let y = Float::with_val(prec, t * mp::pi(prec)) * 2u32;
                let vals = laguerre::values(self.basis.degree_bound, &y);
                let mut acc = Float::new(prec);
                for (c, l) in self.coeffs.iter().zip(&vals) {
                    acc += Float::with_val(prec, c * l);
                }
                acc
            }
        }
    }

    /// `p(x) e^{-πx²}`.
    pub fn evaluate(&self, x: &Float) -> Float {
        let prec = self.prec().max(x.prec());
        let t = Float::with_val(prec, x.square_ref());
        let p = self.poly_at_t(&t);
        let g = Float::with_val(prec, -(t * mp::pi(prec))).exp();
        p * g
    }

    pub fn value_at_zero(&self) -> Float {
        self.poly_at_t(&Float::new(self.prec()))
    }

    /// Coefficients of `p` in powers of `t = x²`.
    pub fn monomial_coeffs(&self) -> Vec<Float> {
        match self.basis.kind {
            BasisKind::MonomialInXSquared => self.coeffs.clone(),
            BasisKind::LaguerreHalf => {
                self.change_basis(EvenPolyBasis::monomial(self.basis.degree_bound)).expect("same degree").coeffs
            }
        }
    }

    /// Fourier transform under `f̂(ξ) = ∫ f(x) e^{-2πixξ} dx`, in the same basis.
    ///
    /// In the Laguerre basis the transform is diagonal with entries `(-1)^n`.
    /// In the monomial basis each `x^{2k}` maps to `(k!/π^k) L_k^{-1/2}(πx²)`.
    pub fn fourier(&self) -> GaussianPoly {
        match self.basis.kind {
            BasisKind::LaguerreHalf => {
                let coeffs = self
                    .coeffs
                    .iter()
                    .enumerate()
                    .map(|(n, c)| if n % 2 == 0 { c.clone() } else { Float::with_val(c.prec(), -c) })
                    .collect();
                GaussianPoly { basis: self.basis, coeffs }
            }
            BasisKind::MonomialInXSquared => {
                let prec = self.prec();
                let w = prec + GUARD_BITS;
                let d = self.basis.degree_bound;
                let table = laguerre::table(d);
                let pi = mp::pi(w);
                let mut out = vec![Float::new(w); d + 1];
                let mut fact = Float::with_val(w, 1);
                for (k, a) in self.coeffs.iter().enumerate() {
                    if k > 0 {
                        fact *= k as u32;
                    }
                    if a.is_zero() {
                        continue;
                    }
                    // x^{2k} ↦ k! Σ_i Q[k][i] π^{i-k} t^i
                    let scale = Float::with_val(w, a * &fact);
                    for (i, q) in table.coeffs[k].iter().enumerate() {
                        let pw = Float::with_val(w, (&pi).pow(i as i32 - k as i32));
                        out[i] += scale.clone() * Float::with_val(w, q) * pw;
                    }
                }
                let coeffs = out.into_iter().map(|v| Float::with_val(prec, v)).collect();
                GaussianPoly { basis: self.basis, coeffs }
            }
        }
    }

    /// The same function written in `target`.
    pub fn change_basis(&self, target: EvenPolyBasis) -> Result<GaussianPoly> {
        let needed = effective_degree(&self.coeffs);
        if needed > target.degree_bound {
            return Err(Error::DegreeTooSmall { target: target.degree_bound, needed });
        }
        let prec = self.prec();
        let w = prec + GUARD_BITS;
        let n = needed + 1;
        let table = laguerre::table(target.degree_bound.max(needed));
        let two_pi = Float::with_val(w, mp::pi(w) * 2u32);
        let mut out = vec![Float::new(w); target.dim()];
        match (self.basis.kind, target.kind) {
            (a, b) if a == b => {
                for (o, c) in out.iter_mut().zip(&self.coeffs[..n]) {
                    o.assign(c);
                }
            }
            (BasisKind::LaguerreHalf, BasisKind::MonomialInXSquared) => {
                for (k, c) in self.coeffs[..n].iter().enumerate() {
                    let mut pw = Float::with_val(w, 1);
                    for (i, q) in table.coeffs[k].iter().enumerate() {
                        out[i] += Float::with_val(w, c * Float::with_val(w, q)) * &pw;
                        pw *= &two_pi;
                    }
                }
            }
            (BasisKind::MonomialInXSquared, BasisKind::LaguerreHalf) => {
                let mut pw = Float::with_val(w, 1);
                for (i, c) in self.coeffs[..n].iter().enumerate() {
                    let scaled = Float::with_val(w, c / &pw);
                    for (k, q) in table.inverse[i].iter().enumerate().take(i + 1) {
                        out[k] += Float::with_val(w, &scaled * Float::with_val(w, q));
                    }
                    pw *= &two_pi;
                }
            }
            _ => unreachable!(),
        }
        let coeffs = out.into_iter().map(|v| Float::with_val(prec, v)).collect();
        Ok(GaussianPoly { basis: target, coeffs })
    }
}

fn effective_degree(coeffs: &[Float]) -> usize {
    coeffs.iter().rposition(|c| !c.is_zero()).unwrap_or(0)
}

/// `∫_a^b x^m e^{-πx²} dx` for `m = 0..=max_m`; `b = None` means `+∞`.
pub fn segment_moments(max_m: usize, a: &Float, b: Option<&Float>, prec: u32) -> Result<Vec<Float>> {
    if let Some(b) = b {
        if a >= b {
            return Err(Error::InvalidInterval { lo: a.to_string(), hi: b.to_string() });
        }
    }
    let w = prec + GUARD_BITS;
    // Signed pieces on the half line: ∫_a^b = H(a) - H(b) with H(u) = ∫_u^∞.
    let half = |u: &Float| -> Result<Vec<Float>> {
        if *u >= 0 {
            Ok(MomentTable::new(max_m, Some(u), w)?.values)
        } else {
            // ∫_u^∞ = ∫_u^0 + ∫_0^∞ and ∫_u^0 x^m = (-1)^m ∫_0^{|u|} x^m.
            let abs = Float::with_val(w, u.abs_ref());
            let full = MomentTable::new(max_m, Some(&Float::new(w)), w)?.values;
            let tail = MomentTable::new(max_m, Some(&abs), w)?.values;
            Ok((0..=max_m)
                .map(|m| {
                    let inner = Float::with_val(w, &full[m] - &tail[m]);
                    let signed = if m % 2 == 0 { inner } else { -inner };
                    signed + &full[m]
                })
                .collect())
        }
    };
    let lo = half(a)?;
    let out = match b {
        None => lo,
        Some(b) => {
            let hi = half(b)?;
            lo.into_iter().zip(hi).map(|(l, h)| l - h).collect()
        }
    };
    Ok(out.into_iter().map(|v| Float::with_val(prec, v)).collect())
}

/// `∫_a^b f(x) w(x) dx` where `weight[j]` multiplies `x^j`; `b = None` means `+∞`.
pub fn weighted_moment_functional(
    f: &GaussianPoly,
    weight: &[Float],
    a: &Float,
    b: Option<&Float>,
) -> Result<Float> {
    let prec = f.prec();
    if let Some(b) = b {
        if a >= b {
            return Err(Error::InvalidInterval { lo: a.to_string(), hi: b.to_string() });
        }
    }
    if weight.iter().all(Float::is_zero) {
        return Ok(Float::new(prec));
    }
    let p = f.monomial_coeffs();
    let max_m = 2 * (p.len() - 1) + weight.len() - 1;
    let w = prec + GUARD_BITS;
    let mom = segment_moments(max_m, a, b, w)?;
    let mut acc = Float::new(w);
    for (k, pk) in p.iter().enumerate() {
        if pk.is_zero() {
            continue;
        }
        for (j, wj) in weight.iter().enumerate() {
            if wj.is_zero() {
                continue;
            }
            acc += Float::with_val(w, pk * wj) * &mom[2 * k + j];
        }
    }
    Ok(Float::with_val(prec, acc))
}

/// Exact Laguerre coefficient of `L_n(0)`, exposed for normalization rows.
pub fn laguerre_at_zero(n: usize) -> Rational {
    laguerre::table(n).at_zero(n).clone()
}
