//! Interval verification of SOS certificates.
//!
//! A certificate is accepted when `X₂`, `X₃` and `X₄` are positive definite
//! and the residual of the Fourier identity `𝒯f = f̂_SOS` can be absorbed
//! into `X₃` and `X₄` without leaving the positive semidefinite cone. All
//! arithmetic is outward-rounded interval arithmetic over the exact rational
//! certificate entries, so every reported bound is rigorous.

pub mod interval;

use rug::{Float, Rational};
use serde_json::{json, Value};

use crate::certio::{ExactMatrix, SosCertificate};
use crate::error::{Error, Result};
use crate::functionals::{objective_form, threshold_form, FunctionalForm, SeriesTruncation, Side};
use crate::gausspoly::laguerre;
use crate::linalg::Mat;
use crate::sosmodel::product_table;
use crate::FunctionalKind;

pub use interval::Interval;

/// Shift bisection steps in the eigenvalue lower bound.
const SHIFT_STEPS: usize = 20;

/// Square matrix of intervals, row-major.
#[derive(Clone, Debug)]
pub struct IntervalMatrix {
    n: usize,
    data: Vec<Interval>,
}

impl IntervalMatrix {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Interval) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        IntervalMatrix { n, data }
    }

    pub fn from_exact(m: &ExactMatrix, prec: u32) -> Self {
        Self::from_fn(m.size(), |i, j| Interval::from_rational(prec, m.get(i, j)))
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Interval {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Interval) {
        self.data[i * self.n + j] = v;
    }

    /// Matrix of midpoints.
    pub fn mid(&self, prec: u32) -> Mat {
        Mat::from_fn(prec, self.n, self.n, |i, j| Float::with_val(prec, self.get(i, j).mid()))
    }

    fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

/// Outcome of a positive-definiteness check.
#[derive(Clone, Debug)]
pub struct PdCheck {
    pub positive_definite: bool,
    /// Rigorous lower bound on the smallest eigenvalue of every symmetric
    /// matrix in the enclosure; `None` when positive definiteness failed.
    pub lower_bound: Option<Float>,
}

/// Interval Cholesky of `m - shift·I`; true when every pivot is provably
/// positive.
fn interval_cholesky_succeeds(m: &IntervalMatrix, shift: &Float, prec: u32) -> bool {
    let n = m.size();
    let s = Interval::from_float(prec, shift);
    let mut l: Vec<Interval> = vec![Interval::zero(prec); n * n];
    for j in 0..n {
        let mut d = m.get(j, j).sub(&s);
        for k in 0..j {
            d = d.sub(&l[j * n + k].sqr());
        }
        if !d.is_positive() {
            return false;
        }
        let pivot = d.sqrt().expect("positive pivot");
        for i in (j + 1)..n {
            let mut v = m.get(i, j).clone();
            for k in 0..j {
                v = v.sub(&l[i * n + k].mul(&l[j * n + k]));
            }
            l[i * n + j] = v.div(&pivot).expect("pivot excludes zero");
        }
        l[j * n + j] = pivot;
    }
    true
}

/// Decides positive definiteness of every symmetric matrix enclosed by `m`
/// and bounds the smallest eigenvalue from below.
///
/// The bound comes from bisecting a shift `s ∈ [0, λ̃]`, where `λ̃` is a
/// floating-point estimate for the midpoint matrix: `M - sI` passing interval
/// Cholesky proves `λ_min > s`.
pub fn check_positive_definite(m: &IntervalMatrix, prec: u32) -> Result<PdCheck> {
    if !m.is_symmetric() {
        return Err(Error::NonSymmetric);
    }
    if m.size() == 0 || !interval_cholesky_succeeds(m, &Float::new(prec), prec) {
        return Ok(PdCheck { positive_definite: m.size() == 0, lower_bound: None });
    }
    let estimate = m.mid(prec).min_eigenvalue();
    if estimate <= 0 {
        return Ok(PdCheck { positive_definite: true, lower_bound: Some(Float::new(prec)) });
    }
    // most certificates pass at 99% of the estimate, which saves the bisection
    let quick = Float::with_val(prec, &estimate * 0.99f64);
    let mut lo = Float::new(prec);
    let mut hi = estimate;
    if interval_cholesky_succeeds(m, &quick, prec) {
        lo = quick;
    } else {
        hi = quick;
    }
    for _ in 0..SHIFT_STEPS {
        let mid = Float::with_val(prec, &lo + &hi) / 2u32;
        if interval_cholesky_succeeds(m, &mid, prec) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(PdCheck { positive_definite: true, lower_bound: Some(lo) })
}

/// Enclosures of `∫_a^b x^m e^{-πx²} dx` for `m = 0..=max_m`, `0 ≤ a ≤ b`.
///
/// Uses `J₀` from `erf`, `J₁` in closed form and the integration-by-parts
/// recurrence upward. The recurrence loses about `log₂((m-1)/(2πb²))` bits
/// per step, which the caller covers with working precision.
pub fn gaussian_moments(max_m: usize, a: &Rational, b: &Rational, prec: u32) -> Vec<Interval> {
    assert!(*a >= 0 && a <= b, "moment interval must satisfy 0 <= a <= b");
    let pi = Interval::pi(prec);
    let two_pi = pi.mul_u(2);
    let ia = Interval::from_rational(prec, a);
    let ib = Interval::from_rational(prec, b);
    let ea = ia.sqr().mul(&pi).neg().exp();
    let eb = ib.sqr().mul(&pi).neg().exp();
    let sqrt_pi = pi.sqrt().expect("pi is positive");
    let j0 = ib.mul(&sqrt_pi).erf().sub(&ia.mul(&sqrt_pi).erf()).div_u(2);
    let mut out = vec![j0];
    if max_m == 0 {
        return out;
    }
    out.push(ea.sub(&eb).div(&two_pi).expect("2π excludes zero"));
    let mut apow = ia.clone();
    let mut bpow = ib.clone();
    for m in 2..=max_m {
        let boundary = apow.mul(&ea).sub(&bpow.mul(&eb));
        let prev = out[m - 2].mul_u(m as u32 - 1);
        out.push(boundary.add(&prev).div(&two_pi).expect("2π excludes zero"));
        apow = apow.mul(&ia);
        bpow = bpow.mul(&ib);
    }
    out
}

/// Bits the upward moment recurrence loses up to order `max_m` on `[·, b]`.
fn recurrence_loss_bits(max_m: usize, b: &Rational) -> u32 {
    let b2 = b.to_f64().powi(2).max(1e-6);
    let mut bits = 0.0;
    for m in 2..=max_m {
        let amp = (m as f64 - 1.0) / (2.0 * std::f64::consts::PI * b2);
        if amp > 1.0 {
            bits += amp.log2();
        }
    }
    bits.ceil() as u32
}

/// Working precision that keeps `form` evaluated on `n` Laguerre functions
/// at roughly `prec` bits of accuracy.
fn working_precision(form: &FunctionalForm, n: usize, prec: u32) -> u32 {
    let max_m = 2 * n.saturating_sub(1) + form.max_weight_degree();
    let loss = form.pieces.iter().map(|p| recurrence_loss_bits(max_m, &p.b)).max().unwrap_or(0);
    prec + 64 + 4 * n as u32 + loss
}

/// Enclosures of the linear part of `form` (origin term plus pieces, no
/// constant, no normalization) on `L_k(2πx²) e^{-πx²}`, `k < n`.
pub fn form_on_laguerre_interval(form: &FunctionalForm, n: usize, prec: u32) -> Vec<Interval> {
    let w = working_precision(form, n, prec);
    let table = laguerre::table(n);
    let two_pi = Interval::pi(w).mul_u(2);
    let mut mono = vec![Interval::zero(w); n];
    for piece in &form.pieces {
        let deg = piece.weight.len().saturating_sub(1);
        let mom = gaussian_moments(2 * (n - 1) + deg, &piece.a, &piece.b, w);
        for (i, m) in mono.iter_mut().enumerate() {
            for (j, c) in piece.weight.iter().enumerate() {
                if *c != 0 {
                    *m = m.add(&mom[2 * i + j].mul_rational(c));
                }
            }
        }
    }
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = Interval::zero(w);
        let mut pw = Interval::one(w);
        for (i, q) in table.coeffs[k].iter().enumerate() {
            acc = acc.add(&pw.mul(&mono[i]).mul_rational(q));
            pw = pw.mul(&two_pi);
        }
        if form.origin_coef != 0 {
            acc = acc.add(&Interval::from_rational(w, &Rational::from(&form.origin_coef * table.at_zero(k))));
        }
        out.push(acc);
    }
    out
}

/// `Σ_ij coef(i,j)·X_ij`, skipping structural zeros.
fn exact_dot(coef: impl Fn(usize, usize) -> Rational, x: &IntervalMatrix, prec: u32) -> Interval {
    let n = x.size();
    let mut acc = Interval::zero(prec);
    for i in 0..n {
        for j in i..n {
            let c = coef(i, j);
            if c == 0 {
                continue;
            }
            let term = x.get(i, j).mul_rational(&c);
            acc = acc.add(&if i == j { term } else { term.mul_u(2) });
        }
    }
    acc
}

/// Interval data of a certificate at working precision.
struct CertData {
    d: usize,
    prec: u32,
    r2: Rational,
    two_pi: Interval,
    x2: IntervalMatrix,
    x3: IntervalMatrix,
    x4: IntervalMatrix,
}

impl CertData {
    fn new(cert: &SosCertificate, prec: u32) -> Self {
        CertData {
            d: cert.d,
            prec,
            r2: Rational::from(cert.r.square_ref()),
            two_pi: Interval::pi(prec).mul_u(2),
            x2: IntervalMatrix::from_exact(&cert.x2, prec),
            x3: IntervalMatrix::from_exact(&cert.x3, prec),
            x4: IntervalMatrix::from_exact(&cert.x4, prec),
        }
    }

    fn n_coeffs(&self) -> usize {
        2 * self.d + 2
    }

    /// Laguerre coefficients `a_k = (R² G_k - H_k/2π) • X₂` of `f`.
    fn function_coeffs(&self) -> Vec<Interval> {
        let t = product_table(self.d);
        (0..self.n_coeffs())
            .map(|k| {
                let g = exact_dot(|i, j| t.g(k, i, j).clone(), &self.x2, self.prec);
                let h = exact_dot(|i, j| t.h(k, i, j).clone(), &self.x2, self.prec);
                g.mul_rational(&self.r2).sub(&h.div(&self.two_pi).expect("2π excludes zero"))
            })
            .collect()
    }

    /// Laguerre coefficients of `G_k • X₃ + (H_k/2π) • X₄`.
    fn sos_fourier_coeffs(&self) -> Vec<Interval> {
        let t = product_table(self.d);
        (0..self.n_coeffs())
            .map(|k| {
                let g = exact_dot(|i, j| t.g(k, i, j).clone(), &self.x3, self.prec);
                let h = exact_dot(|i, j| t.h(k, i, j).clone(), &self.x4, self.prec);
                g.add(&h.div(&self.two_pi).expect("2π excludes zero"))
            })
            .collect()
    }
}

fn signed(k: usize, v: &Interval) -> Interval {
    if k % 2 == 0 {
        v.clone()
    } else {
        v.neg()
    }
}

/// `Σ_k coeffs[k]·L_k(0)`.
fn value_at_zero(coeffs: &[Interval], prec: u32) -> Interval {
    let table = laguerre::table(coeffs.len());
    coeffs.iter().enumerate().fold(Interval::zero(prec), |acc, (k, a)| acc.add(&a.mul_rational(table.at_zero(k))))
}

/// Laguerre coefficients `r_k` of `𝒯f - f̂_SOS`.
pub fn residual_laguerre(cert: &SosCertificate, prec: u32) -> Result<Vec<Interval>> {
    cert.validate()?;
    let data = CertData::new(cert, prec);
    Ok(residual_from(&data))
}

fn residual_from(data: &CertData) -> Vec<Interval> {
    let a = data.function_coeffs();
    let s = data.sos_fourier_coeffs();
    a.iter().zip(&s).enumerate().map(|(k, (ak, sk))| signed(k, ak).sub(sk)).collect()
}

/// Location of one residual-absorbing entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResidualEntry {
    /// `X₃[i][i]`, contributing `L_i²`.
    X3Diagonal(usize),
    /// `X₃[i][i+1]` and `X₃[i+1][i]`, contributing `2 L_i L_{i+1}`.
    X3Upper(usize),
    /// `X₄[d][d]`, contributing `t L_d²`.
    X4Corner,
}

/// Entry family indexed by the top Laguerre degree it reaches:
/// `2i → X₃[i][i]`, `2i+1 → X₃[i][i+1]` for `i < d`, `2d+1 → X₄[d][d]`.
pub fn residual_family(d: usize) -> Vec<ResidualEntry> {
    let mut fam = Vec::with_capacity(2 * d + 2);
    for i in 0..=d {
        fam.push(ResidualEntry::X3Diagonal(i));
        if i < d {
            fam.push(ResidualEntry::X3Upper(i));
        }
    }
    fam.push(ResidualEntry::X4Corner);
    fam
}

/// Solves `Σ_e c_e·φ_e = residual` over the family of [`residual_family`].
///
/// The Laguerre expansion of each `φ_e` stops at its own index, so the system
/// is upper triangular and back substitution suffices.
pub fn residual_coefficients(d: usize, residual: &[Interval], prec: u32) -> Result<Vec<Interval>> {
    let n = 2 * d + 2;
    if residual.len() != n {
        return Err(Error::InvalidArgument(format!("expected {n} residual coefficients, got {}", residual.len())));
    }
    let t = product_table(d);
    let two_pi = Interval::pi(prec).mul_u(2);
    let fam = residual_family(d);
    // column e, row k
    let entry = |e: usize, k: usize| -> Interval {
        match fam[e] {
            ResidualEntry::X3Diagonal(i) => Interval::from_rational(prec, t.g(k, i, i)),
            ResidualEntry::X3Upper(i) => Interval::from_rational(prec, t.g(k, i, i + 1)).mul_u(2),
            ResidualEntry::X4Corner => {
                Interval::from_rational(prec, t.h(k, d, d)).div(&two_pi).expect("2π excludes zero")
            }
        }
    };
    let mut c = vec![Interval::zero(prec); n];
    for k in (0..n).rev() {
        let mut rhs = residual[k].clone();
        for (e, ce) in c.iter().enumerate().skip(k + 1) {
            rhs = rhs.sub(&entry(e, k).mul(ce));
        }
        c[k] = rhs.div(&entry(k, k)).ok_or(Error::ResidualNotRepresentable)?;
    }
    Ok(c)
}

/// Enclosure of the functional value certified by `cert`.
///
/// Minimization kinds give the modified functional of `f`; threshold kinds
/// give `p_f(Λ)` (or `p̃_f(Λ)`) evaluated on `𝒯f`.
pub fn rigorous_functional(cert: &SosCertificate, trunc: &SeriesTruncation, prec: u32) -> Result<Interval> {
    cert.validate()?;
    let data = CertData::new(cert, working_prec_for(cert, trunc, prec)?);
    let a = data.function_coeffs();
    functional_from(cert, trunc, &a, prec)
}

fn form_for(cert: &SosCertificate, trunc: &SeriesTruncation) -> Result<FunctionalForm> {
    if cert.kind.is_threshold() {
        let lambda = cert.lambda.as_ref().ok_or_else(|| Error::InvalidArgument("threshold certificate lacks Λ".into()))?;
        threshold_form(cert.kind, &cert.r, lambda)
    } else {
        objective_form(cert.kind, &cert.r, trunc)
    }
}

fn working_prec_for(cert: &SosCertificate, trunc: &SeriesTruncation, prec: u32) -> Result<u32> {
    Ok(working_precision(&form_for(cert, trunc)?, 2 * cert.d + 2, prec))
}

fn functional_from(cert: &SosCertificate, trunc: &SeriesTruncation, a: &[Interval], prec: u32) -> Result<Interval> {
    let form = form_for(cert, trunc)?;
    let psi = form_on_laguerre_interval(&form, a.len(), prec);
    let w = psi.first().map(Interval::prec).unwrap_or(prec);
    let mut lin = Interval::zero(w);
    for (k, (ak, pk)) in a.iter().zip(&psi).enumerate() {
        let coef = match form.side {
            Side::Function => ak.clone(),
            Side::Fourier => signed(k, ak),
        };
        lin = lin.add(&coef.mul(pk));
    }
    let value = if form.normalized {
        let fhat0 = value_at_zero(&a.iter().enumerate().map(|(k, x)| signed(k, x)).collect::<Vec<_>>(), w);
        if !fhat0.is_positive() {
            return Err(Error::NormalizationDegenerate);
        }
        lin.div(&fhat0).ok_or(Error::NormalizationDegenerate)?
    } else {
        lin
    };
    Ok(value.add(&Interval::from_rational(w, &form.constant)))
}

/// One named pass/fail item of a verification.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Result of verifying a certificate. Failures are reported here, never as
/// errors.
#[derive(Clone, Debug)]
pub struct VerificationReport {
    pub kind: FunctionalKind,
    pub d: usize,
    pub r: Rational,
    pub lambda: Option<Rational>,
    pub precision: u32,
    /// `X₂`, `X₃`, `X₄` in that order.
    pub blocks: Vec<(String, PdCheck)>,
    /// `min(λ_min(X₃), λ_min(X₄))` lower bound.
    pub b: Option<Float>,
    /// `max_e |c_e|` upper bound over the residual coefficients.
    pub big_b: Option<Float>,
    pub test_passed: bool,
    pub f0: Interval,
    pub fhat0: Interval,
    /// Certified functional value for minimization kinds; `p_f(Λ)` for
    /// threshold kinds.
    pub functional_bound: Option<Interval>,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn pd_ok(&self) -> bool {
        self.blocks.iter().all(|(_, c)| c.positive_definite)
    }

    /// Bound established by the certificate, rounded outward: the upper end
    /// of the functional enclosure, or `Λ` for threshold kinds.
    pub fn certified_bound(&self) -> Option<Rational> {
        if !self.passed() {
            return None;
        }
        if self.kind.is_threshold() {
            return self.lambda.clone();
        }
        self.functional_bound.as_ref().map(|i| crate::mp::to_rational(i.hi()))
    }

    pub fn to_json(&self) -> Value {
        let digits = 25;
        let fmt = |x: &Option<Float>, up: bool| {
            x.as_ref().map(|v| {
                interval::round_str(v, digits, if up { rug::float::Round::Up } else { rug::float::Round::Down })
            })
        };
        json!({
            "kind": self.kind.name(),
            "d": self.d,
            "R": self.r.to_string(),
            "lambda": self.lambda.as_ref().map(|l| l.to_string()),
            "precision": self.precision,
            "passed": self.passed(),
            "pd_ok": self.pd_ok(),
            "blocks": self.blocks.iter().map(|(name, c)| json!({
                "name": name,
                "positive_definite": c.positive_definite,
                "lower_bound": fmt(&c.lower_bound, false),
            })).collect::<Vec<_>>(),
            "b": fmt(&self.b, false),
            "B": fmt(&self.big_b, true),
            "test_passed": self.test_passed,
            "f0": self.f0.to_decimal(digits),
            "fhat0": self.fhat0.to_decimal(digits),
            "functional_bound": self.functional_bound.as_ref().map(|i| i.to_decimal(digits)),
            "checks": self.checks.iter().map(|c| json!({
                "name": c.name, "passed": c.passed, "detail": c.detail,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Verifies `cert` at `prec` bits of interval precision.
///
/// Errors only on malformed input; every soundness failure shows up as a
/// failed check in the report.
pub fn verify(cert: &SosCertificate, trunc: &SeriesTruncation, prec: u32) -> Result<VerificationReport> {
    cert.validate()?;
    let w = working_prec_for(cert, trunc, prec)?;
    let data = CertData::new(cert, w);
    let mut checks = Vec::new();

    let mut blocks = Vec::new();
    for (name, m) in [("X2", &data.x2), ("X3", &data.x3), ("X4", &data.x4)] {
        let pd = check_positive_definite(m, prec)?;
        checks.push(Check {
            name: format!("{name} positive definite"),
            passed: pd.positive_definite,
            detail: match &pd.lower_bound {
                Some(lb) => format!("lambda_min >= {}", interval::round_str(lb, 6, rug::float::Round::Down)),
                None => "interval Cholesky failed".into(),
            },
        });
        blocks.push((name.to_string(), pd));
    }

    let a = data.function_coeffs();
    let residual: Vec<Interval> =
        a.iter().zip(data.sos_fourier_coeffs()).enumerate().map(|(k, (ak, sk))| signed(k, ak).sub(&sk)).collect();
    let b = match (&blocks[1].1.lower_bound, &blocks[2].1.lower_bound) {
        (Some(x), Some(y)) => Some(x.clone().min(y)),
        _ => None,
    };
    let big_b = residual_coefficients(cert.d, &residual, w)
        .ok()
        .map(|c| c.iter().fold(Float::new(w), |m, ci| m.max(&ci.mag())));
    let test_passed = match (&b, &big_b) {
        (Some(b), Some(bb)) => {
            let need = Float::with_val_round(w, bb * (2 * cert.d as u32 + 1), rug::float::Round::Up).0;
            *b >= need
        }
        _ => false,
    };
    checks.push(Check {
        name: "residual absorbed".into(),
        passed: test_passed,
        detail: match (&b, &big_b) {
            (Some(b), Some(bb)) => format!(
                "b = {}, (1+2d)B = {}",
                interval::round_str(b, 6, rug::float::Round::Down),
                interval::round_str(&Float::with_val(w, bb * (2 * cert.d as u32 + 1)), 6, rug::float::Round::Up)
            ),
            (_, None) => "residual not representable in the entry family".into(),
            (None, _) => "no eigenvalue lower bound".into(),
        },
    });

    let f0 = value_at_zero(&a, w);
    let fhat0 = value_at_zero(&a.iter().enumerate().map(|(k, x)| signed(k, x)).collect::<Vec<_>>(), w);
    let functional_bound = match functional_from(cert, trunc, &a, prec) {
        Ok(v) => Some(v),
        Err(Error::NormalizationDegenerate) => None,
        Err(e) => return Err(e),
    };

    if cert.kind.is_threshold() {
        let one = Interval::one(w);
        checks.push(Check {
            name: "f(0) <= 1".into(),
            passed: *f0.hi() <= *one.lo(),
            detail: format!("f(0) in {}", f0.to_decimal(12)),
        });
        checks.push(Check {
            name: "fhat(0) >= 1".into(),
            passed: *fhat0.lo() >= *one.hi(),
            detail: format!("fhat(0) in {}", fhat0.to_decimal(12)),
        });
        let ok = functional_bound.as_ref().is_some_and(Interval::is_positive);
        checks.push(Check {
            name: "p(lambda) > 0".into(),
            passed: ok,
            detail: functional_bound.as_ref().map(|v| format!("p(lambda) in {}", v.to_decimal(12))).unwrap_or_default(),
        });
    } else {
        checks.push(Check {
            name: "fhat(0) > 0".into(),
            passed: functional_bound.is_some(),
            detail: format!("fhat(0) in {}", fhat0.to_decimal(12)),
        });
    }

    Ok(VerificationReport {
        kind: cert.kind,
        d: cert.d,
        r: cert.r.clone(),
        lambda: cert.lambda.clone(),
        precision: prec,
        blocks,
        b,
        big_b,
        test_passed,
        f0,
        fhat0,
        functional_bound,
        checks,
    })
}
