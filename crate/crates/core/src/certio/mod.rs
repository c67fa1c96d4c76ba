//! Certificate files and SDP interchange files.
//!
//! A certificate is plain text, one record per line:
//!
//! ```text
//! # kind=Z d=2            (optional header)
//! R
//! X₂ entries
//! X₃ entries
//! X₄ entries
//! Λ                        (P and PTilde only)
//! monomial coefficients of f
//! ```
//!
//! Matrices are written full and row-major. The reader also accepts the
//! upper triangle (row-major, `i ≤ j`), told apart by the entry count. The
//! monomial line lists the coefficients of `x^0, x^2, …, x^{4d+2}` in the
//! polynomial part of `f`. All numbers are decimal and read back exactly.

pub mod sdpa;

use std::io::{BufRead, Write};

use rug::ops::Pow;
use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};
use crate::functionals::Candidate;
use crate::gausspoly::GaussianPoly;
use crate::linalg::Mat;
use crate::sosmodel::{function_from_blocks, SosParameterization};
use crate::{mp, FunctionalKind};

pub use sdpa::{export_problem, read_problem};

/// Digits written by default.
pub const DEFAULT_DECIMALS: usize = 100;

/// Square symmetric matrix with exact rational entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactMatrix {
    n: usize,
    data: Vec<Rational>,
}

impl ExactMatrix {
    pub fn zeros(n: usize) -> Self {
        ExactMatrix { n, data: vec![Rational::new(); n * n] }
    }

    /// Exact copy of a floating-point matrix, symmetrized.
    pub fn from_mat(m: &Mat) -> Self {
        let n = m.rows();
        let mut out = ExactMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let v = Rational::from(mp::to_rational(&m[(i, j)]) + mp::to_rational(&m[(j, i)])) / 2u32;
                out.data[i * n + j] = v;
            }
        }
        out
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Rational) -> Self {
        let mut out = ExactMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                out.data[j * n + i] = v.clone();
                out.data[i * n + j] = v;
            }
        }
        out
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.n + j]
    }

    /// Sets `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.data[j * self.n + i] = v.clone();
        self.data[i * self.n + j] = v;
    }

    pub fn to_mat(&self, prec: u32) -> Mat {
        Mat::from_fn(prec, self.n, self.n, |i, j| Float::with_val(prec, self.get(i, j)))
    }

    fn rounded(&self, decimals: usize) -> Self {
        ExactMatrix { n: self.n, data: self.data.iter().map(|q| round_decimal(q, decimals)).collect() }
    }
}

/// Candidate proof object: the matrices `X₂, X₃, X₄` at radius `R`.
#[derive(Clone, Debug, PartialEq)]
pub struct SosCertificate {
    pub kind: FunctionalKind,
    pub d: usize,
    pub r: Rational,
    pub lambda: Option<Rational>,
    pub x2: ExactMatrix,
    pub x3: ExactMatrix,
    pub x4: ExactMatrix,
    /// Coefficients of `x^{2k}` in the polynomial part of `f`, as read from
    /// or written to file. Informational only.
    pub monomial_coeffs: Option<Vec<Rational>>,
}

impl SosCertificate {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidArgument("degree d must be at least 1".into()));
        }
        if self.r <= 0 {
            return Err(Error::NonpositiveRadius);
        }
        match (&self.lambda, self.kind.is_threshold()) {
            (Some(l), true) if *l <= 0 => return Err(Error::NonpositiveLambda),
            (Some(_), true) | (None, false) => {}
            (None, true) => return Err(Error::InvalidArgument(format!("{} certificate needs a lambda", self.kind))),
            (Some(_), false) => {
                return Err(Error::InvalidArgument(format!("{} certificate must not carry a lambda", self.kind)))
            }
        }
        for m in [&self.x2, &self.x3, &self.x4] {
            if m.size() != self.d + 1 {
                return Err(Error::InvalidArgument(format!(
                    "matrix size {} does not match d = {}",
                    m.size(),
                    self.d
                )));
            }
        }
        Ok(())
    }

    /// Rounds every number to `decimals` significant digits, so the result
    /// is exactly what a file written with `decimals` digits holds.
    pub fn rounded(&self, decimals: usize) -> Self {
        SosCertificate {
            kind: self.kind,
            d: self.d,
            r: round_decimal(&self.r, decimals),
            lambda: self.lambda.as_ref().map(|l| round_decimal(l, decimals)),
            x2: self.x2.rounded(decimals),
            x3: self.x3.rounded(decimals),
            x4: self.x4.rounded(decimals),
            monomial_coeffs: self.monomial_coeffs.as_ref().map(|v| v.iter().map(|q| round_decimal(q, decimals)).collect()),
        }
    }

    pub fn parameterization(&self, prec: u32) -> Result<SosParameterization> {
        SosParameterization::new(self.d, self.r.clone(), prec)
    }

    /// `f(x) = (R² - x²) v(x²)ᵀ X₂ v(x²) e^{-πx²}` in the Laguerre basis.
    pub fn function(&self, prec: u32) -> Result<GaussianPoly> {
        let p = self.parameterization(prec)?;
        Ok(function_from_blocks(&p, None, &self.x2.to_mat(prec)))
    }

    pub fn candidate(&self, prec: u32) -> Result<Candidate> {
        let f = self.function(prec)?;
        Candidate::poly(f, Float::with_val(prec, &self.r))
    }

    /// Fills `monomial_coeffs` from `X₂`, computed at `prec` bits.
    pub fn with_monomial_coeffs(mut self, prec: u32) -> Result<Self> {
        let f = self.function(prec)?;
        self.monomial_coeffs = Some(f.monomial_coeffs().iter().map(mp::to_rational).collect());
        Ok(self)
    }
}

/// Nearest decimal with `digits` significant digits.
pub fn round_decimal(q: &Rational, digits: usize) -> Rational {
    if *q == 0 {
        return Rational::new();
    }
    parse_decimal(&format_decimal(q, digits)).expect("formatter output parses")
}

/// `q` in scientific notation with `digits` significant digits.
pub fn format_decimal(q: &Rational, digits: usize) -> String {
    if *q == 0 {
        return "0".to_string();
    }
    let prec = (digits as f64 * std::f64::consts::LOG2_10) as u32 + 64;
    let f = Float::with_val(prec, q);
    mp::to_sci(&f, digits)
}

/// Exact value of a decimal literal such as `-1.25e-3`.
pub fn parse_decimal(s: &str) -> Option<Rational> {
    let s = s.trim();
    let (neg, body) = match s.as_bytes().first()? {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (mantissa, exp) = match body.find(['e', 'E']) {
        Some(pos) => (&body[..pos], body[pos + 1..].parse::<i64>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(pos) => (&mantissa[..pos], &mantissa[pos + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut num = Integer::from_str_radix(if digits.is_empty() { "0" } else { &digits }, 10).ok()?;
    if neg {
        num = -num;
    }
    let shift = exp - frac_part.len() as i64;
    if shift.unsigned_abs() > 100_000 {
        return None;
    }
    let ten = Integer::from(10);
    let mut q = Rational::from(num);
    if shift >= 0 {
        q *= Integer::from(ten.pow(shift as u32));
    } else {
        q /= Integer::from(ten.pow((-shift) as u32));
    }
    Some(q)
}

/// Significant digits in a decimal token.
fn significant_digits(token: &str) -> usize {
    let mantissa = token.split(['e', 'E']).next().unwrap_or("");
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let trimmed = digits.trim_start_matches('0');
    trimmed.len().max(1)
}

fn write_matrix(out: &mut impl Write, m: &ExactMatrix, decimals: usize) -> Result<()> {
    let n = m.size();
    let mut first = true;
    for i in 0..n {
        for j in 0..n {
            if !first {
                out.write_all(b" ")?;
            }
            first = false;
            out.write_all(format_decimal(m.get(i, j), decimals).as_bytes())?;
        }
    }
    out.write_all(b"\n")?;
    Ok(())
}

/// Writes `cert` with `decimals` significant digits per number.
pub fn write_certificate(cert: &SosCertificate, out: &mut impl Write, decimals: usize) -> Result<()> {
    cert.validate()?;
    writeln!(out, "# kind={} d={}", cert.kind, cert.d)?;
    writeln!(out, "{}", format_decimal(&cert.r, decimals))?;
    for m in [&cert.x2, &cert.x3, &cert.x4] {
        write_matrix(out, m, decimals)?;
    }
    if let Some(l) = &cert.lambda {
        writeln!(out, "{}", format_decimal(l, decimals))?;
    }
    let coeffs = match &cert.monomial_coeffs {
        Some(c) => c.clone(),
        None => cert.clone().with_monomial_coeffs(crate::mp::DEFAULT_PRECISION)?.monomial_coeffs.unwrap_or_default(),
    };
    let line: Vec<String> = coeffs.iter().map(|c| format_decimal(c, decimals)).collect();
    writeln!(out, "{}", line.join(" "))?;
    Ok(())
}

pub fn certificate_to_string(cert: &SosCertificate, decimals: usize) -> Result<String> {
    let mut buf = Vec::new();
    write_certificate(cert, &mut buf, decimals)?;
    Ok(String::from_utf8(buf).expect("ascii output"))
}

struct Line {
    number: usize,
    tokens: Vec<(usize, String)>,
}

fn parse_tokens(line: &Line) -> Result<Vec<Rational>> {
    line.tokens
        .iter()
        .map(|(col, tok)| {
            parse_decimal(tok).ok_or_else(|| Error::Parse {
                line: line.number,
                column: *col,
                message: format!("not a decimal number: '{tok}'"),
            })
        })
        .collect()
}

fn parse_scalar(line: &Line) -> Result<Rational> {
    let v = parse_tokens(line)?;
    if v.len() != 1 {
        return Err(Error::DimensionMismatch { line: line.number, expected: 1, found: v.len() });
    }
    Ok(v.into_iter().next().expect("one entry"))
}

fn parse_matrix(line: &Line, n: usize) -> Result<ExactMatrix> {
    let v = parse_tokens(line)?;
    let full = n * n;
    let tri = n * (n + 1) / 2;
    let mut m = ExactMatrix::zeros(n);
    if v.len() == full {
        let digits = line.tokens.iter().map(|(_, t)| significant_digits(t)).max().unwrap_or(1);
        let scale = v.iter().map(|q| Rational::from(q.abs_ref())).max().unwrap_or_default().max(Rational::from(1));
        let tol = Rational::from(Rational::from(10).pow(1 - digits as i32)) * scale;
        for i in 0..n {
            for j in i..n {
                let a = &v[i * n + j];
                let b = &v[j * n + i];
                let diff = Rational::from(a - b).abs();
                if diff > tol {
                    let asym = Float::with_val(64, &diff);
                    return Err(Error::Asymmetric { line: line.number, asymmetry: format!("{asym:.3e}") });
                }
                m.set(i, j, Rational::from(a + b) / 2u32);
            }
        }
    } else if v.len() == tri {
        let mut it = v.into_iter();
        for i in 0..n {
            for j in i..n {
                m.set(i, j, it.next().expect("count checked"));
            }
        }
    } else {
        return Err(Error::DimensionMismatch { line: line.number, expected: full, found: v.len() });
    }
    Ok(m)
}

fn parse_header(text: &str, line: usize, kind: FunctionalKind, d: usize) -> Result<()> {
    for field in text.trim_start_matches('#').split_whitespace() {
        if let Some(k) = field.strip_prefix("kind=") {
            let found: FunctionalKind = k.parse().map_err(|_| Error::Parse {
                line,
                column: 1,
                message: format!("unknown kind '{k}' in header"),
            })?;
            if found != kind {
                return Err(Error::KindMismatch { expected: kind.to_string(), found: found.to_string() });
            }
        } else if let Some(v) = field.strip_prefix("d=") {
            let found: usize = v.parse().map_err(|_| Error::Parse {
                line,
                column: 1,
                message: format!("bad degree '{v}' in header"),
            })?;
            if found != d {
                return Err(Error::DegreeMismatch { expected: d, found });
            }
        }
    }
    Ok(())
}

/// Reads a certificate for `kind` at degree `d`.
pub fn read_certificate(source: impl BufRead, kind: FunctionalKind, d: usize) -> Result<SosCertificate> {
    if d == 0 {
        return Err(Error::InvalidArgument("degree d must be at least 1".into()));
    }
    let mut lines = Vec::new();
    for (idx, text) in source.lines().enumerate() {
        let text = text?;
        let number = idx + 1;
        let trimmed = text.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('#') {
            parse_header(trimmed, number, kind, d)?;
            continue;
        }
        let mut tokens = Vec::new();
        let mut col = 0;
        for piece in text.split(|c: char| c.is_whitespace()) {
            if !piece.is_empty() {
                tokens.push((col + 1, piece.to_string()));
            }
            col += piece.len() + 1;
        }
        lines.push(Line { number, tokens });
    }
    let n = d + 1;
    let threshold = kind.is_threshold();
    let required = if threshold { 5 } else { 4 };
    let last_number = lines.last().map_or(0, |l| l.number);
    if lines.len() < required {
        return Err(Error::DimensionMismatch {
            line: last_number + 1,
            expected: if lines.is_empty() { 1 } else { n * n },
            found: 0,
        });
    }
    if lines.len() > required + 1 {
        return Err(Error::Parse {
            line: lines[required + 1].number,
            column: 1,
            message: "unexpected extra line".into(),
        });
    }
    let r = parse_scalar(&lines[0])?;
    let x2 = parse_matrix(&lines[1], n)?;
    let x3 = parse_matrix(&lines[2], n)?;
    let x4 = parse_matrix(&lines[3], n)?;
    let lambda = if threshold { Some(parse_scalar(&lines[4])?) } else { None };
    let monomial_coeffs = match lines.get(required) {
        Some(line) => {
            let v = parse_tokens(line)?;
            if v.len() != 2 * d + 2 {
                return Err(Error::DimensionMismatch { line: line.number, expected: 2 * d + 2, found: v.len() });
            }
            Some(v)
        }
        None => None,
    };
    let cert = SosCertificate { kind, d, r, lambda, x2, x3, x4, monomial_coeffs };
    cert.validate()?;
    Ok(cert)
}

pub fn read_certificate_str(text: &str, kind: FunctionalKind, d: usize) -> Result<SosCertificate> {
    read_certificate(text.as_bytes(), kind, d)
}

/// Kind and degree declared in a certificate header, if any.
pub fn peek_header(text: &str) -> (Option<FunctionalKind>, Option<usize>) {
    let mut kind = None;
    let mut d = None;
    for line in text.lines().map(str::trim).filter(|l| l.starts_with('#')) {
        for field in line.trim_start_matches('#').split_whitespace() {
            if let Some(k) = field.strip_prefix("kind=") {
                kind = k.parse().ok();
            } else if let Some(v) = field.strip_prefix("d=") {
                d = v.parse().ok();
            }
        }
    }
    (kind, d)
}
