//! Generalized Laguerre polynomials with parameter `-1/2`.
//!
//! Exact coefficient tables come from the three-term recurrence run over
//! rationals; numeric evaluation uses the same recurrence in floating point.
//! The tables are cached process-wide, since every degree bound reuses them.

use std::sync::{Arc, Mutex, OnceLock};

use rug::{Float, Rational};

/// Exact tables for `L_n^{-1/2}(y)`, `n = 0..=n_max`.
#[derive(Debug)]
pub struct LaguerreTable {
    /// `coeffs[n][i]` is the coefficient of `y^i` in `L_n(y)`.
    pub coeffs: Vec<Vec<Rational>>,
    /// `inverse[k][n]` is the coefficient of `L_n` in the expansion of `y^k`.
    pub inverse: Vec<Vec<Rational>>,
}

impl LaguerreTable {
    fn build(n_max: usize) -> Self {
        let half = Rational::from((1, 2));
        let mut coeffs: Vec<Vec<Rational>> = Vec::with_capacity(n_max + 1);
        coeffs.push(vec![Rational::from(1)]);
        if n_max >= 1 {
            coeffs.push(vec![half.clone(), Rational::from(-1)]);
        }
        // (n+1) L_{n+1} = (2n + 1/2 - y) L_n - (n - 1/2) L_{n-1}
        for n in 1..n_max {
            let a = Rational::from(2 * n as i64) + &half;
            let b = Rational::from(n as i64) - &half;
            let mut next = vec![Rational::new(); n + 2];
            for (i, c) in coeffs[n].iter().enumerate() {
                next[i] += Rational::from(&a * c);
                next[i + 1] -= c;
            }
            for (i, c) in coeffs[n - 1].iter().enumerate() {
                next[i] -= Rational::from(&b * c);
            }
            let denom = Rational::from(n as i64 + 1);
            for c in &mut next {
                *c /= &denom;
            }
            coeffs.push(next);
        }

        // Invert the lower-triangular coefficient matrix column by column.
        let mut inverse = Vec::with_capacity(n_max + 1);
        for k in 0..=n_max {
            let mut rem = vec![Rational::new(); k + 1];
            rem[k] = Rational::from(1);
            let mut out = vec![Rational::new(); n_max + 1];
            for n in (0..=k).rev() {
                if rem[n] == 0 {
                    continue;
                }
                let c = Rational::from(&rem[n] / &coeffs[n][n]);
                for (i, q) in coeffs[n].iter().enumerate() {
                    rem[i] -= Rational::from(&c * q);
                }
                out[n] = c;
            }
            inverse.push(out);
        }
        LaguerreTable { coeffs, inverse }
    }

    pub fn n_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `L_n(0) = binom(n - 1/2, n)`.
    pub fn at_zero(&self, n: usize) -> &Rational {
        &self.coeffs[n][0]
    }
}

static TABLE: OnceLock<Mutex<Option<Arc<LaguerreTable>>>> = OnceLock::new();

/// Returns a table covering at least degrees `0..=n_max`.
pub fn table(n_max: usize) -> Arc<LaguerreTable> {
    let cell = TABLE.get_or_init(|| Mutex::new(None));
    let mut guard = cell.lock().expect("laguerre table lock");
    if let Some(t) = guard.as_ref() {
        if t.n_max() >= n_max {
            return Arc::clone(t);
        }
    }
    let t = Arc::new(LaguerreTable::build(n_max.max(8)));
    *guard = Some(Arc::clone(&t));
    t
}

/// `[L_0(y), …, L_{n_max}(y)]` by the three-term recurrence.
pub fn values(n_max: usize, y: &Float) -> Vec<Float> {
    let prec = y.prec();
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(Float::with_val(prec, 1));
    if n_max == 0 {
        return out;
    }
    out.push(Float::with_val(prec, 0.5) - y);
    for n in 1..n_max {
        let a = Float::with_val(prec, 2 * n as u32) + 0.5f64 - y;
        let b = Float::with_val(prec, n as u32) - 0.5f64;
        let next = (a * &out[n] - b * &out[n - 1]) / (n as u32 + 1);
        out.push(next);
    }
    out
}
