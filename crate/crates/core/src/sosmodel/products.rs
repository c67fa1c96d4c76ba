//! Exact Laguerre expansions of `L_i L_j` and `y L_i L_j`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rug::Rational;

use crate::gausspoly::laguerre;

/// `g[k]` holds the coefficient of `L_k` in `L_i L_j` at `i*(d+1)+j`; `h[k]`
/// the same for `y L_i L_j`. Both run over `k = 0..=2d+1`.
#[derive(Debug)]
pub struct ProductTable {
    pub d: usize,
    g: Vec<Vec<Rational>>,
    h: Vec<Vec<Rational>>,
}

impl ProductTable {
    fn build(d: usize) -> Self {
        let n = d + 1;
        let kmax = 2 * d + 1;
        let table = laguerre::table(kmax);
        let mut g = vec![vec![Rational::new(); n * n]; kmax + 1];
        let mut h = vec![vec![Rational::new(); n * n]; kmax + 1];
        for i in 0..n {
            for j in i..n {
                // product in powers of y
                let mut prod = vec![Rational::new(); i + j + 2];
                for (a, qa) in table.coeffs[i].iter().enumerate() {
                    for (b, qb) in table.coeffs[j].iter().enumerate() {
                        prod[a + b] += Rational::from(qa * qb);
                    }
                }
                for (m, c) in prod.iter().enumerate() {
                    if *c == 0 {
                        continue;
                    }
                    for (k, q) in table.inverse[m].iter().enumerate().take(m + 1) {
                        if *q != 0 {
                            g[k][i * n + j] += Rational::from(c * q);
                        }
                    }
                    for (k, q) in table.inverse[m + 1].iter().enumerate().take(m + 2) {
                        if *q != 0 {
                            h[k][i * n + j] += Rational::from(c * q);
                        }
                    }
                }
                if i != j {
                    for k in 0..=kmax {
                        let v = g[k][i * n + j].clone();
                        g[k][j * n + i] = v;
                        let v = h[k][i * n + j].clone();
                        h[k][j * n + i] = v;
                    }
                }
            }
        }
        ProductTable { d, g, h }
    }

    pub fn g(&self, k: usize, i: usize, j: usize) -> &Rational {
        &self.g[k][i * (self.d + 1) + j]
    }

    pub fn h(&self, k: usize, i: usize, j: usize) -> &Rational {
        &self.h[k][i * (self.d + 1) + j]
    }
}

static CACHE: OnceLock<Mutex<HashMap<usize, Arc<ProductTable>>>> = OnceLock::new();

/// Cached table for degree `d`.
pub fn product_table(d: usize) -> Arc<ProductTable> {
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().expect("product table lock").get(&d) {
        return Arc::clone(t);
    }
    // built outside the lock so parallel sweeps over different d do not serialize
    let t = Arc::new(ProductTable::build(d));
    cache.lock().expect("product table lock").entry(d).or_insert(t).clone()
}
