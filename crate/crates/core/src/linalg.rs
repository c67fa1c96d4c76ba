//! Dense multiple-precision matrices.
//!
//! Problem sizes here are tiny (blocks of at most a few dozen rows), so a
//! plain row-major `Vec<Float>` with textbook kernels is all we need. Inner
//! products accumulate with fused multiply-add (`acc += &a * &b`).

use std::fmt;

use rug::ops::NegAssign;
use rug::{Assign, Float};

#[derive(Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    prec: u32,
    data: Vec<Float>,
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} @{}", self.rows, self.cols, self.prec)?;
        for i in 0..self.rows {
            let row: Vec<String> =
                (0..self.cols).map(|j| format!("{:.6e}", self[(i, j)].to_f64())).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = Float;
    fn index(&self, (i, j): (usize, usize)) -> &Float {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Float {
        &mut self.data[i * self.cols + j]
    }
}

impl Mat {
    pub fn zeros(prec: u32, rows: usize, cols: usize) -> Self {
        Mat { rows, cols, prec, data: vec![Float::new(prec); rows * cols] }
    }

    pub fn identity(prec: u32, n: usize) -> Self {
        let mut m = Mat::zeros(prec, n, n);
        for i in 0..n {
            m[(i, i)] = Float::with_val(prec, 1);
        }
        m
    }

    pub fn scaled_identity(n: usize, s: &Float) -> Self {
        let mut m = Mat::zeros(s.prec(), n, n);
        for i in 0..n {
            m[(i, i)].assign(s);
        }
        m
    }

    pub fn from_fn(prec: u32, rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Float) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(Float::with_val(prec, f(i, j)));
            }
        }
        Mat { rows, cols, prec, data }
    }

    pub fn from_f64(prec: u32, rows: usize, cols: usize, vals: &[f64]) -> Self {
        assert_eq!(vals.len(), rows * cols);
        Mat::from_fn(prec, rows, cols, |i, j| Float::with_val(prec, vals[i * cols + j]))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Float] {
        &self.data
    }

    /// Rounds every entry to a new precision.
    pub fn with_prec(&self, prec: u32) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            prec,
            data: self.data.iter().map(|x| Float::with_val(prec, x)).collect(),
        }
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.prec, self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul shape");
        let mut out = Mat::zeros(self.prec, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let idx = i * other.cols + j;
                    out.data[idx] += a * &other[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Mat) -> Mat {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn add_assign(&mut self, other: &Mat) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        let mut out = self.clone();
        out.sub_assign(other);
        out
    }

    pub fn sub_assign(&mut self, other: &Mat) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a -= b;
        }
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: &Float, other: &Mat) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        if s.is_zero() {
            return;
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn scale(&self, s: &Float) -> Mat {
        let mut out = self.clone();
        out.scale_assign(s);
        out
    }

    pub fn scale_assign(&mut self, s: &Float) {
        for a in &mut self.data {
            *a *= s;
        }
    }

    pub fn neg(&self) -> Mat {
        let mut out = self.clone();
        for a in &mut out.data {
            a.neg_assign();
        }
        out
    }

    /// `(A + Aᵀ) / 2`
    pub fn sym(&self) -> Mat {
        assert!(self.is_square());
        let n = self.rows;
        let mut out = Mat::zeros(self.prec, n, n);
        for i in 0..n {
            for j in 0..n {
                let mut s = Float::with_val(self.prec, &self[(i, j)] + &self[(j, i)]);
                s >>= 1;
                out[(i, j)] = s;
            }
        }
        out
    }

    /// Frobenius inner product `Σ a_ij b_ij` (equals `tr(AᵀB)`).
    pub fn dot(&self, other: &Mat) -> Float {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut acc = Float::new(self.prec);
        for (a, b) in self.data.iter().zip(&other.data) {
            acc += a * b;
        }
        acc
    }

    /// `tr(self · other)` without forming the product.
    pub fn trace_product(&self, other: &Mat) -> Float {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.rows, other.cols);
        let mut acc = Float::new(self.prec);
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += &self[(i, k)] * &other[(k, i)];
            }
        }
        acc
    }

    pub fn trace(&self) -> Float {
        let mut acc = Float::new(self.prec);
        for i in 0..self.rows.min(self.cols) {
            acc += &self[(i, i)];
        }
        acc
    }

    pub fn max_abs(&self) -> Float {
        let mut m = Float::new(self.prec);
        for a in &self.data {
            if a.cmp_abs(&m) == Some(std::cmp::Ordering::Greater) {
                m = Float::with_val(self.prec, a.abs_ref());
            }
        }
        m
    }

    pub fn frobenius_norm(&self) -> Float {
        self.dot(self).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn asymmetry(&self) -> Float {
        assert!(self.is_square());
        let mut m = Float::new(self.prec);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let d = Float::with_val(self.prec, &self[(i, j)] - &self[(j, i)]).abs();
                if d > m {
                    m = d;
                }
            }
        }
        m
    }

    /// Lower-triangular Cholesky factor, or `None` if a pivot is not
    /// strictly positive.
    pub fn cholesky(&self) -> Option<Mat> {
        assert!(self.is_square());
        let n = self.rows;
        let mut l = Mat::zeros(self.prec, n, n);
        for j in 0..n {
            let mut d = self[(j, j)].clone();
            for k in 0..j {
                d -= Float::with_val(self.prec, l[(j, k)].square_ref());
            }
            if d <= 0 || d.is_nan() {
                return None;
            }
            let d = d.sqrt();
            for i in (j + 1)..n {
                let mut s = self[(i, j)].clone();
                for k in 0..j {
                    s -= &l[(i, k)] * &l[(j, k)];
                }
                l[(i, j)] = s / &d;
            }
            l[(j, j)] = d;
        }
        Some(l)
    }

    /// Solves `L x = b` for lower-triangular `L = self`.
    pub fn forward_substitute(&self, b: &[Float]) -> Vec<Float> {
        let n = self.rows;
        let mut x: Vec<Float> = Vec::with_capacity(n);
        for i in 0..n {
            let mut s = b[i].clone();
            for (k, xk) in x.iter().enumerate() {
                s -= &self[(i, k)] * xk;
            }
            x.push(s / &self[(i, i)]);
        }
        x
    }

    /// Solves `Lᵀ x = b` for lower-triangular `L = self`.
    pub fn backward_substitute_transposed(&self, b: &[Float]) -> Vec<Float> {
        let n = self.rows;
        let mut x = vec![Float::new(self.prec); n];
        for i in (0..n).rev() {
            let mut s = b[i].clone();
            for k in (i + 1)..n {
                s -= &self[(k, i)] * &x[k];
            }
            x[i] = s / &self[(i, i)];
        }
        x
    }

    /// Solves `(L Lᵀ) x = b` given the Cholesky factor `L = self`.
    pub fn cholesky_solve(&self, b: &[Float]) -> Vec<Float> {
        let y = self.forward_substitute(b);
        self.backward_substitute_transposed(&y)
    }

    /// `L⁻¹ · B` for lower-triangular `L = self`.
    pub fn forward_substitute_mat(&self, b: &Mat) -> Mat {
        let n = self.rows;
        let mut out = Mat::zeros(self.prec, n, b.cols);
        for j in 0..b.cols {
            for i in 0..n {
                let mut s = b[(i, j)].clone();
                for k in 0..i {
                    s -= &self[(i, k)] * &out[(k, j)];
                }
                out[(i, j)] = s / &self[(i, i)];
            }
        }
        out
    }

    /// Inverse of a symmetric positive definite matrix from its Cholesky
    /// factor `L = self`.
    pub fn cholesky_inverse(&self) -> Mat {
        let n = self.rows;
        let linv = self.forward_substitute_mat(&Mat::identity(self.prec, n));
        // A⁻¹ = L⁻ᵀ L⁻¹
        let mut out = Mat::zeros(self.prec, n, n);
        for i in 0..n {
            for j in i..n {
                let mut s = Float::new(self.prec);
                for k in j..n {
                    s += &linv[(k, i)] * &linv[(k, j)];
                }
                out[(j, i)].assign(&s);
                out[(i, j)] = s;
            }
        }
        out
    }

    /// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
    ///
    /// Returns eigenvalues in ascending order with the matching eigenvectors
    /// as the columns of the second component.
    pub fn sym_eigen(&self) -> (Vec<Float>, Mat) {
        assert!(self.is_square());
        let n = self.rows;
        let prec = self.prec;
        let mut a = self.sym();
        let mut v = Mat::identity(prec, n);
        let scale = a.frobenius_norm();
        if scale.is_zero() {
            return (vec![Float::new(prec); n], v);
        }
        let eps = Float::with_val(prec, Float::u_exp(1, 2 - prec as i32)) * &scale;
        for _sweep in 0..100 {
            let mut off = Float::new(prec);
            for i in 0..n {
                for j in (i + 1)..n {
                    off += Float::with_val(prec, a[(i, j)].square_ref());
                }
            }
            if off.sqrt() <= eps {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    if a[(p, q)].is_zero() {
                        continue;
                    }
                    jacobi_rotate(&mut a, &mut v, p, q);
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap());
        let vals = order.iter().map(|&i| a[(i, i)].clone()).collect();
        let vecs = Mat::from_fn(prec, n, n, |r, c| v[(r, order[c])].clone());
        (vals, vecs)
    }

    /// Smallest eigenvalue of the symmetric part, by Householder reduction
    /// to tridiagonal form and Sturm-sequence bisection.
    pub fn min_eigenvalue(&self) -> Float {
        assert!(self.is_square());
        let prec = self.prec;
        if self.rows == 0 {
            return Float::new(prec);
        }
        let (d, e) = self.sym().tridiagonalize();
        let n = d.len();
        // Gershgorin interval
        let mut lo = Float::with_val(prec, f64::INFINITY);
        let mut hi = Float::with_val(prec, f64::NEG_INFINITY);
        for i in 0..n {
            let mut r = Float::new(prec);
            if i > 0 {
                r += Float::with_val(prec, e[i - 1].abs_ref());
            }
            if i + 1 < n {
                r += Float::with_val(prec, e[i].abs_ref());
            }
            lo.min_mut(&Float::with_val(prec, &d[i] - &r));
            hi.max_mut(&Float::with_val(prec, &d[i] + &r));
        }
        let e2: Vec<Float> = e.iter().map(|x| Float::with_val(prec, x.square_ref())).collect();
        let width = Float::with_val(prec, &hi - &lo);
        let stop = Float::with_val(prec, Float::u_exp(1, 4 - prec as i32)) * Float::with_val(prec, lo.abs_ref()).max(&Float::with_val(prec, hi.abs_ref()));
        let mut mid = Float::new(prec);
        let mut steps = 0;
        while Float::with_val(prec, &hi - &lo) > stop && steps < prec + 64 + width.get_exp().unwrap_or(0).max(0) as u32 {
            mid.assign(&lo + &hi);
            mid /= 2u32;
            if sturm_count(&d, &e2, &mid) >= 1 {
                hi.assign(&mid);
            } else {
                lo.assign(&mid);
            }
            steps += 1;
        }
        lo + hi >> 1u32
    }

    /// Householder reduction of a symmetric matrix to tridiagonal form.
    /// Returns the diagonal and the off-diagonal.
    fn tridiagonalize(&self) -> (Vec<Float>, Vec<Float>) {
        let n = self.rows;
        let prec = self.prec;
        let mut a = self.clone();
        let mut off = Vec::with_capacity(n.saturating_sub(1));
        for k in 0..n.saturating_sub(1) {
            let mut norm2 = Float::new(prec);
            for i in (k + 1)..n {
                norm2 += &a[(i, k)] * &a[(i, k)];
            }
            if k + 2 == n || norm2.is_zero() {
                off.push(a[(k + 1, k)].clone());
                continue;
            }
            let norm = norm2.clone().sqrt();
            let alpha = if a[(k + 1, k)].is_sign_negative() { norm } else { -norm };
            // u = x - alpha e1, normalized
            let mut u: Vec<Float> = ((k + 1)..n).map(|i| a[(i, k)].clone()).collect();
            u[0] -= &alpha;
            let mut un = Float::new(prec);
            for x in &u {
                un += x * x;
            }
            let un = un.sqrt();
            for x in u.iter_mut() {
                *x /= &un;
            }
            let m = u.len();
            let mut p = vec![Float::new(prec); m];
            for i in 0..m {
                for j in 0..m {
                    p[i] += &a[(k + 1 + i, k + 1 + j)] * &u[j];
                }
            }
            let mut kk = Float::new(prec);
            for i in 0..m {
                kk += &u[i] * &p[i];
            }
            let q: Vec<Float> = (0..m).map(|i| Float::with_val(prec, &p[i] - &kk * &u[i]) * 2u32).collect();
            for i in 0..m {
                for j in 0..m {
                    let t = Float::with_val(prec, &u[i] * &q[j]) + Float::with_val(prec, &q[i] * &u[j]);
                    a[(k + 1 + i, k + 1 + j)] -= t;
                }
            }
            off.push(alpha);
        }
        let diag = (0..n).map(|i| a[(i, i)].clone()).collect();
        (diag, off)
    }

    /// Largest `alpha` with `self + alpha·dir` positive semidefinite, where
    /// `chol` is the Cholesky factor of `self`. Returns `None` when the
    /// direction never leaves the cone.
    pub fn max_step_to_boundary(chol: &Mat, dir: &Mat) -> Option<Float> {
        // eigenvalues of L⁻¹ D L⁻ᵀ
        let y = chol.forward_substitute_mat(dir);
        let z = chol.forward_substitute_mat(&y.transpose());
        let lam = z.min_eigenvalue();
        if lam >= 0 {
            None
        } else {
            Some(Float::with_val(chol.prec, -1) / lam)
        }
    }
}

/// Number of eigenvalues below `x` of the tridiagonal matrix with diagonal
/// `d` and squared off-diagonal `e2`.
fn sturm_count(d: &[Float], e2: &[Float], x: &Float) -> usize {
    let prec = x.prec();
    let tiny = Float::with_val(prec, Float::u_exp(1, -(prec as i32) * 2));
    let mut count = 0;
    let mut q = Float::with_val(prec, &d[0] - x);
    for i in 0..d.len() {
        if i > 0 {
            let t = Float::with_val(prec, &e2[i - 1] / &q);
            q.assign(&d[i] - x);
            q -= t;
        }
        if q.is_zero() {
            q.assign(&tiny);
        }
        if q.is_sign_negative() {
            count += 1;
        }
    }
    count
}

fn jacobi_rotate(a: &mut Mat, v: &mut Mat, p: usize, q: usize) {
    let prec = a.prec;
    let n = a.rows;
    let apq = a[(p, q)].clone();
    let theta = Float::with_val(prec, &a[(q, q)] - &a[(p, p)]) / (Float::with_val(prec, &apq * 2u32));
    // t = sign(θ) / (|θ| + sqrt(θ² + 1))
    let root = (Float::with_val(prec, theta.square_ref()) + 1u32).sqrt();
    let mut t = (Float::with_val(prec, theta.abs_ref()) + &root).recip();
    if theta.is_sign_negative() {
        t = -t;
    }
    let c = (Float::with_val(prec, t.square_ref()) + 1u32).sqrt().recip();
    let s = Float::with_val(prec, &t * &c);
    let tau = Float::with_val(prec, &s / Float::with_val(prec, &c + 1u32));

    let tapq = Float::with_val(prec, &t * &apq);
    a[(p, p)] -= &tapq;
    a[(q, q)] += &tapq;
    a[(p, q)] = Float::new(prec);
    a[(q, p)] = Float::new(prec);
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = a[(r, p)].clone();
        let arq = a[(r, q)].clone();
        let new_rp = Float::with_val(prec, &arp - &s * Float::with_val(prec, &arq + &tau * &arp));
        let new_rq = Float::with_val(prec, &arq + &s * Float::with_val(prec, &arp - &tau * &arq));
        a[(r, p)].assign(&new_rp);
        a[(p, r)] = new_rp;
        a[(r, q)].assign(&new_rq);
        a[(q, r)] = new_rq;
    }
    for r in 0..n {
        let vrp = v[(r, p)].clone();
        let vrq = v[(r, q)].clone();
        v[(r, p)] = Float::with_val(prec, &vrp - &s * Float::with_val(prec, &vrq + &tau * &vrp));
        v[(r, q)] = Float::with_val(prec, &vrq + &s * Float::with_val(prec, &vrp - &tau * &vrq));
    }
}


/// Dot product of two vectors.
pub fn vdot(a: &[Float], b: &[Float]) -> Float {
    let prec = a.first().map_or(53, |x| x.prec());
    let mut acc = Float::new(prec);
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

pub fn vnorm_inf(a: &[Float]) -> Float {
    let prec = a.first().map_or(53, |x| x.prec());
    let mut m = Float::new(prec);
    for x in a {
        let ax = Float::with_val(prec, x.abs_ref());
        if ax > m {
            m = ax;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: u32 = 128;

    fn close(a: &Float, b: f64, tol: f64) -> bool {
        (a.to_f64() - b).abs() <= tol
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = Mat::from_f64(P, 3, 3, &[4.0, 2.0, 0.4, 2.0, 5.0, 1.0, 0.4, 1.0, 3.0]);
        let l = a.cholesky().unwrap();
        let back = l.matmul(&l.transpose());
        assert!(back.sub(&a).max_abs() < 1e-35);
        let inv = l.cholesky_inverse();
        let id = inv.matmul(&a);
        assert!(id.sub(&Mat::identity(P, 3)).max_abs() < 1e-35);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Mat::from_f64(P, 2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(a.cholesky().is_none());
    }

    #[test]
    fn jacobi_eigenvalues_of_known_matrix() {
        // eigenvalues of [[2,1],[1,2]] are 1 and 3
        let a = Mat::from_f64(P, 2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let (vals, vecs) = a.sym_eigen();
        assert!(close(&vals[0], 1.0, 1e-30) && close(&vals[1], 3.0, 1e-30));
        // A v = λ v
        let av = a.matmul(&vecs);
        for c in 0..2 {
            for r in 0..2 {
                let lhs = av[(r, c)].to_f64();
                let rhs = vals[c].to_f64() * vecs[(r, c)].to_f64();
                assert!((lhs - rhs).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn sturm_minimum_matches_jacobi() {
        let mut seed = 7u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for n in 1..9 {
            let mut a = Mat::zeros(P, n, n);
            for i in 0..n {
                for j in i..n {
                    let v = Float::with_val(P, next());
                    a[(i, j)] = v.clone();
                    a[(j, i)] = v;
                }
            }
            let fast = a.min_eigenvalue();
            let (vals, _) = a.sym_eigen();
            assert!(Float::with_val(P, &fast - &vals[0]).abs() < 1e-33, "n={n}");
        }
        let d = Mat::from_f64(P, 3, 3, &[1.0, 0.0, 0.0, 0.0, -1e-30, 0.0, 0.0, 0.0, 2.0]);
        assert!(d.min_eigenvalue() < 0);
    }

    #[test]
    fn step_to_boundary_matches_eigen() {
        let x = Mat::identity(P, 2);
        let d = Mat::from_f64(P, 2, 2, &[-2.0, 0.0, 0.0, 1.0]);
        let l = x.cholesky().unwrap();
        let a = Mat::max_step_to_boundary(&l, &d).unwrap();
        assert!(close(&a, 0.5, 1e-30));
        let up = Mat::from_f64(P, 2, 2, &[1.0, 0.0, 0.0, 1.0]);
        assert!(Mat::max_step_to_boundary(&l, &up).is_none());
    }
}
