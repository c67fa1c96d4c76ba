//! Infeasible primal-dual path following with the HKM direction and a
//! Mehrotra predictor-corrector.

use log::{debug, trace};
use rug::ops::Pow;
use rug::Float;

use super::{SdpProblem, SdpSolution, SolveMode, SolverOptions, Status};
use crate::error::{Error, Result};
use crate::linalg::Mat;

/// Consecutive iterations with both step lengths below this count as stalled.
const TINY_STEP: f64 = 1e-12;
const TINY_STEP_PATIENCE: usize = 8;

struct Scaled {
    sizes: Vec<usize>,
    rows: Vec<Vec<(usize, Mat)>>,
    b: Vec<Float>,
    scale: Vec<Float>,
    costs: Vec<Mat>,
}

fn preprocess(problem: &SdpProblem, prec: u32) -> Result<Scaled> {
    let sizes: Vec<usize> = problem.blocks.iter().map(|b| b.size).collect();
    let mut rows = Vec::with_capacity(problem.constraints.len());
    let mut b = Vec::with_capacity(problem.constraints.len());
    let mut scale = Vec::with_capacity(problem.constraints.len());
    for row in &problem.constraints {
        let mut norm = Float::new(prec);
        for (_, a) in &row.terms {
            norm.max_mut(&a.max_abs());
        }
        if norm.is_zero() {
            return Err(Error::DegenerateRows);
        }
        let s = Float::with_val(prec, 1) / norm;
        let terms = row
            .terms
            .iter()
            .filter(|(_, a)| !a.is_zero())
            .map(|(i, a)| (*i, a.with_prec(prec).scale(&s)))
            .collect();
        rows.push(terms);
        b.push(Float::with_val(prec, &row.rhs * &s));
        scale.push(s);
    }
    let costs = match problem.mode {
        SolveMode::Minimize => problem.costs.iter().map(|c| c.with_prec(prec)).collect(),
        SolveMode::AnalyticCenter => sizes.iter().map(|&n| Mat::zeros(prec, n, n)).collect(),
    };
    let scaled = Scaled { sizes, rows, b, scale, costs };
    check_rank(&scaled, prec)?;
    Ok(scaled)
}

/// Rejects rank-deficient row sets through a Cholesky factorization of the
/// Gram matrix with a relative pivot threshold.
fn check_rank(p: &Scaled, prec: u32) -> Result<()> {
    let m = p.rows.len();
    let mut gram = Mat::zeros(prec, m, m);
    for k in 0..m {
        for j in 0..=k {
            let v = row_dot(&p.rows[k], &p.rows[j], prec);
            gram[(k, j)] = v.clone();
            gram[(j, k)] = v;
        }
    }
    let max_diag = (0..m).map(|k| gram[(k, k)].clone()).fold(Float::new(prec), |a, b| a.max(&b));
    let floor = Float::with_val(prec, Float::u_exp(1, -(prec as i32) / 2)) * &max_diag;
    let mut l = Mat::zeros(prec, m, m);
    for j in 0..m {
        let mut d = gram[(j, j)].clone();
        for k in 0..j {
            d -= Float::with_val(prec, l[(j, k)].square_ref());
        }
        if d <= floor {
            return Err(Error::DegenerateRows);
        }
        let d = d.sqrt();
        for i in (j + 1)..m {
            let mut s = gram[(i, j)].clone();
            for k in 0..j {
                s -= Float::with_val(prec, &l[(i, k)] * &l[(j, k)]);
            }
            l[(i, j)] = s / &d;
        }
        l[(j, j)] = d;
    }
    Ok(())
}

fn row_dot(a: &[(usize, Mat)], b: &[(usize, Mat)], prec: u32) -> Float {
    let mut acc = Float::new(prec);
    for (i, ai) in a {
        for (j, bj) in b {
            if i == j {
                acc += ai.dot(bj);
            }
        }
    }
    acc
}

fn apply(row: &[(usize, Mat)], x: &[Mat], prec: u32) -> Float {
    let mut acc = Float::new(prec);
    for (i, a) in row {
        acc += a.dot(&x[*i]);
    }
    acc
}

/// `Σ_j y_j A_ij` for every block `i`.
fn adjoint(p: &Scaled, y: &[Float], prec: u32) -> Vec<Mat> {
    let mut out: Vec<Mat> = p.sizes.iter().map(|&n| Mat::zeros(prec, n, n)).collect();
    for (row, yj) in p.rows.iter().zip(y) {
        if yj.is_zero() {
            continue;
        }
        for (i, a) in row {
            out[*i].axpy(yj, a);
        }
    }
    out
}

fn inner(a: &[Mat], b: &[Mat], prec: u32) -> Float {
    let mut acc = Float::new(prec);
    for (x, y) in a.iter().zip(b) {
        acc += x.dot(y);
    }
    acc
}

/// Largest step in `[0, 1]` that keeps every block positive definite.
fn step_length(chols: &[Mat], dir: &[Mat], fraction: f64, prec: u32) -> Float {
    let mut alpha = Float::with_val(prec, 1);
    for (l, d) in chols.iter().zip(dir) {
        if let Some(max) = Mat::max_step_to_boundary(l, d) {
            let cand = max * fraction;
            alpha.min_mut(&cand);
        }
    }
    alpha
}

struct Direction {
    dx: Vec<Mat>,
    dy: Vec<Float>,
    ds: Vec<Mat>,
}

/// Solves for the HKM direction given the `Z` term of
/// `dX = Z + X(Aᵀdy)S⁻¹`.
fn direction(
    p: &Scaled,
    schur: &Mat,
    x: &[Mat],
    sinv: &[Mat],
    rp: &[Float],
    rd: &[Mat],
    z: &[Mat],
    prec: u32,
) -> Direction {
    let rhs: Vec<Float> = p.rows.iter().zip(rp).map(|(row, r)| Float::with_val(prec, r - apply(row, z, prec))).collect();
    let dy = schur.cholesky_solve(&rhs);
    let ady = adjoint(p, &dy, prec);
    let ds: Vec<Mat> = rd.iter().zip(&ady).map(|(r, a)| r.sub(a)).collect();
    let dx = (0..x.len())
        .map(|i| {
            let mut t = x[i].matmul(&ady[i]).matmul(&sinv[i]);
            t.add_assign(&z[i]);
            t.sym()
        })
        .collect();
    Direction { dx, dy, ds }
}

fn schur_complement(p: &Scaled, x: &[Mat], sinv: &[Mat], prec: u32) -> Mat {
    let m = p.rows.len();
    let mut out = Mat::zeros(prec, m, m);
    for j in 0..m {
        for (bi, a) in &p.rows[j] {
            let prod = x[*bi].matmul(a).matmul(&sinv[*bi]);
            for k in 0..=j {
                for (bk, ak) in &p.rows[k] {
                    if bk == bi {
                        let v = ak.trace_product(&prod);
                        out[(k, j)] += &v;
                    }
                }
            }
        }
    }
    for j in 0..m {
        for k in 0..j {
            let v = out[(k, j)].clone();
            out[(j, k)] = v;
        }
    }
    out
}

fn max_abs_vec(v: &[Float], prec: u32) -> Float {
    v.iter().fold(Float::new(prec), |acc, x| acc.max(&Float::with_val(prec, x.abs_ref())))
}

fn max_abs_blocks(v: &[Mat], prec: u32) -> Float {
    v.iter().fold(Float::new(prec), |acc, m| acc.max(&m.max_abs()))
}

/// `‖Lᵀ S L - μI‖_F / μ` per block with `X = LLᵀ`, maximized.
fn centrality(xchol: &[Mat], s: &[Mat], mu: &Float, prec: u32) -> Float {
    let mut worst = Float::new(prec);
    for (l, si) in xchol.iter().zip(s) {
        let w = l.transpose().matmul(si).matmul(l);
        let n = w.rows();
        let mut dev = w;
        for i in 0..n {
            dev[(i, i)] -= mu;
        }
        let r = dev.frobenius_norm() / mu;
        worst.max_mut(&r);
    }
    worst
}

/// Certificate of primal infeasibility from the dual iterate: `bᵀy > 0` with
/// `-Σ y_j A_j ⪰ 0` up to a relative tolerance.
fn farkas(p: &Scaled, y: &[Float], prec: u32) -> bool {
    let by = y.iter().zip(&p.b).fold(Float::new(prec), |acc, (a, b)| acc + Float::with_val(prec, a * b));
    if by <= 0 {
        return false;
    }
    let ay = adjoint(p, y, prec);
    let scale = max_abs_blocks(&ay, prec);
    if scale.is_zero() {
        return false;
    }
    let tol = Float::with_val(prec, &scale * 1e-12f64);
    let w: Vec<Mat> = ay.iter().map(|a| a.neg()).collect();
    // the normalized violation must be small against bᵀy as well
    w.iter().all(|wi| wi.min_eigenvalue() >= Float::with_val(prec, -&tol)) && by > Float::with_val(prec, &scale * 1e-6f64)
}

/// Solves the problem in the mode it declares.
pub fn solve(problem: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    problem.validate()?;
    let prec = opts.precision;
    let p = preprocess(problem, prec)?;
    let m = p.rows.len();
    let n_total: usize = p.sizes.iter().sum();
    let tol = Float::with_val(prec, opts.gap_tolerance);
    let ctol = Float::with_val(prec, opts.centrality_tolerance);
    let b_norm = Float::with_val(prec, max_abs_vec(&p.b, prec) + 1u32);
    let c_norm = Float::with_val(prec, max_abs_blocks(&p.costs, prec) + 1u32);

    let start = Float::with_val(prec, opts.initial_scale);
    let mut x: Vec<Mat> = p.sizes.iter().map(|&n| Mat::scaled_identity(n, &start)).collect();
    let mut s: Vec<Mat> = x.clone();
    let mut y = vec![Float::new(prec); m];
    let mut status = Status::Stalled;
    let mut iterations = 0;
    let mut tiny_steps = 0;
    let mu_target = Float::with_val(prec, 1);

    while iterations < opts.max_iterations {
        let rp: Vec<Float> =
            p.rows.iter().zip(&p.b).map(|(row, bj)| Float::with_val(prec, bj - apply(row, &x, prec))).collect();
        let ay = adjoint(&p, &y, prec);
        let rd: Vec<Mat> = (0..x.len()).map(|i| p.costs[i].sub(&s[i]).sub(&ay[i])).collect();
        let pobj = inner(&p.costs, &x, prec);
        let dobj = y.iter().zip(&p.b).fold(Float::new(prec), |acc, (a, b)| acc + Float::with_val(prec, a * b));
        let mu = inner(&x, &s, prec) / n_total as u32;
        let pinf = max_abs_vec(&rp, prec) / &b_norm;
        let dinf = max_abs_blocks(&rd, prec) / &c_norm;
        let scale = Float::with_val(prec, pobj.abs_ref()) + Float::with_val(prec, dobj.abs_ref()) + 1u32;
        let gap = Float::with_val(prec, &pobj - &dobj).abs() / &scale;

        let xchol: Option<Vec<Mat>> = x.iter().map(Mat::cholesky).collect();
        let schol: Option<Vec<Mat>> = s.iter().map(Mat::cholesky).collect();
        let (Some(xchol), Some(schol)) = (xchol, schol) else {
            debug!("iterate left the cone at iteration {iterations}");
            break;
        };

        trace!(
            "iter {iterations}: pobj {:.6e} dobj {:.6e} pinf {:.3e} dinf {:.3e} mu {:.3e}",
            pobj.to_f64(),
            dobj.to_f64(),
            pinf.to_f64(),
            dinf.to_f64(),
            mu.to_f64()
        );

        if pinf <= tol && dinf <= tol {
            debug_assert!(
                problem.mode == SolveMode::AnalyticCenter
                    || Float::with_val(prec, &pobj - &dobj) >= Float::with_val(prec, &scale * -1e-20f64),
                "weak duality violated at a feasible iterate"
            );
            match problem.mode {
                SolveMode::Minimize if gap <= tol => {
                    status = Status::Optimal;
                    break;
                }
                SolveMode::AnalyticCenter if centrality(&xchol, &s, &mu_target, prec) <= ctol => {
                    status = Status::Feasible;
                    break;
                }
                _ => {}
            }
        }
        if problem.mode == SolveMode::Minimize && dobj > Float::with_val(prec, &c_norm * 1e40f64) && farkas(&p, &y, prec) {
            status = Status::Infeasible;
            break;
        }

        let sinv: Vec<Mat> = schol.iter().map(Mat::cholesky_inverse).collect();
        let schur = schur_complement(&p, &x, &sinv, prec);
        let Some(schur_chol) = schur.cholesky() else {
            debug!("Schur complement lost definiteness at iteration {iterations}");
            break;
        };
        let x_rd_sinv: Vec<Mat> = (0..x.len()).map(|i| x[i].matmul(&rd[i]).matmul(&sinv[i])).collect();

        let dir = match problem.mode {
            SolveMode::Minimize => {
                let z_aff: Vec<Mat> = (0..x.len()).map(|i| x[i].add(&x_rd_sinv[i]).neg()).collect();
                let aff = direction(&p, &schur_chol, &x, &sinv, &rp, &rd, &z_aff, prec);
                let ap = step_length(&xchol, &aff.dx, 1.0, prec);
                let ad = step_length(&schol, &aff.ds, 1.0, prec);
                let mut mu_aff = Float::new(prec);
                for i in 0..x.len() {
                    let mut xa = x[i].clone();
                    xa.axpy(&ap, &aff.dx[i]);
                    let mut sa = s[i].clone();
                    sa.axpy(&ad, &aff.ds[i]);
                    mu_aff += xa.dot(&sa);
                }
                mu_aff /= n_total as u32;
                let ratio = Float::with_val(prec, &mu_aff / &mu).max(&Float::new(prec)).min(&Float::with_val(prec, 1));
                // short predictor steps call for more centering
                let amin = Float::with_val(prec, ap.min_ref(&ad)).to_f64();
                let expon = if amin < 1.0 / 3f64.sqrt() { 1.0 } else { (3.0 * amin * amin).max(1.0) };
                let sigma = Float::with_val(prec, ratio.pow(expon));
                let smu = Float::with_val(prec, &sigma * &mu);
                let z: Vec<Mat> = (0..x.len())
                    .map(|i| {
                        let mut t = sinv[i].scale(&smu);
                        t.sub_assign(&x[i]);
                        let mut corr = x_rd_sinv[i].clone();
                        corr.add_assign(&aff.dx[i].matmul(&aff.ds[i]).matmul(&sinv[i]));
                        t.sub_assign(&corr);
                        t
                    })
                    .collect();
                direction(&p, &schur_chol, &x, &sinv, &rp, &rd, &z, prec)
            }
            SolveMode::AnalyticCenter => {
                let z: Vec<Mat> = (0..x.len())
                    .map(|i| {
                        let mut t = sinv[i].scale(&mu_target);
                        t.sub_assign(&x[i]);
                        t.sub_assign(&x_rd_sinv[i]);
                        t
                    })
                    .collect();
                direction(&p, &schur_chol, &x, &sinv, &rp, &rd, &z, prec)
            }
        };

        let ap = step_length(&xchol, &dir.dx, opts.step_fraction, prec);
        let ad = step_length(&schol, &dir.ds, opts.step_fraction, prec);
        if ap < TINY_STEP && ad < TINY_STEP {
            tiny_steps += 1;
            if tiny_steps >= TINY_STEP_PATIENCE {
                debug!("steps stalled at iteration {iterations}");
                iterations += 1;
                break;
            }
        } else {
            tiny_steps = 0;
        }
        for i in 0..x.len() {
            x[i].axpy(&ap, &dir.dx[i]);
            s[i].axpy(&ad, &dir.ds[i]);
        }
        for (yj, dyj) in y.iter_mut().zip(&dir.dy) {
            *yj += Float::with_val(prec, &ad * dyj);
        }
        iterations += 1;
    }

    if status == Status::Stalled && farkas(&p, &y, prec) {
        status = Status::Infeasible;
    }

    // undo the row scaling on the dual vector
    let y: Vec<Float> = y.iter().zip(&p.scale).map(|(v, s)| Float::with_val(prec, v * s)).collect();
    let offset = Float::with_val(prec, &problem.offset);
    let costs: Vec<Mat> = problem.costs.iter().map(|c| c.with_prec(prec)).collect();
    let primal_objective = inner(&costs, &x, prec) + &offset;
    let dual_objective = problem
        .constraints
        .iter()
        .zip(&y)
        .fold(Float::with_val(prec, &offset), |acc, (row, yj)| acc + Float::with_val(prec, &row.rhs * yj));
    let duality_gap = Float::with_val(prec, &primal_objective - &dual_objective).abs();
    debug!(
        "sdp finished: {status} after {iterations} iterations, objective {:.12e}, gap {:.3e}",
        primal_objective.to_f64(),
        duality_gap.to_f64()
    );
    Ok(SdpSolution { x, y, s, primal_objective, dual_objective, duality_gap, status, iterations })
}
