//! Dense block semidefinite programs in multiple precision.
//!
//! Primal: minimize `Σ_i C_i•X_i` subject to `Σ_i A_ij•X_i = b_j`, `X_i ⪰ 0`.
//! Dual: maximize `bᵀy` subject to `Σ_j y_j A_ij + S_i = C_i`, `S_i ⪰ 0`.

mod ipm;

use rug::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Mat;

pub use ipm::solve;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockSpec {
    pub name: String,
    pub size: usize,
}

/// One equality row: `Σ_(block, A) A•X_block = rhs`.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub label: String,
    pub terms: Vec<(usize, Mat)>,
    pub rhs: Float,
}

impl Constraint {
    pub fn new(label: impl Into<String>, terms: Vec<(usize, Mat)>, rhs: Float) -> Self {
        Constraint { label: label.into(), terms, rhs }
    }

    /// `Σ A•X` over the terms of the row.
    pub fn apply(&self, x: &[Mat]) -> Float {
        let prec = self.rhs.prec();
        let mut acc = Float::new(prec);
        for (b, a) in &self.terms {
            acc += a.dot(&x[*b]);
        }
        acc
    }
}

/// A labelled list of constraint rows.
#[derive(Clone, Debug, Default)]
pub struct LinearConstraintSet {
    pub rows: Vec<Constraint>,
}

impl LinearConstraintSet {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn extend(&mut self, other: LinearConstraintSet) {
        self.rows.extend(other.rows);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SolveMode {
    Minimize,
    /// Ignore the costs and return the maximizer of `Σ log det X_i` over the
    /// feasible set.
    AnalyticCenter,
}

#[derive(Clone, Debug)]
pub struct SdpProblem {
    pub blocks: Vec<BlockSpec>,
    pub costs: Vec<Mat>,
    pub constraints: Vec<Constraint>,
    /// Added to `Σ C•X` when reporting objective values.
    pub offset: Float,
    pub mode: SolveMode,
}

impl SdpProblem {
    pub fn prec(&self) -> u32 {
        self.offset.prec()
    }

    /// Shape checks: conforming symmetric blocks and in-range block indices.
    pub fn validate(&self) -> Result<()> {
        if self.costs.len() != self.blocks.len() {
            return Err(Error::MalformedProblem("one cost matrix per block required".into()));
        }
        for (c, b) in self.costs.iter().zip(&self.blocks) {
            if c.rows() != b.size || c.cols() != b.size {
                return Err(Error::MalformedProblem(format!("cost of block {} has wrong shape", b.name)));
            }
            if !c.asymmetry().is_zero() {
                return Err(Error::NonSymmetric);
            }
        }
        for row in &self.constraints {
            for (b, a) in &row.terms {
                let Some(spec) = self.blocks.get(*b) else {
                    return Err(Error::MalformedProblem(format!("row {} names block {b}", row.label)));
                };
                if a.rows() != spec.size || a.cols() != spec.size {
                    return Err(Error::MalformedProblem(format!("row {} has wrong shape", row.label)));
                }
                if !a.asymmetry().is_zero() {
                    return Err(Error::NonSymmetric);
                }
            }
        }
        Ok(())
    }

    pub fn objective(&self, x: &[Mat]) -> Float {
        let mut acc = self.offset.clone();
        for (c, xi) in self.costs.iter().zip(x) {
            acc += c.dot(xi);
        }
        acc
    }
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub precision: u32,
    /// Relative duality gap and feasibility target.
    pub gap_tolerance: f64,
    pub max_iterations: usize,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
    /// Largest `‖X^{1/2} S X^{1/2} - μI‖ / μ` accepted as centred in
    /// analytic-center mode.
    pub centrality_tolerance: f64,
    /// Starting point `X = S = initial_scale·I`, `y = 0`.
    pub initial_scale: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            precision: crate::mp::DEFAULT_PRECISION,
            gap_tolerance: 1e-30,
            max_iterations: 500,
            step_fraction: 0.98,
            centrality_tolerance: 1e-8,
            initial_scale: 100.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    Optimal,
    Feasible,
    Infeasible,
    Stalled,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub x: Vec<Mat>,
    pub y: Vec<Float>,
    pub s: Vec<Mat>,
    pub primal_objective: Float,
    pub dual_objective: Float,
    pub duality_gap: Float,
    pub status: Status,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct Residuals {
    /// `max_j |Σ A_ij•X_i - b_j|`.
    pub primal: Float,
    /// `max |C_i - S_i - Σ_j y_j A_ij|` over all entries.
    pub dual: Float,
    /// Smallest eigenvalue estimate of each primal block.
    pub min_eigenvalues: Vec<Float>,
}

impl Residuals {
    pub fn all_blocks_positive(&self) -> bool {
        self.min_eigenvalues.iter().all(|v| *v > 0)
    }
}

/// Residual norms and eigenvalue estimates of a candidate solution.
pub fn residuals(problem: &SdpProblem, sol: &SdpSolution) -> Residuals {
    let prec = problem.prec();
    let mut primal = Float::new(prec);
    for row in &problem.constraints {
        let r = Float::with_val(prec, row.apply(&sol.x) - &row.rhs).abs();
        primal.max_mut(&r);
    }
    let mut dual = Float::new(prec);
    if !sol.y.is_empty() || !sol.s.is_empty() {
        for (bi, c) in problem.costs.iter().enumerate() {
            let mut rd = c.clone();
            if let Some(s) = sol.s.get(bi) {
                rd.sub_assign(s);
            }
            for (row, yj) in problem.constraints.iter().zip(&sol.y) {
                for (b, a) in &row.terms {
                    if *b == bi {
                        rd.axpy(&Float::with_val(prec, -yj), a);
                    }
                }
            }
            dual.max_mut(&rd.max_abs());
        }
    }
    let min_eigenvalues = sol.x.iter().map(Mat::min_eigenvalue).collect();
    Residuals { primal, dual, min_eigenvalues }
}
