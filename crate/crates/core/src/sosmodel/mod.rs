//! Sum-of-squares parameterization of the candidate functions, compiled to
//! block SDP data.
//!
//! With `t = x²` and `v(t) = (L_0(2πt), …, L_d(2πt))` the model is
//!
//! ```text
//! f(x)  = -(s₁(t) + (t - R²) s₂(t)) e^{-πt}
//! f̂(x) = (s₃(t) + t s₄(t)) e^{-πt}
//! ```
//!
//! with `s_i = vᵀ X_i v`. Products `L_i L_j` and `y L_i L_j` (`y = 2πt`) are
//! expanded exactly in the Laguerre basis, where the Fourier transform acts
//! as `(-1)^k`, so the identity `𝒯f = f̂` becomes one linear row per Laguerre
//! coefficient.

mod products;

use rug::{Float, Rational};

use crate::error::{Error, Result};
use crate::functionals::{objective_form, threshold_form, FunctionalForm, SeriesTruncation};
use crate::gausspoly::{laguerre, segment_moments, EvenPolyBasis, GaussianPoly};
use crate::linalg::Mat;
use crate::sdp::{BlockSpec, Constraint, LinearConstraintSet, SdpProblem, SolveMode};
use crate::{mp, FunctionalKind};

pub use products::{product_table, ProductTable};

#[derive(Clone, Debug, PartialEq)]
pub struct SosParameterization {
    pub d: usize,
    /// Radius where `f` changes sign, kept exact.
    pub r: Rational,
    /// Drop `X₁`, so that `f(R) = 0` holds structurally.
    pub drop_x1: bool,
    /// Working precision of the emitted SDP data, in bits.
    pub precision: u32,
    /// Threshold kinds use `f(0) = 1 - δ` and `f̂(0) = 1 + δ`.
    pub perturbation: Rational,
    /// Threshold kinds require `p_f(Λ) ≥ floor`.
    pub threshold_floor: Rational,
}

impl SosParameterization {
    pub fn new(d: usize, r: Rational, precision: u32) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("degree d must be at least 1".into()));
        }
        if r <= 0 {
            return Err(Error::NonpositiveRadius);
        }
        let tiny = Rational::from((1, 10_000_000_000u64));
        Ok(SosParameterization {
            d,
            r,
            drop_x1: true,
            precision,
            perturbation: tiny.clone(),
            threshold_floor: tiny,
        })
    }

    pub fn with_x1(mut self) -> Self {
        self.drop_x1 = false;
        self
    }

    pub fn size(&self) -> usize {
        self.d + 1
    }

    pub fn x1_index(&self) -> Option<usize> {
        (!self.drop_x1).then_some(0)
    }

    pub fn x2_index(&self) -> usize {
        usize::from(!self.drop_x1)
    }

    pub fn x3_index(&self) -> usize {
        self.x2_index() + 1
    }

    pub fn x4_index(&self) -> usize {
        self.x2_index() + 2
    }

    /// Index of the 1×1 slack block, when one is present.
    pub fn slack_index(&self) -> usize {
        self.x2_index() + 3
    }

    /// The SOS blocks, without slack.
    pub fn blocks(&self) -> Vec<BlockSpec> {
        let n = self.size();
        let mut out = Vec::new();
        if !self.drop_x1 {
            out.push(BlockSpec { name: "X1".into(), size: n });
        }
        for name in ["X2", "X3", "X4"] {
            out.push(BlockSpec { name: name.into(), size: n });
        }
        out
    }

    fn r_squared(&self) -> Float {
        Float::with_val(self.precision, Rational::from(self.r.square_ref()))
    }

    /// Number of Laguerre coefficients of `f` and `f̂`.
    pub fn n_coeffs(&self) -> usize {
        2 * self.d + 2
    }

    fn coefficient_mats(&self) -> CoefficientMats {
        CoefficientMats::new(self)
    }
}

/// `G_k` and `H_k / (2π)` as floating-point matrices, plus the `f` side
/// combination `R² G_k - H_k / (2π)`.
struct CoefficientMats {
    g: Vec<Mat>,
    h: Vec<Mat>,
    f: Vec<Mat>,
}

impl CoefficientMats {
    fn new(p: &SosParameterization) -> Self {
        let prec = p.precision;
        let table = product_table(p.d);
        let n = p.size();
        let two_pi = Float::with_val(prec, mp::pi(prec) * 2u32);
        let r2 = p.r_squared();
        let mut g = Vec::with_capacity(p.n_coeffs());
        let mut h = Vec::with_capacity(p.n_coeffs());
        let mut f = Vec::with_capacity(p.n_coeffs());
        for k in 0..p.n_coeffs() {
            let gk = Mat::from_fn(prec, n, n, |i, j| Float::with_val(prec, table.g(k, i, j)));
            let hk = Mat::from_fn(prec, n, n, |i, j| Float::with_val(prec, table.h(k, i, j)) / &two_pi);
            let fk = gk.scale(&r2).sub(&hk);
            g.push(gk);
            h.push(hk);
            f.push(fk);
        }
        CoefficientMats { g, h, f }
    }
}

/// `(-1)^k` times `m`.
fn signed(k: usize, m: &Mat) -> Mat {
    if k % 2 == 0 {
        m.clone()
    } else {
        m.neg()
    }
}

/// One row per Laguerre coefficient of `𝒯f - f̂`, `k = 0..=2d+1`.
pub fn build_identity_constraints(p: &SosParameterization) -> LinearConstraintSet {
    let mats = p.coefficient_mats();
    identity_rows(p, &mats)
}

fn identity_rows(p: &SosParameterization, mats: &CoefficientMats) -> LinearConstraintSet {
    let prec = p.precision;
    let mut rows = Vec::with_capacity(p.n_coeffs());
    for k in 0..p.n_coeffs() {
        let mut terms = Vec::with_capacity(4);
        if let Some(i1) = p.x1_index() {
            terms.push((i1, signed(k, &mats.g[k]).neg()));
        }
        terms.push((p.x2_index(), signed(k, &mats.f[k])));
        terms.push((p.x3_index(), mats.g[k].neg()));
        terms.push((p.x4_index(), mats.h[k].neg()));
        rows.push(Constraint::new(format!("identity[{k}]"), terms, Float::new(prec)));
    }
    LinearConstraintSet { rows }
}

/// `v(0) v(0)ᵀ`.
fn origin_outer(p: &SosParameterization) -> Mat {
    let prec = p.precision;
    let ell: Vec<Float> = (0..p.size()).map(|i| Float::with_val(prec, laguerre::table(p.d).at_zero(i))).collect();
    Mat::from_fn(prec, p.size(), p.size(), |i, j| Float::with_val(prec, &ell[i] * &ell[j]))
}

/// Rows fixing `f(0)` and `f̂(0)`, and `f(R) = 0` when `X₁` is present.
pub fn build_normalization_constraints(p: &SosParameterization, kind: FunctionalKind) -> LinearConstraintSet {
    let prec = p.precision;
    let outer = origin_outer(p);
    let (f0, fhat0) = if kind.is_threshold() {
        (Rational::from(1) - &p.perturbation, Rational::from(1) + &p.perturbation)
    } else {
        (Rational::from(1), Rational::from(1))
    };
    let mut f_terms = Vec::new();
    if let Some(i1) = p.x1_index() {
        f_terms.push((i1, outer.neg()));
    }
    f_terms.push((p.x2_index(), outer.scale(&p.r_squared())));
    let mut rows = vec![
        Constraint::new("f(0)", f_terms, Float::with_val(prec, &f0)),
        Constraint::new("fhat(0)", vec![(p.x3_index(), outer)], Float::with_val(prec, &fhat0)),
    ];
    if let Some(i1) = p.x1_index() {
        let y = Float::with_val(prec, mp::pi(prec) * 2u32) * Float::with_val(prec, Rational::from(p.r.square_ref()));
        let v = laguerre::values(p.d, &y);
        let m = Mat::from_fn(prec, p.size(), p.size(), |i, j| Float::with_val(prec, &v[i] * &v[j]));
        rows.push(Constraint::new("f(R)", vec![(i1, m)], Float::new(prec)));
    }
    LinearConstraintSet { rows }
}

/// Value of the linear part of `form` (no constant, no normalization) on
/// each `L_k(2πx²) e^{-πx²}`, `k < n`.
pub fn form_on_laguerre(form: &FunctionalForm, n: usize, prec: u32) -> Result<Vec<Float>> {
    // L_k has coefficients of size up to about 4^k in the monomial route.
    let w = prec + 128 + 4 * n as u32;
    let table = laguerre::table(n);
    let two_pi = Float::with_val(w, mp::pi(w) * 2u32);
    let mut out = vec![Float::new(w); n];
    // ∫ x^{2i} w(x) e^{-πx²} over the pieces, i < n
    let mut mono = vec![Float::new(w); n];
    for piece in &form.pieces {
        let deg = piece.weight.len().saturating_sub(1);
        let a = Float::with_val(w, &piece.a);
        let b = Float::with_val(w, &piece.b);
        let mom = segment_moments(2 * (n - 1) + deg, &a, Some(&b), w)?;
        for (i, m) in mono.iter_mut().enumerate() {
            for (j, c) in piece.weight.iter().enumerate() {
                if *c != 0 {
                    *m += Float::with_val(w, c) * &mom[2 * i + j];
                }
            }
        }
    }
    for (k, o) in out.iter_mut().enumerate() {
        let mut pw = Float::with_val(w, 1);
        for (i, q) in table.coeffs[k].iter().enumerate() {
            *o += Float::with_val(w, q) * Float::with_val(w, &pw * &mono[i]);
            pw *= &two_pi;
        }
        if form.origin_coef != 0 {
            *o += Float::with_val(w, &form.origin_coef) * Float::with_val(w, table.at_zero(k));
        }
    }
    Ok(out.into_iter().map(|v| Float::with_val(prec, v)).collect())
}

/// Block cost matrices and constant offset of a minimization objective.
#[derive(Clone, Debug)]
pub struct Objective {
    /// One matrix per SOS block, in block order.
    pub costs: Vec<Mat>,
    pub offset: Float,
}

/// Costs with `Σ tr(X_i C_i) + offset` equal to the modified functional of
/// `f` under `f̂(0) = 1`.
pub fn build_objective(p: &SosParameterization, kind: FunctionalKind, trunc: &SeriesTruncation) -> Result<Objective> {
    let mats = p.coefficient_mats();
    objective_with(p, kind, trunc, &mats)
}

fn objective_with(
    p: &SosParameterization,
    kind: FunctionalKind,
    trunc: &SeriesTruncation,
    mats: &CoefficientMats,
) -> Result<Objective> {
    let form = objective_form(kind, &p.r, trunc)?;
    let prec = p.precision;
    let psi = form_on_laguerre(&form, p.n_coeffs(), prec)?;
    let n = p.size();
    let mut costs: Vec<Mat> = p.blocks().iter().map(|_| Mat::zeros(prec, n, n)).collect();
    for (k, psi_k) in psi.iter().enumerate() {
        if let Some(i1) = p.x1_index() {
            costs[i1].axpy(&Float::with_val(prec, -psi_k), &mats.g[k]);
        }
        costs[p.x2_index()].axpy(psi_k, &mats.f[k]);
    }
    Ok(Objective { costs, offset: Float::with_val(prec, &form.constant) })
}

/// `p_f(Λ)` as `(X₃ matrix, X₄ matrix, constant)`.
fn threshold_parts(
    p: &SosParameterization,
    kind: FunctionalKind,
    lambda: &Rational,
    mats: &CoefficientMats,
) -> Result<(Mat, Mat, Rational)> {
    let form = threshold_form(kind, &p.r, lambda)?;
    let prec = p.precision;
    let psi = form_on_laguerre(&form, p.n_coeffs(), prec)?;
    let n = p.size();
    let mut c3 = Mat::zeros(prec, n, n);
    let mut c4 = Mat::zeros(prec, n, n);
    for (k, psi_k) in psi.iter().enumerate() {
        c3.axpy(psi_k, &mats.g[k]);
        c4.axpy(psi_k, &mats.h[k]);
    }
    Ok((c3, c4, form.constant))
}

/// The row `p_f(Λ) - slack = floor` with a 1×1 slack block.
pub fn build_feasibility_row(
    p: &SosParameterization,
    kind: FunctionalKind,
    lambda: &Rational,
) -> Result<LinearConstraintSet> {
    let mats = p.coefficient_mats();
    feasibility_row_with(p, kind, lambda, &mats)
}

fn feasibility_row_with(
    p: &SosParameterization,
    kind: FunctionalKind,
    lambda: &Rational,
    mats: &CoefficientMats,
) -> Result<LinearConstraintSet> {
    let prec = p.precision;
    let (c3, c4, constant) = threshold_parts(p, kind, lambda, mats)?;
    let rhs = Float::with_val(prec, Rational::from(&p.threshold_floor - &constant));
    let slack = Mat::from_f64(prec, 1, 1, &[-1.0]);
    let row = Constraint::new("p_f(lambda)", vec![(p.x3_index(), c3), (p.x4_index(), c4), (p.slack_index(), slack)], rhs);
    Ok(LinearConstraintSet { rows: vec![row] })
}

/// What the assembled SDP asks for.
#[derive(Clone, Debug, PartialEq)]
pub enum Assembly {
    /// Minimize the functional.
    Minimize,
    /// Analytic center of the region where the functional is at most `cap`.
    Resolve { cap: Float },
    /// Maximize `p_f(Λ)` under the perturbed normalizations.
    ThresholdMax { lambda: Rational },
    /// Analytic center of the region where `p_f(Λ) ≥ floor`.
    ThresholdFeasible { lambda: Rational },
}

/// Complete SDP for `kind` at the parameterization `p`.
pub fn assemble(
    p: &SosParameterization,
    kind: FunctionalKind,
    assembly: &Assembly,
    trunc: &SeriesTruncation,
) -> Result<SdpProblem> {
    let prec = p.precision;
    let threshold = matches!(assembly, Assembly::ThresholdMax { .. } | Assembly::ThresholdFeasible { .. });
    if threshold && !kind.is_threshold() {
        return Err(Error::MinimizationKind(kind));
    }
    if !threshold && kind.is_threshold() {
        return Err(Error::FeasibilityKind(kind));
    }
    let mats = p.coefficient_mats();
    let mut blocks = p.blocks();
    let n = p.size();
    let mut constraints = identity_rows(p, &mats);
    constraints.extend(build_normalization_constraints(p, kind));
    let zero_costs = || -> Vec<Mat> { p.blocks().iter().map(|_| Mat::zeros(prec, n, n)).collect() };

    let (costs, offset, mode) = match assembly {
        Assembly::Minimize => {
            let obj = objective_with(p, kind, trunc, &mats)?;
            (obj.costs, obj.offset, SolveMode::Minimize)
        }
        Assembly::Resolve { cap } => {
            let obj = objective_with(p, kind, trunc, &mats)?;
            let mut terms: Vec<(usize, Mat)> =
                obj.costs.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(i, c)| (i, c.clone())).collect();
            terms.push((p.slack_index(), Mat::from_f64(prec, 1, 1, &[1.0])));
            let rhs = Float::with_val(prec, cap - &obj.offset);
            constraints.rows.push(Constraint::new("objective cap", terms, rhs));
            blocks.push(BlockSpec { name: "slack".into(), size: 1 });
            let mut costs = zero_costs();
            costs.push(Mat::zeros(prec, 1, 1));
            (costs, Float::new(prec), SolveMode::AnalyticCenter)
        }
        Assembly::ThresholdMax { lambda } => {
            let (c3, c4, constant) = threshold_parts(p, kind, lambda, &mats)?;
            let mut costs = zero_costs();
            costs[p.x3_index()] = c3.neg();
            costs[p.x4_index()] = c4.neg();
            (costs, Float::with_val(prec, -constant), SolveMode::Minimize)
        }
        Assembly::ThresholdFeasible { lambda } => {
            constraints.extend(feasibility_row_with(p, kind, lambda, &mats)?);
            blocks.push(BlockSpec { name: "slack".into(), size: 1 });
            let mut costs = zero_costs();
            costs.push(Mat::zeros(prec, 1, 1));
            (costs, Float::new(prec), SolveMode::AnalyticCenter)
        }
    };
    Ok(SdpProblem { blocks, costs, constraints: constraints.rows, offset, mode })
}

/// `f` in the Laguerre basis of degree bound `2d+1`, from `X₂` (and `X₁`).
pub fn function_from_blocks(p: &SosParameterization, x1: Option<&Mat>, x2: &Mat) -> GaussianPoly {
    let mats = p.coefficient_mats();
    let coeffs = (0..p.n_coeffs())
        .map(|k| {
            let mut c = mats.f[k].dot(x2);
            if let Some(x1) = x1 {
                c -= mats.g[k].dot(x1);
            }
            c
        })
        .collect();
    GaussianPoly::new(EvenPolyBasis::laguerre(p.n_coeffs() - 1), coeffs).expect("length matches basis")
}

/// `f̂` in the Laguerre basis of degree bound `2d+1`, from `X₃` and `X₄`.
pub fn fourier_from_blocks(p: &SosParameterization, x3: &Mat, x4: &Mat) -> GaussianPoly {
    let mats = p.coefficient_mats();
    let coeffs = (0..p.n_coeffs()).map(|k| mats.g[k].dot(x3) + mats.h[k].dot(x4)).collect();
    GaussianPoly::new(EvenPolyBasis::laguerre(p.n_coeffs() - 1), coeffs).expect("length matches basis")
}

#[cfg(test)]
mod tests;
