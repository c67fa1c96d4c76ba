//! Bilevel search: Brent's method over the radius `R`, an inner SDP per
//! radius, a bracketing search over `Λ` for the threshold kinds, and the
//! analytic-center re-solve that turns an optimum into a certificate.

pub mod scalar;

use rug::{Float, Rational};
use serde::Serialize;

use crate::certio::{round_decimal, ExactMatrix, SosCertificate, DEFAULT_DECIMALS};
use crate::error::{Error, Result};
use crate::functionals::SeriesTruncation;
use crate::sdp::{residuals, solve, SdpSolution, SolverOptions, Status};
use crate::sosmodel::{assemble, Assembly, SosParameterization};
use crate::FunctionalKind;

pub use scalar::{brent_minimize, threshold_search, BrentResult, Probe};

/// Significant digits kept in `R` and `Λ` values that enter certificates.
const PARAM_DIGITS: usize = 12;

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub r_bracket: (f64, f64),
    pub brent_tol: f64,
    pub lambda_bracket: (f64, f64),
    pub lambda_tol: f64,
    pub resolve_margin: f64,
    pub lambda_bump: f64,
    /// Margin multiplications by 10 tried when the re-solve finds no
    /// interior point.
    pub resolve_retries: usize,
    /// Solver settings for the many inner solves of the search.
    pub search_solver: SolverOptions,
    /// Solver settings for the final solve and the re-solve.
    pub final_solver: SolverOptions,
    pub max_evaluations: usize,
    pub truncation: SeriesTruncation,
    /// Print tab-separated progress lines to stderr.
    pub progress: bool,
}

impl SearchConfig {
    /// Defaults with the radius bracket suited to `kind`.
    pub fn for_kind(kind: FunctionalKind) -> Self {
        let r_bracket = match kind {
            FunctionalKind::Z | FunctionalKind::ZTilde => (1.0, 1.8),
            FunctionalKind::L => (1.5, 2.2),
            FunctionalKind::Z1 | FunctionalKind::P | FunctionalKind::PTilde => (1.0, 1.6),
        };
        SearchConfig {
            r_bracket,
            brent_tol: 1e-6,
            lambda_bracket: (0.4, 0.9),
            lambda_tol: 1e-6,
            resolve_margin: 1e-6,
            lambda_bump: 1e-6,
            resolve_retries: 2,
            search_solver: SolverOptions {
                precision: 128,
                gap_tolerance: 1e-15,
                max_iterations: 150,
                ..SolverOptions::default()
            },
            final_solver: SolverOptions::default(),
            max_evaluations: 60,
            truncation: SeriesTruncation::default(),
            progress: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if !(self.r_bracket.0 < self.r_bracket.1) {
            return bad("R bracket is empty");
        }
        if self.r_bracket.0 < 1.0 {
            return bad("R bracket must start at 1 or above");
        }
        if !(self.lambda_bracket.0 < self.lambda_bracket.1) || self.lambda_bracket.0 <= 0.0 {
            return bad("lambda bracket must be a nonempty positive interval");
        }
        for (name, t) in [
            ("brent_tol", self.brent_tol),
            ("lambda_tol", self.lambda_tol),
            ("resolve_margin", self.resolve_margin),
            ("lambda_bump", self.lambda_bump),
        ] {
            if !(t > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

/// One inner evaluation.
#[derive(Clone, Debug, Serialize)]
pub struct Evaluation {
    pub r: f64,
    pub lambda: Option<f64>,
    /// Objective value, or `max p_f(Λ)` for threshold probes.
    pub value: Option<f64>,
    pub status: Status,
}

/// Append-only record of the inner evaluations of a search.
#[derive(Clone, Debug, Default, Serialize)]
pub struct SearchTrace {
    evaluations: Vec<Evaluation>,
}

impl SearchTrace {
    pub fn push(&mut self, e: Evaluation) {
        self.evaluations.push(e);
    }

    pub fn evaluations(&self) -> &[Evaluation] {
        &self.evaluations
    }

    pub fn len(&self) -> usize {
        self.evaluations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.evaluations.is_empty()
    }

    /// Smallest objective value recorded by a minimization evaluation.
    pub fn best_value(&self) -> Option<f64> {
        self.evaluations.iter().filter(|e| e.lambda.is_none()).filter_map(|e| e.value).reduce(f64::min)
    }

    pub fn to_tsv(&self) -> String {
        self.evaluations.iter().map(|e| format_line(None, None, e)).collect::<Vec<_>>().join("\n")
    }

    fn record(&mut self, kind: FunctionalKind, d: usize, e: Evaluation, progress: bool) {
        let line = format_line(Some(kind), Some(d), &e);
        if progress {
            eprintln!("{line}");
        }
        log::debug!("{line}");
        self.push(e);
    }
}

fn format_line(kind: Option<FunctionalKind>, d: Option<usize>, e: &Evaluation) -> String {
    let mut cols = Vec::new();
    if let Some(k) = kind {
        cols.push(k.to_string());
    }
    if let Some(d) = d {
        cols.push(d.to_string());
    }
    cols.push(format!("{:.12}", e.r));
    if let Some(l) = e.lambda {
        cols.push(format!("{l:.12}"));
    }
    cols.push(e.value.map(|v| format!("{v:.15e}")).unwrap_or_else(|| "inf".into()));
    cols.push(e.status.to_string());
    cols.join("\t")
}

/// `x` as an exact decimal with [`PARAM_DIGITS`] significant digits.
pub fn decimal_param(x: f64) -> Rational {
    round_decimal(&Rational::from_f64(x).expect("finite parameter"), PARAM_DIGITS)
}

/// Minimizes the functional at a fixed radius.
pub fn inner_minimize(kind: FunctionalKind, d: usize, r: &Rational, cfg: &SearchConfig, opts: &SolverOptions) -> Result<SdpSolution> {
    let p = SosParameterization::new(d, r.clone(), opts.precision)?;
    let prob = assemble(&p, kind, &Assembly::Minimize, &cfg.truncation)?;
    solve(&prob, opts)
}

/// `max p_f(Λ)` over the perturbed normalizations at a fixed radius.
pub fn inner_threshold(
    kind: FunctionalKind,
    d: usize,
    r: &Rational,
    lambda: &Rational,
    cfg: &SearchConfig,
    opts: &SolverOptions,
) -> Result<(SdpSolution, Option<Float>)> {
    let p = SosParameterization::new(d, r.clone(), opts.precision)?;
    let prob = assemble(&p, kind, &Assembly::ThresholdMax { lambda: lambda.clone() }, &cfg.truncation)?;
    let sol = solve(&prob, opts)?;
    // the SDP minimizes -p_f(Λ)
    let best = (sol.status == Status::Optimal).then(|| Float::with_val(opts.precision, -&sol.primal_objective));
    Ok((sol, best))
}

/// Result of the outer minimization over `R`.
#[derive(Clone, Debug)]
pub struct OuterResult {
    pub r: Rational,
    /// Optimal SDP value at `r` from the final-precision solve.
    pub value: Float,
    pub solution: SdpSolution,
    pub trace: SearchTrace,
}

/// Brent over `R` of the optimal inner value. Failed inner solves score
/// `+∞`.
pub fn outer_minimize(kind: FunctionalKind, d: usize, cfg: &SearchConfig) -> Result<OuterResult> {
    if kind.is_threshold() {
        return Err(Error::FeasibilityKind(kind));
    }
    cfg.validate()?;
    let mut trace = SearchTrace::default();
    let mut objective = |x: f64| -> f64 {
        let r = decimal_param(x);
        let (value, status) = match inner_minimize(kind, d, &r, cfg, &cfg.search_solver) {
            Ok(sol) if sol.status == Status::Optimal => (Some(sol.primal_objective.to_f64()), sol.status),
            Ok(sol) => (None, sol.status),
            Err(e) => {
                log::warn!("inner solve at R = {x} failed: {e}");
                (None, Status::Stalled)
            }
        };
        trace.record(kind, d, Evaluation { r: x, lambda: None, value, status }, cfg.progress);
        value.unwrap_or(f64::INFINITY)
    };
    let best = brent_minimize(&mut objective, cfg.r_bracket.0, cfg.r_bracket.1, cfg.brent_tol, cfg.max_evaluations);
    if !best.fx.is_finite() {
        return Err(Error::SearchFailed { evaluations: trace.len(), trace: trace.to_tsv() });
    }
    let r = decimal_param(best.x);
    let solution = inner_minimize(kind, d, &r, cfg, &cfg.final_solver)?;
    if solution.status != Status::Optimal {
        trace.push(Evaluation { r: best.x, lambda: None, value: None, status: solution.status });
        return Err(Error::SearchFailed { evaluations: trace.len(), trace: trace.to_tsv() });
    }
    let value = solution.primal_objective.clone();
    trace.record(kind, d, Evaluation { r: best.x, lambda: None, value: Some(value.to_f64()), status: solution.status }, cfg.progress);
    Ok(OuterResult { r, value, solution, trace })
}

/// Result of the `Λ` search at a fixed radius.
#[derive(Clone, Debug)]
pub struct LambdaResult {
    /// Smallest feasible `Λ` found; the largest infeasible one is within
    /// `lambda_tol` below it.
    pub lambda: f64,
    pub solution: SdpSolution,
    pub trace: SearchTrace,
}

/// Smallest `Λ` at which `p_f(Λ) ≥ threshold_floor` is attainable at
/// radius `r`, to within `lambda_tol`.
pub fn lambda_search(kind: FunctionalKind, d: usize, r: &Rational, cfg: &SearchConfig) -> Result<LambdaResult> {
    if !kind.is_threshold() {
        return Err(Error::MinimizationKind(kind));
    }
    cfg.validate()?;
    let floor = SosParameterization::new(d, r.clone(), cfg.search_solver.precision)?.threshold_floor.to_f64();
    let mut trace = SearchTrace::default();
    let mut last_feasible: Option<(f64, SdpSolution)> = None;
    let rf = r.to_f64();
    let oracle = |x: f64| -> Result<Probe> {
        let lambda = decimal_param(x);
        let (sol, best) = inner_threshold(kind, d, r, &lambda, cfg, &cfg.search_solver)?;
        let margin = best.as_ref().map(|b| b.to_f64() - floor);
        let feasible = margin.is_some_and(|m| m >= 0.0);
        trace.record(kind, d, Evaluation { r: rf, lambda: Some(x), value: best.map(|b| b.to_f64()), status: sol.status }, cfg.progress);
        if feasible && last_feasible.as_ref().map_or(true, |(l, _)| x <= *l) {
            last_feasible = Some((x, sol));
        }
        Ok(Probe { feasible, margin })
    };
    let lambda = threshold_search(oracle, cfg.lambda_bracket.0, cfg.lambda_bracket.1, cfg.lambda_tol)?;
    let (_, solution) = last_feasible.expect("threshold search ends on a feasible probe");
    Ok(LambdaResult { lambda, solution, trace })
}

/// Result of the outer search for the threshold kinds.
#[derive(Clone, Debug)]
pub struct OuterLambdaResult {
    pub r: Rational,
    pub lambda: f64,
    pub solution: SdpSolution,
    pub trace: SearchTrace,
}

/// Brent over `R` of `Λ*(R)`; radii whose `Λ` bracket fails score `+∞`.
pub fn outer_lambda(kind: FunctionalKind, d: usize, cfg: &SearchConfig) -> Result<OuterLambdaResult> {
    if !kind.is_threshold() {
        return Err(Error::MinimizationKind(kind));
    }
    cfg.validate()?;
    let mut trace = SearchTrace::default();
    let mut best: Option<(f64, LambdaResult)> = None;
    let mut objective = |x: f64| -> f64 {
        let r = decimal_param(x);
        match lambda_search(kind, d, &r, cfg) {
            Ok(res) => {
                let v = res.lambda;
                for e in res.trace.evaluations() {
                    trace.push(e.clone());
                }
                if best.as_ref().map_or(true, |(_, b)| v < b.lambda) {
                    best = Some((x, res));
                }
                v
            }
            Err(e) => {
                log::info!("lambda search at R = {x}: {e}");
                trace.push(Evaluation { r: x, lambda: None, value: None, status: Status::Infeasible });
                f64::INFINITY
            }
        }
    };
    brent_minimize(&mut objective, cfg.r_bracket.0, cfg.r_bracket.1, cfg.brent_tol, cfg.max_evaluations);
    let Some((x, res)) = best else {
        return Err(Error::SearchFailed { evaluations: trace.len(), trace: trace.to_tsv() });
    };
    Ok(OuterLambdaResult { r: decimal_param(x), lambda: res.lambda, solution: res.solution, trace })
}

/// What a re-solve must certify.
#[derive(Clone, Debug)]
pub enum ResolveTarget {
    /// Objective cap `v + margin` for a minimization kind.
    Value(Float),
    /// Threshold `Λ`; the certificate is for `Λ + margin`.
    Lambda(f64),
}

/// Analytic-center re-solve producing a certificate with strictly positive
/// definite blocks, rounded to [`DEFAULT_DECIMALS`] digits.
pub fn resolve_for_certificate(
    kind: FunctionalKind,
    d: usize,
    r: &Rational,
    target: &ResolveTarget,
    margin: f64,
    cfg: &SearchConfig,
) -> Result<SosCertificate> {
    let opts = &cfg.final_solver;
    let prec = opts.precision;
    let p = SosParameterization::new(d, r.clone(), prec)?;
    let (assembly, lambda) = match target {
        ResolveTarget::Value(v) => {
            if kind.is_threshold() {
                return Err(Error::FeasibilityKind(kind));
            }
            (Assembly::Resolve { cap: Float::with_val(prec, v + margin) }, None)
        }
        ResolveTarget::Lambda(l) => {
            if !kind.is_threshold() {
                return Err(Error::MinimizationKind(kind));
            }
            let lambda = decimal_param(l + margin);
            (Assembly::ThresholdFeasible { lambda: lambda.clone() }, Some(lambda))
        }
    };
    let prob = assemble(&p, kind, &assembly, &cfg.truncation)?;
    let sol = solve(&prob, opts)?;
    if sol.status != Status::Feasible {
        return Err(Error::ResolveFailed(sol.status.to_string()));
    }
    let res = residuals(&prob, &sol);
    for (idx, name) in [(p.x2_index(), "X2"), (p.x3_index(), "X3"), (p.x4_index(), "X4")] {
        let e = &res.min_eigenvalues[idx];
        if *e <= 0 {
            return Err(Error::NoInteriorPoint { block: name.into(), min_eig: format!("{:e}", e.to_f64()) });
        }
    }
    let cert = SosCertificate {
        kind,
        d,
        r: r.clone(),
        lambda,
        x2: ExactMatrix::from_mat(&sol.x[p.x2_index()]),
        x3: ExactMatrix::from_mat(&sol.x[p.x3_index()]),
        x4: ExactMatrix::from_mat(&sol.x[p.x4_index()]),
        monomial_coeffs: None,
    };
    cert.rounded(DEFAULT_DECIMALS).with_monomial_coeffs(prec)
}

/// Everything the full pipeline produced for one kind and degree.
#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub certificate: SosCertificate,
    pub r: Rational,
    /// Optimal SDP value for minimization kinds.
    pub value: Option<Float>,
    /// `Λ*` before the bump, for threshold kinds.
    pub lambda: Option<f64>,
    pub trace: SearchTrace,
}

/// Search, final solve and re-solve for `kind` at degree `d`.
pub fn search_certificate(kind: FunctionalKind, d: usize, cfg: &SearchConfig) -> Result<SearchOutcome> {
    let (r, target, value, lambda, trace) = if kind.is_threshold() {
        let out = outer_lambda(kind, d, cfg)?;
        (out.r, ResolveTarget::Lambda(out.lambda), None, Some(out.lambda), out.trace)
    } else {
        let out = outer_minimize(kind, d, cfg)?;
        (out.r, ResolveTarget::Value(out.value.clone()), Some(out.value), None, out.trace)
    };
    let mut margin = if kind.is_threshold() { cfg.lambda_bump } else { cfg.resolve_margin };
    let mut attempt = 0;
    let certificate = loop {
        match resolve_for_certificate(kind, d, &r, &target, margin, cfg) {
            Ok(c) => break c,
            Err(e @ (Error::NoInteriorPoint { .. } | Error::ResolveFailed(_))) if attempt < cfg.resolve_retries => {
                log::warn!("re-solve with margin {margin:e} failed ({e}); widening");
                margin *= 10.0;
                attempt += 1;
            }
            Err(e) => return Err(e),
        }
    };
    Ok(SearchOutcome { certificate, r, value, lambda, trace })
}
