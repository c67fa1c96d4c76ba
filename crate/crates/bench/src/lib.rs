//! Fixtures shared by the benchmarks.

use paircorr_core::search::{resolve_for_certificate, ResolveTarget};
use paircorr_core::sosmodel::{assemble, Assembly};
use paircorr_core::{FunctionalKind, GaussianPoly, SdpProblem, SearchConfig, SosCertificate, SosParameterization};
use rug::{Float, Rational};

/// Even polynomial with deterministic coefficients `1/(k+1)` in the
/// Laguerre basis.
pub fn laguerre_poly(d: usize, prec: u32) -> GaussianPoly {
    GaussianPoly::from_laguerre((0..=d).map(|k| Float::with_val(prec, 1) / (k as u32 + 1)).collect())
}

/// The `Z` minimization SDP at `R = 21/20`.
pub fn z_problem(d: usize, prec: u32) -> SdpProblem {
    let p = SosParameterization::new(d, Rational::from((21, 20)), prec).expect("valid parameterization");
    assemble(&p, FunctionalKind::Z, &Assembly::Minimize, &Default::default()).expect("assembles")
}

/// A `Z` certificate at `R = 21/20`, re-solved just above the optimum.
pub fn z_certificate(d: usize) -> SosCertificate {
    let cfg = SearchConfig::for_kind(FunctionalKind::Z);
    let r = Rational::from((21, 20));
    let opt = paircorr_core::search::inner_minimize(FunctionalKind::Z, d, &r, &cfg, &cfg.final_solver).expect("solves");
    let target = ResolveTarget::Value(opt.primal_objective);
    resolve_for_certificate(FunctionalKind::Z, d, &r, &target, cfg.resolve_margin, &cfg).expect("certificate")
}
