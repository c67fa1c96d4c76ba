use super::*;
use crate::gausspoly::EvenPolyBasis;
use rand::{Rng, SeedableRng};
use rug::ops::Pow;
use rand_chacha::ChaCha8Rng;

const P: u32 = 256;

fn fl(v: f64) -> Float {
    Float::with_val(P, v)
}

fn rel(a: &Float, b: &Float) -> f64 {
    let d = Float::with_val(P, a - b).abs();
    let s = Float::with_val(P, b.abs_ref()).max(&fl(1e-300));
    (d / s).to_f64()
}

/// Direct quadrature of `∫_a^b g(x) w(x) dx` from pointwise values.
fn quad<F: Fn(&Float) -> Float>(g: F, a: f64, b: f64) -> Float {
    quadrature::integrate(g, &fl(a), &fl(b), 1e-30, P)
}

fn random_candidate(rng: &mut ChaCha8Rng) -> Candidate {
    let d = rng.gen_range(1..=5usize);
    let coeffs: Vec<Float> = (0..=d).map(|_| fl(rng.gen_range(-1.0..1.0))).collect();
    let mut f = GaussianPoly::from_monomial(coeffs);
    // keep f̂(0) away from zero so the normalized forms are well conditioned
    if f.fourier().value_at_zero().abs() < 0.1 {
        let mut c = f.coeffs().to_vec();
        c[0] += 1.0;
        f = GaussianPoly::from_monomial(c);
    }
    Candidate::poly(f, fl(rng.gen_range(1.0..1.8))).unwrap()
}

#[test]
fn series_coefficients() {
    assert_eq!(series_coefficient(1), 4);
    assert_eq!(series_coefficient(2), Rational::from((4, 3)));
    assert_eq!(series_coefficient(3), Rational::from((16, 45)));
}

#[test]
fn hat_exact_values() {
    let trunc = SeriesTruncation::default();
    assert_eq!(hat_exact(FunctionalKind::Z, &trunc).unwrap(), Rational::from((4, 3)));
    assert_eq!(hat_exact(FunctionalKind::ZTilde, &trunc).unwrap(), Rational::from((4, 3)));
    assert_eq!(hat_exact(FunctionalKind::L, &trunc).unwrap(), Rational::from((13, 12)));
    // closed form per term: ∫₀¹ (1-x) x^j dx = 1/((j+1)(j+2))
    let mut z1 = Rational::from(1) + Rational::from(2) / 6u32 - Rational::from(8) / 12u32;
    for k in 1..=15u32 {
        let j = 2 * k + 1;
        z1 += Rational::from(2) * series_coefficient(k as usize) / ((j + 1) * (j + 2));
    }
    z1 += Rational::from((1, 10_000_000_000u64));
    assert_eq!(hat_exact(FunctionalKind::Z1, &trunc).unwrap(), z1);
    assert!(matches!(hat_exact(FunctionalKind::P, &trunc), Err(Error::FeasibilityKind(FunctionalKind::P))));
}

#[test]
fn hat_float_values() {
    let z = eval_z(&Candidate::Hat, P).unwrap();
    assert!(rel(&z, &(fl(4.0) / 3u32)) < 1e-17);
    let zt = eval_z_tilde(&Candidate::Hat, P).unwrap();
    assert!(rel(&zt, &z) < 1e-17);
    let l = eval_l(&Candidate::Hat, P).unwrap();
    assert!(rel(&(Float::with_val(P, 2u32) - l), &(fl(11.0) / 12u32)) < 1e-17);
}

#[test]
fn selberg_z_matches_direct_quadrature() {
    let z = eval_z(&Candidate::Selberg, P).unwrap();
    let oracle = quad(|x| Float::with_val(P, x * baseline::selberg(x)), 0.0, 1.0) * 2u32 + 1u32;
    assert!(rel(&z, &oracle) < 1e-15);
}

#[test]
fn modified_form_divides_by_fourier_origin_value() {
    // f = (1 - x²)e^{-πx²}: f(0) = 1, f̂(0) = 1 - 1/(2π)
    let f = GaussianPoly::from_monomial(vec![fl(1.0), fl(-1.0)]);
    let c = Candidate::poly(f.clone(), fl(1.0)).unwrap();
    let z = eval_z(&c, P).unwrap();
    let fhat0 = Float::with_val(P, 1) - Float::with_val(P, 1) / (mp::pi(P) * 2u32);
    let num = quad(|x| Float::with_val(P, x * f.evaluate(x)), 0.0, 1.0) * 2u32 + 1u32;
    assert!(rel(&z, &(num / fhat0)) < 1e-25);
}

#[test]
fn random_candidates_match_quadrature_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let trunc = SeriesTruncation::default();
    for _ in 0..50 {
        let c = random_candidate(&mut rng);
        let Candidate::Poly { f, fhat, radius } = &c else { unreachable!() };
        let r = radius.to_f64();
        let f0 = f.value_at_zero();
        let fh0 = fhat.value_at_zero();
        let fx = |x: &Float| Float::with_val(P, x * f.evaluate(x));
        let fx_int = quad(fx, 0.0, r);

        let z = (Float::with_val(P, &f0 * radius) + Float::with_val(P, &fx_int * 2u32) / radius) / &fh0;
        assert!(rel(&eval_z(&c, P).unwrap(), &z) < 1e-15);

        let extra = quad(|x| f.evaluate(x) * (Float::with_val(P, 3u32) - Float::with_val(P, x * 2u32) / radius), r, 1.5 * r);
        let zt = (Float::with_val(P, &f0 * radius) + Float::with_val(P, &fx_int * 2u32) / radius + extra) / &fh0;
        assert!(rel(&eval_z_tilde(&c, P).unwrap(), &zt) < 1e-15);

        let l = (Float::with_val(P, &f0 * radius) / 2u32
            + quad(fx, 0.0, r / 2.0) * 4u32 / radius
            + quad(|x| f.evaluate(x), r / 2.0, r) * 2u32)
            / &fh0;
        assert!(rel(&eval_l(&c, P).unwrap(), &l) < 1e-15);

        let mut z1 = Float::with_val(P, &f0 * radius) + Float::with_val(P, &fx_int * 2u32) / radius
            - quad(|x| Float::with_val(P, x.square_ref()) * f.evaluate(x), 0.0, r) * 8u32
                / Float::with_val(P, radius.square_ref());
        for k in 1..=15u32 {
            let m = 2 * k + 1;
            let ck = Float::with_val(P, &series_coefficient(k as usize));
            let term = quad(|x| Float::with_val(P, x.pow(m)) * f.evaluate(x), 0.0, r);
            z1 += term * ck * 2u32 / Float::with_val(P, radius.pow(m));
        }
        let z1 = z1 / &fh0 + 1e-10;
        assert!(rel(&eval_z1(&c, &trunc, P).unwrap(), &z1) < 1e-15);

        let lambda: f64 = rng.gen_range(0.3..1.2);
        let s = lambda / r;
        let hx = |x: &Float| Float::with_val(P, x * fhat.evaluate(x));
        let p = quad(hx, 0.0, s) * 2u32 / s + (s - 1.0);
        assert!(rel(&eval_p(&c, &fl(lambda), P).unwrap(), &p) < 1e-15);
        let pt = Float::with_val(P, &p)
            + quad(|x| fhat.evaluate(x) * (Float::with_val(P, 3u32) - Float::with_val(P, x * 2u32) / s), s, 1.5 * s);
        assert!(rel(&eval_p_tilde(&c, &fl(lambda), P).unwrap(), &pt) < 1e-15);
    }
}

#[test]
fn truncation_tail_is_below_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let k15 = SeriesTruncation::default();
    let k25 = SeriesTruncation::new(25, k15.tail_bound.clone()).unwrap();
    for _ in 0..20 {
        let c = random_candidate(&mut rng);
        let a = eval_z1(&c, &k15, P).unwrap();
        let b = eval_z1(&c, &k25, P).unwrap();
        assert!(Float::with_val(P, a - b).abs() < 1e-10);
    }
}

#[test]
fn threshold_function_limits() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let c = random_candidate(&mut rng);
        let small = eval_p(&c, &fl(1e-12), P).unwrap();
        assert!(Float::with_val(P, small + 1u32).abs() < 1e-9);
        let r = Float::with_val(P, &c.radius());
        let big = fl(1e3);
        let slope = eval_p(&c, &big, P).unwrap() / &big;
        let inv_r = Float::with_val(P, 1) / &r;
        assert!(Float::with_val(P, slope - inv_r).abs() < 1e-2);
    }
    for c in [Candidate::Hat, Candidate::Selberg] {
        let small = eval_p(&c, &fl(1e-9), 128).unwrap();
        assert!(Float::with_val(128, small + 1u32).abs() < 1e-8);
    }
    assert!(matches!(eval_p(&Candidate::Hat, &fl(0.0), P), Err(Error::NonpositiveLambda)));
}

#[test]
fn threshold_function_is_continuous_on_sampled_grid() {
    let c = Candidate::Selberg;
    let mut prev: Option<(f64, f64)> = None;
    let mut lambda = 1e-3f64;
    while lambda < 1e3 {
        let v = eval_p(&c, &fl(lambda), 128).unwrap().to_f64();
        if let Some((l0, v0)) = prev {
            // |p'| ≤ 1/r + 2 sup f̂ (1 + 1/λ) bounds the modulus of continuity
            assert!((v - v0).abs() <= (lambda - l0) * (1.0 + 4.0 * (1.0 + 1.0 / l0)));
        }
        prev = Some((lambda, v));
        lambda *= 1.3;
    }
}

#[test]
fn nonnegative_transform_bounds() {
    // f̂ ≥ 0 implies p + 1 - λ/r ≥ 0 and p̃ ≥ p
    for c in [Candidate::Hat, Candidate::Selberg] {
        for lambda in [0.1, 0.4, 0.68, 0.9, 1.7, 3.0] {
            let l = fl(lambda);
            let p = eval_p(&c, &l, 128).unwrap();
            let pt = eval_p_tilde(&c, &l, 128).unwrap();
            assert!(Float::with_val(128, &p + 1u32) - lambda >= -1e-30);
            assert!(pt >= p);
        }
    }
}

#[test]
fn hat_crossing_near_montgomery_constant() {
    // roots of p and p̃ for the hat, from an independent 30-digit root find
    let tol = 1e-9;
    let l = last_positive_crossing(&Candidate::Hat, FunctionalKind::P, tol, 10.0, 128).unwrap();
    assert!((l.to_f64() - 0.669_535_715_679_335).abs() <= tol, "{l}");
    let lt = last_positive_crossing(&Candidate::Hat, FunctionalKind::PTilde, tol, 10.0, 128).unwrap();
    assert!((lt.to_f64() - 0.651_722_232_183_693).abs() <= tol, "{lt}");
    assert!(lt <= l);
}

#[test]
fn gaussian_crossing_matches_closed_form_bisection() {
    // f = f̂ = e^{-πx²}: p(λ) = -1 + s + (1 - e^{-πs²})/(πs), s = λ/r
    let r = 1.25;
    let c = Candidate::poly(GaussianPoly::from_monomial(vec![fl(1.0)]), fl(r)).unwrap();
    let p = |l: f64| {
        let s = l / r;
        -1.0 + s + (1.0 - (-std::f64::consts::PI * s * s).exp()) / (std::f64::consts::PI * s)
    };
    let (mut lo, mut hi) = (1e-3, 5.0);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if p(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let tol = 1e-7;
    let ours = last_positive_crossing(&c, FunctionalKind::P, tol, 10.0, P).unwrap().to_f64();
    assert!((ours - hi).abs() <= 2.0 * tol, "{ours} vs {hi}");
}

#[test]
fn crossing_requires_threshold_kind() {
    assert!(matches!(
        last_positive_crossing(&Candidate::Hat, FunctionalKind::Z, 1e-6, 10.0, 64),
        Err(Error::MinimizationKind(FunctionalKind::Z))
    ));
}

#[test]
fn laguerre_candidate_agrees_with_monomial() {
    let f = GaussianPoly::from_monomial(vec![fl(0.7), fl(-0.4), fl(0.05)]);
    let g = f.change_basis(EvenPolyBasis::laguerre(2)).unwrap();
    let a = eval_z(&Candidate::poly(f, fl(1.2)).unwrap(), P).unwrap();
    let b = eval_z(&Candidate::poly(g, fl(1.2)).unwrap(), P).unwrap();
    assert!(rel(&a, &b) < 1e-60);
}

