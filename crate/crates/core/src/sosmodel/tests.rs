use super::*;
use rug::ops::Pow;
use crate::functionals::{eval, quadrature, Candidate};
use crate::sdp::SdpProblem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const P: u32 = 256;

fn fl(v: f64) -> Float {
    Float::with_val(P, v)
}

fn rat(v: f64) -> Rational {
    Rational::from_f64(v).unwrap()
}

fn param(d: usize, r: f64) -> SosParameterization {
    SosParameterization::new(d, rat(r), P).unwrap()
}

fn diag_unit(n: usize, i: usize) -> Mat {
    let mut m = Mat::zeros(P, n, n);
    m[(i, i)] = fl(1.0);
    m
}

fn rel_close(a: &Float, b: &Float, tol: f64) -> bool {
    let d = Float::with_val(P, a - b).abs();
    let s = Float::with_val(P, b.abs_ref()).max(&fl(1.0));
    d / s < tol
}

fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> Mat {
    let a = Mat::from_fn(P, n, n, |_, _| fl(rng.gen_range(-1.0..1.0)));
    a.matmul(&a.transpose()).sym()
}

#[test]
fn product_tables_expand_products() {
    let d = 5;
    let t = product_table(d);
    for y in [0.0, 0.37, 2.5, 9.0] {
        let y = fl(y);
        let l = laguerre::values(2 * d + 1, &y);
        for i in 0..=d {
            for j in 0..=d {
                let mut g = Float::new(P);
                let mut h = Float::new(P);
                for (k, lk) in l.iter().enumerate() {
                    g += Float::with_val(P, t.g(k, i, j)) * lk;
                    h += Float::with_val(P, t.h(k, i, j)) * lk;
                }
                let prod = Float::with_val(P, &l[i] * &l[j]);
                assert!(rel_close(&g, &prod, 1e-60));
                assert!(rel_close(&h, &Float::with_val(P, &prod * &y), 1e-60));
                assert_eq!(t.g(k_max(d), i, j), &Rational::new());
            }
        }
    }
}

fn k_max(d: usize) -> usize {
    2 * d + 1
}

#[test]
fn identity_row_count_and_zero_solution() {
    for d in [1, 3, 6] {
        let p = param(d, 1.3);
        let rows = build_identity_constraints(&p);
        assert_eq!(rows.len(), 2 * d + 2);
        let zero: Vec<Mat> = p.blocks().iter().map(|b| Mat::zeros(P, b.size, b.size)).collect();
        for row in &rows.rows {
            assert!(row.apply(&zero).is_zero());
            assert!(row.label.starts_with("identity["));
            for (_, a) in &row.terms {
                assert!(a.asymmetry().is_zero());
            }
        }
    }
}

#[test]
fn d1_hand_expansion() {
    let r = 1.25;
    let p = param(1, r);
    let x2 = diag_unit(2, 0);
    let f = function_from_blocks(&p, None, &x2);
    let fhat = f.fourier();
    let two_pi = Float::with_val(P, mp::pi(P) * 2u32);
    for x in [0.0, 0.3, 1.1, 2.0] {
        let x = fl(x);
        let t = Float::with_val(P, x.square_ref());
        let g = Float::with_val(P, -(Float::with_val(P, &t * mp::pi(P)))).exp();
        let expect_f = Float::with_val(P, fl(r * r) - &t) * &g;
        let expect_fhat = Float::with_val(P, fl(r * r) - Float::with_val(P, two_pi.recip_ref()) + &t) * &g;
        assert!(rel_close(&f.evaluate(&x), &expect_f, 1e-70));
        assert!(rel_close(&fhat.evaluate(&x), &expect_fhat, 1e-70));
    }
    // the identity rows accept exactly this f̂ written with X₃, X₄:
    // R² - 1/(2π) + t = (R² - 1/(2π))·1 + t·1
    let c = fl(r * r) - Float::with_val(P, two_pi.recip_ref());
    let x3 = diag_unit(2, 0).scale(&c);
    let x4 = diag_unit(2, 0);
    for row in &build_identity_constraints(&p).rows {
        let v = row.apply(&[x2.clone(), x3.clone(), x4.clone()]);
        assert!(v.clone().abs() < 1e-70, "{} = {v}", row.label);
    }
}

#[test]
fn normalization_rows() {
    let p = param(1, 1.5);
    let rows = build_normalization_constraints(&p, FunctionalKind::Z);
    assert_eq!(rows.len(), 2);
    assert!(rows.rows.iter().all(|r| r.label != "f(R)"));
    assert_eq!(rows.rows[0].rhs, 1);
    assert_eq!(rows.rows[1].rhs, 1);
    // f(0) = R² v(0)ᵀX₂v(0) with v(0) = (1, 1/2)
    let x = vec![diag_unit(2, 0), Mat::zeros(P, 2, 2), Mat::zeros(P, 2, 2)];
    assert_eq!(rows.rows[0].apply(&x), 2.25);
    let x = vec![Mat::zeros(P, 2, 2), diag_unit(2, 1), Mat::zeros(P, 2, 2)];
    assert_eq!(rows.rows[1].apply(&x), 0.25);

    let rows = build_normalization_constraints(&p, FunctionalKind::P);
    let delta = Float::with_val(P, 10u32).pow(-10i32);
    assert!(rel_close(&rows.rows[0].rhs, &(fl(1.0) - &delta), 1e-70));
    assert!(rel_close(&rows.rows[1].rhs, &(fl(1.0) + &delta), 1e-70));

    let rows = build_normalization_constraints(&param(2, 1.5).with_x1(), FunctionalKind::Z);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows.rows[2].label, "f(R)");
}

#[test]
fn x1_variant_reproduces_function() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let p = param(3, 1.4).with_x1();
    let x1 = random_psd(&mut rng, 4);
    let x2 = random_psd(&mut rng, 4);
    let f = function_from_blocks(&p, Some(&x1), &x2);
    let pi = mp::pi(P);
    for x in [0.2, 0.9, 1.7] {
        let x = fl(x);
        let t = Float::with_val(P, x.square_ref());
        let y = Float::with_val(P, &t * &pi) * 2u32;
        let v = laguerre::values(3, &y);
        let quad = |m: &Mat| {
            let mut acc = Float::new(P);
            for i in 0..4 {
                for j in 0..4 {
                    acc += Float::with_val(P, &v[i] * &v[j]) * &m[(i, j)];
                }
            }
            acc
        };
        let s1 = quad(&x1);
        let s2 = quad(&x2);
        let poly = -(s1 + Float::with_val(P, &t - fl(1.4) * fl(1.4)) * s2);
        let expect = poly * Float::with_val(P, -(t * &pi)).exp();
        assert!(rel_close(&f.evaluate(&x), &expect, 1e-60));
    }
}

#[test]
fn objective_matches_quadrature_for_d1() {
    let r = 1.5;
    let p = param(1, r);
    let obj = build_objective(&p, FunctionalKind::Z, &SeriesTruncation::default()).unwrap();
    let x2 = diag_unit(2, 0);
    let value = obj.costs[0].dot(&x2) + &obj.offset;
    // R f(0) + ∫_0^R f(x) (2/R) x dx with f = (R² - x²) e^{-πx²}
    let pi = mp::pi(P);
    let rf = fl(r);
    let integrand = |x: &Float| {
        let t = Float::with_val(P, x.square_ref());
        Float::with_val(P, &rf * &rf - &t) * Float::with_val(P, -(t * &pi)).exp() * x * 2u32 / &rf
    };
    let expect = quadrature::integrate(integrand, &fl(0.0), &rf, 1e-40, P) + fl(r * r * r);
    assert!(rel_close(&value, &expect, 1e-35), "{value} vs {expect}");
    let linear = obj.costs[0].dot(&x2.scale(&fl(2.0)));
    assert!(rel_close(&linear, &Float::with_val(P, obj.costs[0].dot(&x2) * 2u32), 1e-70));
}

#[test]
fn objective_rejects_threshold_kinds() {
    let p = param(2, 1.2);
    for kind in [FunctionalKind::P, FunctionalKind::PTilde] {
        assert!(matches!(
            build_objective(&p, kind, &SeriesTruncation::default()),
            Err(Error::FeasibilityKind(_))
        ));
    }
}

#[test]
fn objective_equals_functional_on_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let trunc = SeriesTruncation::default();
    for kind in [FunctionalKind::Z, FunctionalKind::ZTilde, FunctionalKind::L, FunctionalKind::Z1] {
        for _ in 0..3 {
            let d = rng.gen_range(1..=6usize);
            let r: f64 = rng.gen_range(1.0..2.0);
            let p = param(d, r);
            let x2 = random_psd(&mut rng, d + 1);
            let f = function_from_blocks(&p, None, &x2);
            // scale so that f̂(0) = ∫ f = 1; the sign of X₂ does not matter here
            let fhat0 = f.fourier().value_at_zero();
            assert!(!fhat0.is_zero());
            let x2 = x2.scale(&Float::with_val(P, fhat0.recip_ref()));
            let f = function_from_blocks(&p, None, &x2);
            let obj = build_objective(&p, kind, &trunc).unwrap();
            let value = obj.costs[0].dot(&x2) + &obj.offset;
            let cand = Candidate::poly(f, mp::from_rational(P, &p.r)).unwrap();
            let expect = eval(&cand, kind, None, &trunc, P).unwrap();
            assert!(rel_close(&value, &expect, 1e-25), "{kind} d={d}: {value} vs {expect}");
        }
    }
}

#[test]
fn feasibility_row_matches_quadrature() {
    let r = 1.2;
    let lambda = 0.7;
    let p = param(3, r);
    let rows = build_feasibility_row(&p, FunctionalKind::P, &rat(lambda)).unwrap();
    assert_eq!(rows.len(), 1);
    let row = &rows.rows[0];
    let slack = row.terms.iter().find(|(b, _)| *b == p.slack_index()).unwrap();
    assert_eq!((slack.1.rows(), slack.1.cols()), (1, 1));
    // X₃ = e₀e₀ᵀ gives f̂ = e^{-πx²}
    let blocks = vec![Mat::zeros(P, 4, 4), diag_unit(4, 0), Mat::zeros(P, 4, 4), Mat::zeros(P, 1, 1)];
    let lhs = row.apply(&blocks);
    let s = fl(lambda) / fl(r);
    let pi = mp::pi(P);
    let integrand = |x: &Float| Float::with_val(P, -(Float::with_val(P, x.square_ref()) * &pi)).exp() * x * 2u32 / &s;
    let integral = quadrature::integrate(integrand, &fl(0.0), &s, 1e-40, P);
    // row: integral - slack = floor - (s - 1)
    let expect_rhs = Float::with_val(P, 10u32).pow(-10i32) - (Float::with_val(P, &s - 1u32));
    assert!(rel_close(&lhs, &integral, 1e-35));
    assert!(rel_close(&row.rhs, &expect_rhs, 1e-30));
}

#[test]
fn tiny_lambda_drives_threshold_to_minus_one() {
    let p = param(2, 1.0);
    let row = &build_feasibility_row(&p, FunctionalKind::P, &rat(1e-8)).unwrap().rows[0];
    // rhs = floor - (s - 1) ≈ 1, while the integral part is O(s)
    assert!(rel_close(&row.rhs, &fl(1.0), 1e-7));
}

#[test]
fn assembled_shapes() {
    let trunc = SeriesTruncation::default();
    let p = param(2, 1.3);
    let prob = assemble(&p, FunctionalKind::Z, &Assembly::Minimize, &trunc).unwrap();
    let sizes: Vec<usize> = prob.blocks.iter().map(|b| b.size).collect();
    assert_eq!(sizes, vec![3, 3, 3]);
    assert_eq!(prob.constraints.len(), 2 * 2 + 2 + 2);
    assert_eq!(prob.mode, SolveMode::Minimize);

    let re = assemble(&p, FunctionalKind::Z, &Assembly::Resolve { cap: fl(1.4) }, &trunc).unwrap();
    assert_eq!(re.constraints.len(), prob.constraints.len() + 1);
    assert_eq!(re.blocks.last().unwrap().name, "slack");
    assert_eq!(re.mode, SolveMode::AnalyticCenter);

    let th = assemble(&p, FunctionalKind::P, &Assembly::ThresholdFeasible { lambda: rat(0.7) }, &trunc).unwrap();
    assert_eq!(th.constraints.len(), prob.constraints.len() + 1);
    assert_eq!(th.blocks.len(), 4);

    assert!(assemble(&p, FunctionalKind::P, &Assembly::Minimize, &trunc).is_err());
    assert!(assemble(&p, FunctionalKind::Z, &Assembly::ThresholdMax { lambda: rat(0.7) }, &trunc).is_err());
    for q in [&prob, &re, &th] {
        check_rows(q);
    }
}

fn check_rows(prob: &SdpProblem) {
    prob.validate().unwrap();
    for row in &prob.constraints {
        assert!(!row.label.is_empty());
    }
}

/// Projects random blocks onto the identity rows and checks `𝒯f = f̂`.
#[test]
fn projected_points_satisfy_fourier_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let d = rng.gen_range(1..=5usize);
        let p = param(d, rng.gen_range(1.0..1.8));
        let rows = build_identity_constraints(&p).rows;
        let n = d + 1;
        let mut x: Vec<Mat> = (0..3).map(|_| random_psd(&mut rng, n)).collect();
        // x ← x - Aᵀ (A Aᵀ)⁻¹ A(x)
        let m = rows.len();
        let gram = Mat::from_fn(P, m, m, |a, b| {
            let mut acc = Float::new(P);
            for (ba, ma) in &rows[a].terms {
                for (bb, mb) in &rows[b].terms {
                    if ba == bb {
                        acc += ma.dot(mb);
                    }
                }
            }
            acc
        });
        let resid: Vec<Float> = rows.iter().map(|r| r.apply(&x)).collect();
        let coef = gram.cholesky().unwrap().cholesky_solve(&resid);
        for (row, c) in rows.iter().zip(&coef) {
            for (b, a) in &row.terms {
                x[*b].axpy(&Float::with_val(P, -c), a);
            }
        }
        let f = function_from_blocks(&p, None, &x[0]);
        let fhat = fourier_from_blocks(&p, &x[1], &x[2]);
        let tf = f.fourier();
        let scale = f.coeffs().iter().fold(fl(1.0), |a, c| a.max(&Float::with_val(P, c.abs_ref())));
        for (a, b) in tf.coeffs().iter().zip(fhat.coeffs()) {
            let err = Float::with_val(P, a - b).abs() / &scale;
            assert!(err < 1e-60, "coefficient mismatch {err}");
        }
    }
}
