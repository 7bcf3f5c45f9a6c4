use std::f64::consts::PI;

use latconv::attractor::{attractor_eval, attractor_grid, llt_approx};
use latconv::error::LatconvError;
use latconv::examples::{builtin, ex73, ex74_first, ex74_second, intro, semi_elliptic_family};
use latconv::expansion::{analyze, classify, gamma_taylor, ClassifyOptions, Verdict};
use latconv::homogeneous::{contraction_check, trace_invariance_check, HomogeneousPolynomial};
use latconv::lattice::{LatticeBox, LatticeFunction, PowerConfig, PowerMethod};
use latconv::legendre::{mixed_norm, ConjugateEvaluator};
use latconv::symbol::{normalize, SymbolView};
use latconv::verify::{
    derivative_bound_fit, gaussian_bound_fit, llt_error, space_diff, subexp_bound_fit,
    sup_decay_report, theta, time_diff, walk_profile, ReportVerdict,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn power_slope(pairs: &[(u64, f64)]) -> f64 {
    let (n0, v0) = pairs[0];
    let (n1, v1) = pairs[pairs.len() - 1];
    (v1 / v0).ln() / (n1 as f64 / n0 as f64).ln()
}

#[test]
fn intro_entries_match_table() {
    let f = intro();
    let s3 = 3f64.sqrt();
    let k = 1.0 / (22.0 + 2.0 * s3);
    let table = [
        ([0, 0], c(8.0, 0.0)),
        ([1, 0], c(5.0 + s3, 0.0)),
        ([-1, 0], c(5.0 + s3, 0.0)),
        ([2, 0], c(-2.0, 0.0)),
        ([-2, 0], c(-2.0, 0.0)),
        ([1, -1], c(0.0, s3 - 1.0)),
        ([-1, -1], c(0.0, s3 - 1.0)),
        ([1, 1], c(0.0, 1.0 - s3)),
        ([-1, 1], c(0.0, 1.0 - s3)),
        ([0, 1], c(2.0, -2.0)),
        ([0, -1], c(2.0, 2.0)),
    ];
    assert_eq!(f.len(), table.len());
    let mut l1 = 0.0;
    for (x, v) in table {
        assert!((f.get(&x) - v * k).norm() < 1e-15, "{x:?}");
        l1 += v.norm() * k;
    }
    assert!((f.norm_l1() - l1).abs() < 1e-14);
}

#[test]
fn self_convolution_at_origin_is_double_sum() {
    let f = intro();
    let mut want = c(0.0, 0.0);
    for (x, a) in f.iter() {
        for (y, b) in f.iter() {
            if x.iter().zip(y).all(|(p, q)| p + q == 0) {
                want += a * b;
            }
        }
    }
    let got = f.convolve(&f).unwrap().get(&[0, 0]);
    assert!((got - want).norm() < 1e-15);
}

#[test]
fn tenth_power_max_matches_iterated_convolution() {
    let f = intro();
    let mut direct = f.clone();
    for _ in 1..10 {
        direct = direct.convolve(&f).unwrap();
    }
    let fast = f.power(10, PowerMethod::Fast).unwrap();
    assert!((direct.norm_linf() - fast.norm_linf()).abs() < 1e-10);
    assert!(direct.max_abs_diff(&fast) < 1e-10);
}

#[test]
fn tensor_factors_reproduce_table_and_powers() {
    let f = ex74_first().tensor(&ex74_second());
    assert!((f.get(&[0, 0]).re - 19.0 / 128.0).abs() < 1e-16);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut random = |d: usize| {
        let entries: Vec<(Vec<i64>, Complex64)> = (0..4)
            .map(|_| {
                let x = (0..d).map(|_| rng.random_range(-2..=2)).collect();
                (
                    x,
                    c(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)),
                )
            })
            .collect();
        LatticeFunction::from_entries(d, entries).unwrap()
    };
    let (a, b) = (random(1), random(2));
    let lhs = a.tensor(&b).power(3, PowerMethod::Direct).unwrap();
    let rhs = a
        .power(3, PowerMethod::Direct)
        .unwrap()
        .tensor(&b.power(3, PowerMethod::Direct).unwrap());
    assert!(lhs.max_abs_diff(&rhs) < 1e-12);
}

#[test]
fn random_function_normalizes_to_unit_sup() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let entries: Vec<(Vec<i64>, Complex64)> = (0..5)
        .map(|_| {
            let x = vec![rng.random_range(-3..=3), rng.random_range(-3..=3)];
            (
                x,
                c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            )
        })
        .collect();
    let f = LatticeFunction::from_entries(2, entries).unwrap();
    let (g, _) = normalize(&f).unwrap();
    let (sup, _) = SymbolView::new(&g).sup_modulus().unwrap();
    assert!((sup - 1.0).abs() < 1e-12, "{sup}");
    let (half, scale) = normalize(&intro().scale(c(2.0, 0.0))).unwrap();
    assert!((scale - 0.5).abs() < 1e-12);
    assert!(half.max_abs_diff(&intro()) < 1e-12);
}

#[test]
fn mixed_weight_expansion_at_origin() {
    let s = SymbolView::new(&builtin("ex71").unwrap());
    let g = gamma_taylor(&s, &[0.0, 0.0], 6).unwrap();
    let want = [
        (vec![6, 0], c(-1.0 / 64.0, 0.0)),
        (vec![0, 4], c(-2.0 / 64.0, 0.0)),
        (vec![3, 2], c(0.0, 2.0 / 64.0)),
    ];
    for (beta, v) in want {
        assert!((g.coefficient(&beta) - v).norm() < 1e-12, "{beta:?}");
    }
    for beta in [vec![2, 0], vec![0, 2], vec![1, 1], vec![4, 0], vec![2, 1]] {
        assert!(g.coefficient(&beta).norm() < 1e-12, "{beta:?}");
    }
}

#[test]
fn unstable_candidate_is_not_positive_homogeneous() {
    let f = builtin("unstable1d").unwrap();
    let s = SymbolView::new(&f);
    assert!(s.check_von_neumann().unwrap().is_satisfied());
    let g = gamma_taylor(&s, &[0.0], 4).unwrap();
    assert!((g.coefficient(&[2]) - c(0.0, -0.25)).norm() < 1e-13);
    assert!((g.coefficient(&[4]) - c(-1.0 / 32.0, 1.0 / 48.0)).norm() < 1e-13);
    let at_zero = classify(&s, &[0.0], &ClassifyOptions::default()).unwrap();
    assert_eq!(at_zero.verdict, Verdict::NotPositiveHomogeneousType);
    let a = analyze(&f).unwrap();
    assert_eq!(a.points.len(), 2);
    assert_eq!(a.verdict, Verdict::NotPositiveHomogeneousType);
    let at_pi = a.points.iter().find(|p| p.xi[0].abs() > 3.0).unwrap();
    assert!(at_pi.classification.is_positive_homogeneous());
}

#[test]
fn rotated_exponent_is_contracting_and_unfitted() {
    let a = analyze(&ex73()).unwrap();
    assert_eq!(a.points.len(), 2);
    for p in &a.points {
        assert!((p.value - c(1.0, 0.0)).norm() < 1e-12);
    }
    let poly = a.points[0].polynomial().unwrap();
    let e = poly.exponent();
    assert!(contraction_check(e));
    let mut eig = poly.exponent_eigenvalues();
    eig.sort_by(f64::total_cmp);
    assert!((eig[0] - 0.25).abs() < 1e-12 && (eig[1] - 0.5).abs() < 1e-12);
    let diag = poly.basis_inverse() * e * poly.basis();
    assert!((e.trace() - 0.75).abs() < 1e-12 && (diag.trace() - 0.75).abs() < 1e-12);
    assert!(!contraction_check(&DMatrix::zeros(2, 2)));
    let (fitted, _) = poly.p_fitted(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    assert!(!fitted);
    let (zero_fitted, _) = poly.p_fitted(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
    assert!(zero_fitted);
}

#[test]
fn family_polynomials_are_fitted_by_standard_basis() {
    for name in ["ex71", "ex75:3,2"] {
        let a = analyze(&builtin(name).unwrap()).unwrap();
        let poly = a.points[0].polynomial().unwrap();
        let (fitted, weights) = poly.p_fitted(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(fitted, "{name}");
        assert_eq!(weights, vec![3, 2]);
        assert_eq!(a.mu, Some(Rational64::new(5, 12)));
    }
}

#[test]
fn tensor_example_points_and_indices() {
    let a = analyze(&builtin("ex74").unwrap()).unwrap();
    assert_eq!(a.points.len(), 2);
    let mu_at = |x: f64| {
        a.points
            .iter()
            .find(|p| (p.xi[0] - x).abs() < 1e-8)
            .and_then(|p| p.classification.mu())
    };
    assert_eq!(mu_at(0.0), Some(Rational64::new(2, 3)));
    assert_eq!(mu_at(PI), Some(Rational64::from_integer(1)));
}

#[test]
fn walk_moments() {
    let srw = walk_profile(&builtin("srw:2").unwrap()).unwrap();
    assert!(srw.mean.iter().all(|m| m.abs() < 1e-15));
    assert!((&srw.covariance - DMatrix::identity(2, 2) * 0.5).amax() < 1e-15);
    let phim = walk_profile(&builtin("phim:2,1").unwrap()).unwrap();
    let want = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
    assert!((&phim.covariance - want).amax() < 1e-15);
    let a = analyze(&builtin("srw:2").unwrap()).unwrap();
    assert_eq!(a.mu, Some(Rational64::from_integer(1)));
    for p in &a.points {
        let poly = p.polynomial().unwrap();
        for xi in [[1.0, 0.0], [0.3, -0.7]] {
            let want = (xi[0] * xi[0] + xi[1] * xi[1]) / 4.0;
            assert!((poly.eval(&xi) - c(want, 0.0)).norm() < 1e-12);
        }
    }
    let point = walk_profile(&LatticeFunction::delta(&[1, 2]).unwrap()).unwrap();
    assert!(!point.genuinely_d_dimensional);
}

#[test]
fn conjugate_closed_forms() {
    let sq = HomogeneousPolynomial::diagonal(vec![1], [(vec![2], c(1.0, 0.0))].into()).unwrap();
    let ev = ConjugateEvaluator::new(&sq).unwrap();
    assert!((ev.conjugate(&[1.0]).unwrap() - 0.25).abs() < 1e-12);
    assert_eq!(ev.conjugate(&[0.0]).unwrap(), 0.0);
    let fit = ev.bounds_check(8.0, 16).unwrap();
    assert!((fit.lower - 1.0).abs() < 1e-9, "{}", fit.lower);

    let a = analyze(&builtin("ex71").unwrap()).unwrap();
    let ev = ConjugateEvaluator::new(a.points[0].polynomial().unwrap()).unwrap();
    let want = 5.0 * 3f64.powf(-1.2);
    assert!((ev.conjugate(&[1.0, 0.0]).unwrap() - want).abs() < 1e-6 * want);
    assert!((ev.conjugate(&[-2.5, 0.0]).unwrap() - want * 2.5f64.powf(1.2)).abs() < 1e-6 * want);
}

#[test]
fn critical_family_conjugate_is_euclidean() {
    let f = semi_elliptic_family(&[1, 1], &[0.5, 0.5]).unwrap();
    let a = analyze(&f).unwrap();
    assert_eq!(a.points.len(), 2);
    let origin = a.points.iter().find(|p| p.xi[0].abs() < 1e-8).unwrap();
    let ev = ConjugateEvaluator::new(origin.polynomial().unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let x = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
        let ratio = ev.compare(&x).unwrap();
        assert!((ratio - 1.0).abs() < 1e-8, "{x:?}: {ratio}");
    }
}

#[test]
fn intro_conjugate_is_comparable_to_mixed_norm() {
    let a = analyze(&intro()).unwrap();
    let poly = a.points[0].polynomial().unwrap();
    let ev = ConjugateEvaluator::new(poly).unwrap();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for k in 0..48 {
        let th = 2.0 * PI * k as f64 / 48.0;
        for r in [0.01, 1.0, 100.0] {
            let x = [r * th.cos(), r * th.sin()];
            let v = ev.conjugate(&x).unwrap() / mixed_norm(&x, &[2, 1]);
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    assert!(lo > 0.5 && hi < 2.5, "band [{lo}, {hi}]");
}

#[test]
fn gaussian_attractors() {
    let sq = HomogeneousPolynomial::diagonal(vec![1], [(vec![2], c(1.0, 0.0))].into()).unwrap();
    let h = attractor_eval(&sq, 1.0, &[0.0]).unwrap();
    assert!((h - c(0.5 / PI.sqrt(), 0.0)).norm() < 1e-12);
    let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
    let p = HomogeneousPolynomial::quadratic(&cov).unwrap();
    let inv = cov.clone().try_inverse().unwrap();
    let closed = |x: &[f64]| {
        let v = nalgebra::DVector::from_column_slice(x);
        (-(v.transpose() * &inv * &v)[0] / 2.0).exp() / (2.0 * PI * cov.determinant().sqrt())
    };
    let grid = attractor_grid(&p, 1.0, &LatticeBox::centered(2, 10)).unwrap();
    let mut worst: f64 = 0.0;
    grid.values.for_each(|x, v| {
        let xf: Vec<f64> = x.iter().map(|&c| c as f64).collect();
        worst = worst.max((v - c(closed(&xf), 0.0)).norm());
    });
    assert!(worst < 1e-8, "{worst}");
    assert!(
        (attractor_eval(&p, 1.0, &[0.5, -1.0]).unwrap().re - closed(&[0.5, -1.0])).abs() < 1e-10
    );
}

#[test]
fn attractor_grid_agrees_with_pointwise_quadrature() {
    let a = analyze(&builtin("ex71").unwrap()).unwrap();
    let p = a.points[0].polynomial().unwrap();
    let grid = attractor_grid(p, 1e4, &LatticeBox::centered(2, 50)).unwrap();
    let scale = grid.values.norm_linf();
    for x in [[0i64, 0], [7, -3], [-20, 11], [35, 40], [-50, -50]] {
        let xf = [x[0] as f64, x[1] as f64];
        let want = attractor_eval(p, 1e4, &xf).unwrap();
        assert!((grid.values.get(&x) - want).norm() < 1e-8 * scale, "{x:?}");
    }
    let mu = 5.0 / 12.0;
    let y =
        p.group_matrix(0.25).unwrap().transpose() * nalgebra::DVector::from_vec(vec![3.0, -2.0]);
    let lhs = attractor_eval(p, 4.0, &[3.0, -2.0]).unwrap();
    let rhs = attractor_eval(p, 1.0, y.as_slice()).unwrap() * 4f64.powf(-mu);
    assert!((lhs - rhs).norm() < 1e-6 * rhs.norm());
}

#[test]
fn local_limit_forms() {
    let n = 40;
    let window = LatticeBox::centered(2, 12);
    let a = analyze(&intro()).unwrap();
    let approx = llt_approx(&a, n, &window).unwrap();
    let p = a.points[0].polynomial().unwrap();
    for x in [[0i64, 0], [3, -2], [-5, 7]] {
        let xf = [x[0] as f64, x[1] as f64];
        let phase = Complex64::from_polar(1.0, -PI * xf[1] / 3.0);
        let want = phase * attractor_eval(p, n as f64, &xf).unwrap();
        assert!((approx.get(&x) - want).norm() < 1e-9, "{x:?}");
    }

    let a = analyze(&ex73()).unwrap();
    let approx = llt_approx(&a, n, &window).unwrap();
    let p = a.points[0].polynomial().unwrap();
    for x in [[0i64, 0], [3, -2], [-5, 7], [4, 4]] {
        let xf = [x[0] as f64, x[1] as f64];
        let want = (1.0 + (PI * (xf[0] + xf[1])).cos()) * attractor_eval(p, n as f64, &xf).unwrap();
        assert!((approx.get(&x) - want).norm() < 1e-9, "{x:?}");
    }

    let f = builtin("srw:2").unwrap();
    let a = analyze(&f).unwrap();
    let profile = walk_profile(&f).unwrap();
    let approx = llt_approx(&a, n, &window).unwrap();
    let nf = n as f64;
    for x in [[0i64, 0], [3, -2], [-5, 7], [4, 5]] {
        let r2 = (x[0] * x[0] + x[1] * x[1]) as f64;
        let want = theta(&profile, n, &x).unwrap() * (-r2 / nf).exp() / (PI * nf);
        assert!((approx.get(&x) - c(want, 0.0)).norm() < 1e-10, "{x:?}");
    }
}

#[test]
fn local_limit_errors_shrink() {
    let cfg = PowerConfig::default();
    let a = analyze(&intro()).unwrap();
    let e10 = llt_error(&a, 10, &cfg).unwrap().scaled_error;
    let e100 = llt_error(&a, 100, &cfg).unwrap().scaled_error;
    assert!(e100 < e10);

    let lazy = analyze(&ex74_second()).unwrap();
    let errs: Vec<f64> = [16, 64, 256]
        .iter()
        .map(|&n| llt_error(&lazy, n, &cfg).unwrap().scaled_error)
        .collect();
    assert!(errs.windows(2).all(|w| w[1] < 0.6 * w[0]), "{errs:?}");

    let a = analyze(&builtin("ex74").unwrap()).unwrap();
    let trend: Vec<(u64, f64)> = [125, 1000]
        .iter()
        .map(|&n| (n, llt_error(&a, n, &cfg).unwrap().scaled_error))
        .collect();
    let slope = power_slope(&trend);
    assert!((-0.45..=-0.2).contains(&slope), "slope {slope}");
}

#[test]
fn rotated_example_defeats_derivative_decay() {
    let f = ex73();
    let scaled: Vec<f64> = [16u64, 64, 256]
        .iter()
        .map(|&n| {
            let g = f.power(n, PowerMethod::Fast).unwrap();
            (n as f64).powf(0.75) * space_diff(&g, &[0, 1]).unwrap().get(&[0, 0]).norm()
        })
        .collect();
    assert!(scaled.iter().all(|&v| v > 0.4), "{scaled:?}");
}

#[test]
fn time_difference_identities() {
    let f = builtin("srw:1").unwrap();
    let a = analyze(&f).unwrap();
    let psi =
        LatticeFunction::from_real(1, [(vec![0], 1.0), (vec![3], -0.5), (vec![-2], 0.25)]).unwrap();
    let twice = time_diff(
        &f,
        &a,
        &[0.0],
        1,
        &time_diff(&f, &a, &[0.0], 1, &psi).unwrap(),
    )
    .unwrap();
    let f2 = f.power(2, PowerMethod::Direct).unwrap();
    let kernel = LatticeFunction::delta(&[0])
        .unwrap()
        .sub(&f.scale(c(2.0, 0.0)))
        .unwrap()
        .add(&f2)
        .unwrap();
    assert!(twice.max_abs_diff(&kernel.convolve(&psi).unwrap()) < 1e-15);

    let g = builtin("ex75:3,2").unwrap();
    let a = analyze(&g).unwrap();
    let mu = 5.0 / 12.0;
    let scaled: Vec<f64> = [64u64, 128, 256, 512]
        .iter()
        .map(|&n| {
            let gn = g.power(n, PowerMethod::Fast).unwrap();
            let step = time_diff(&g, &a, &[0.0, 0.0], 1, &gn).unwrap();
            (n as f64).powf(mu + 1.0) * step.norm_linf()
        })
        .collect();
    let band = scaled.iter().cloned().fold(0.0, f64::max)
        / scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(band <= 2.0, "{scaled:?}");
}

#[test]
fn derivative_fits() {
    let cfg = PowerConfig::default();
    let ns: Vec<u64> = (4..=8).map(|k| 1 << k).collect();
    let e = vec![vec![1, 0], vec![0, 1]];
    let rep = derivative_bound_fit(&builtin("ex75:3,2").unwrap(), &e, &[1, 0], &ns, &cfg).unwrap();
    assert!((rep.constant("exponent").unwrap() - (5.0 / 12.0 + 1.0 / 6.0)).abs() < 1e-12);
    assert_eq!(rep.verdict, ReportVerdict::Fitted);
    let rep = derivative_bound_fit(&builtin("ex71").unwrap(), &e, &[0, 1], &ns, &cfg).unwrap();
    assert!(rep.rows.iter().all(|r| r.scaled.is_finite()));
    assert_eq!(rep.verdict, ReportVerdict::Fitted);
    let rejected = derivative_bound_fit(&ex73(), &e, &[0, 1], &ns, &cfg);
    assert!(matches!(
        rejected,
        Err(LatconvError::HypothesisViolation(_))
    ));
}

#[test]
fn subexponential_and_gaussian_fits() {
    let cfg = PowerConfig::default();
    let ns: Vec<u64> = (3..=7).map(|k| 1 << k).collect();
    let ex72 = builtin("ex72").unwrap();
    let rep = subexp_bound_fit(&ex72, &ns, 4, &cfg).unwrap();
    assert_eq!(rep.verdict, ReportVerdict::Fitted);
    assert!(rep.constant("C").unwrap().is_finite());
    let rep = subexp_bound_fit(&builtin("ex74").unwrap(), &ns, 6, &cfg).unwrap();
    assert!(rep.constant("C").unwrap().is_finite());
    let rep = subexp_bound_fit(&LatticeFunction::delta(&[2, 1]).unwrap(), &ns, 4, &cfg).unwrap();
    assert_eq!(rep.verdict, ReportVerdict::NotApplicable);
    assert!(matches!(
        gaussian_bound_fit(&ex72, &ns, &cfg),
        Err(LatconvError::HypothesisViolation(_))
    ));
}

#[test]
fn translation_sup_decay_is_not_applicable() {
    let rep = sup_decay_report(&LatticeFunction::delta(&[1, -1]).unwrap(), &[1, 2, 4, 8]).unwrap();
    assert_eq!(rep.verdict, ReportVerdict::NotApplicable);
    assert!(rep.rows.iter().all(|r| (r.sup - 1.0).abs() < 1e-12));
    let rep = sup_decay_report(&intro(), &[16, 32, 64, 128, 256, 512]).unwrap();
    assert_eq!(rep.verdict, ReportVerdict::BoundedBand);
}

#[test]
fn trace_invariance_on_rotated_example() {
    let a = analyze(&ex73()).unwrap();
    let p = a.points[0].polynomial().unwrap();
    let e = p.exponent().clone();
    assert!(trace_invariance_check(p, &e, &e).unwrap());
    let sq = HomogeneousPolynomial::diagonal(
        vec![1, 1],
        [(vec![2, 0], c(1.0, 0.0)), (vec![0, 2], c(1.0, 0.0))].into(),
    )
    .unwrap();
    let half = DMatrix::identity(2, 2) * 0.5;
    let rot = &half + DMatrix::from_row_slice(2, 2, &[0.0, 0.3, -0.3, 0.0]);
    assert!(trace_invariance_check(&sq, &half, &rot).unwrap());
}
