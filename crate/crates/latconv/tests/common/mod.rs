#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::OnceLock;

use latconv::attractor::attractor_eval;
use latconv::examples::builtin;
use latconv::expansion::analyze;
use latconv::homogeneous::{trace_invariance_check, HomogeneousPolynomial};
use latconv::legendre::{mixed_norm, power_conjugate_constant, ConjugateEvaluator};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

/// Builtins whose classified polynomials seed the property suites.
pub const POOL_SOURCES: &[&str] = &[
    "intro", "ex71", "ex72", "ex73", "ex74", "ex75:3,2", "phim:2,1", "srw:3",
];

/// Every polynomial found by analyzing [`POOL_SOURCES`].
pub fn classified_pool() -> &'static [HomogeneousPolynomial] {
    static POOL: OnceLock<Vec<HomogeneousPolynomial>> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut out = Vec::new();
        for name in POOL_SOURCES {
            let a = analyze(&builtin(name).expect("builtin")).expect("analysis");
            out.extend(a.points.iter().filter_map(|p| p.polynomial().cloned()));
        }
        assert!(!out.is_empty());
        out
    })
}

fn pool_up_to(dim: usize) -> Vec<HomogeneousPolynomial> {
    classified_pool()
        .iter()
        .filter(|p| p.dim() <= dim)
        .cloned()
        .collect()
}

/// Multi-indices of weighted degree one for `weights`.
pub fn unit_degree_monomials(weights: &[u32]) -> Vec<Vec<u32>> {
    let lcm = weights.iter().fold(1u32, |acc, &m| {
        let k = 2 * m;
        let (mut a, mut b) = (acc, k);
        while b != 0 {
            (a, b) = (b, a % b);
        }
        acc / a * k
    });
    let mut out = Vec::new();
    let mut beta = vec![0u32; weights.len()];
    loop {
        let total: u32 = beta
            .iter()
            .zip(weights)
            .map(|(b, m)| b * lcm / (2 * m))
            .sum();
        if total == lcm {
            out.push(beta.clone());
        }
        let mut j = 0;
        loop {
            if j == beta.len() {
                return out;
            }
            beta[j] += 1;
            if beta[j] <= 2 * weights[j] {
                break;
            }
            beta[j] = 0;
            j += 1;
        }
    }
}

/// Random semi-elliptic polynomial `sum_j a_j u_j^{2 m_j} + i (mixed terms)` with `u = A^{-1} xi`.
#[derive(Clone, Debug)]
pub struct SeparableSpec {
    pub basis: DMatrix<f64>,
    pub weights: Vec<u32>,
    /// `a_j`, the real axis coefficients.
    pub axis: Vec<f64>,
    pub imaginary: Vec<(Vec<u32>, f64)>,
}

impl SeparableSpec {
    pub fn polynomial(&self) -> HomogeneousPolynomial {
        let mut normal: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
        for (j, &a) in self.axis.iter().enumerate() {
            let mut b = vec![0; self.weights.len()];
            b[j] = 2 * self.weights[j];
            *normal.entry(b).or_default() += a;
        }
        for (b, c) in &self.imaginary {
            *normal.entry(b.clone()).or_default() += Complex64::new(0.0, *c);
        }
        HomogeneousPolynomial::from_normal_form(self.basis.clone(), self.weights.clone(), normal)
            .expect("positive real part")
    }

    /// Exact `R^#(x) = sum_j kappa_j |z_j|^{2 m_j / (2 m_j - 1)}` with `z = A^T x`.
    pub fn conjugate(&self, x: &[f64]) -> f64 {
        let z = self.basis.transpose() * nalgebra::DVector::from_column_slice(x);
        z.iter()
            .zip(self.kappas())
            .zip(&self.weights)
            .map(|((zj, k), &m)| k * mixed_norm(&[*zj], &[m]))
            .sum()
    }

    /// `kappa_j = C_{m_j} a_j^{-1/(2 m_j - 1)}`.
    pub fn kappas(&self) -> Vec<f64> {
        self.axis
            .iter()
            .zip(&self.weights)
            .map(|(a, &m)| power_conjugate_constant(m) * a.powf(-1.0 / (2.0 * m as f64 - 1.0)))
            .collect()
    }
}

/// Diagonally dominant basis, so it is always invertible.
fn basis_strategy(d: usize) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(-0.3..0.3f64, d * d).prop_map(move |v| {
        let mut a = DMatrix::from_row_slice(d, d, &v);
        for j in 0..d {
            a[(j, j)] = 1.0 + a[(j, j)].abs();
        }
        a
    })
}

pub fn separable_spec(max_dim: usize) -> impl Strategy<Value = SeparableSpec> {
    (1..=max_dim)
        .prop_flat_map(|d| {
            (
                basis_strategy(d),
                proptest::collection::vec(1u32..=3, d),
                proptest::collection::vec(0.2..3.0f64, d),
                proptest::collection::vec(-0.5..0.5f64, 64),
            )
        })
        .prop_map(|(basis, weights, axis, imag)| {
            let imaginary = unit_degree_monomials(&weights)
                .into_iter()
                .zip(imag)
                .collect();
            SeparableSpec {
                basis,
                weights,
                axis,
                imaginary,
            }
        })
}

/// Either a polynomial from [`classified_pool`] or a random separable one.
pub fn polynomial(max_dim: usize) -> BoxedStrategy<HomogeneousPolynomial> {
    let pool = pool_up_to(max_dim);
    let random = separable_spec(max_dim).prop_map(|s| s.polynomial());
    if pool.is_empty() {
        random.boxed()
    } else {
        prop_oneof![proptest::sample::select(pool), random].boxed()
    }
}

pub fn point(d: usize, r: f64) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-r..r, d)
}

fn with_point(max_dim: usize, r: f64) -> impl Strategy<Value = (HomogeneousPolynomial, Vec<f64>)> {
    polynomial(max_dim).prop_flat_map(move |p| {
        let d = p.dim();
        (Just(p), point(d, r))
    })
}

fn close(got: Complex64, want: Complex64, tol: f64, what: &str) -> Result<(), TestCaseError> {
    if (got - want).norm() <= tol {
        Ok(())
    } else {
        Err(TestCaseError::fail(format!(
            "{what}: got {got}, expected {want}, tolerance {tol:e}"
        )))
    }
}

pub type HomogeneityCase = (HomogeneousPolynomial, f64, Vec<f64>);

pub fn homogeneity_case() -> impl Strategy<Value = HomogeneityCase> {
    (with_point(3, 2.0), 0.05..20.0f64).prop_map(|((p, xi), t)| (p, t, xi))
}

/// `P(t^E xi) = t P(xi)`.
pub fn check_homogeneity((p, t, xi): HomogeneityCase) -> Result<(), TestCaseError> {
    let lhs = p.eval(&p.group_action(t, &xi).map_err(fail)?);
    let rhs = p.eval(&xi) * t;
    close(lhs, rhs, 1e-9 * (1.0 + rhs.norm()), "homogeneity")
}

pub type ScalingCase = (HomogeneousPolynomial, f64, Vec<f64>);

pub fn scaling_case() -> impl Strategy<Value = ScalingCase> {
    (with_point(2, 3.0), 0.25..4.0f64).prop_map(|((p, x), t)| (p, t, x))
}

/// `H_P^t(x) = t^{-mu} H_P^1((1/t)^{E^T} x)`.
pub fn check_scaling((p, t, x): ScalingCase) -> Result<(), TestCaseError> {
    let mu = *p.mu().numer() as f64 / *p.mu().denom() as f64;
    let g = p.group_matrix(1.0 / t).map_err(fail)?.transpose();
    let y = &g * nalgebra::DVector::from_column_slice(&x);
    let lhs = attractor_eval(&p, t, &x).map_err(fail)?;
    let rhs = attractor_eval(&p, 1.0, y.as_slice()).map_err(fail)? * t.powf(-mu);
    close(lhs, rhs, 1e-8 * t.powf(-mu), "attractor scaling")
}

/// Block-isotropic `c (u_1^2 + u_2^2)^m [+ c_3 u_3^{2 m_3}]` in a random basis, with a
/// rotation generator `J` in the isotropic block and a shear size `s`.
#[derive(Clone, Debug)]
pub struct TraceCase {
    pub polynomial: HomogeneousPolynomial,
    pub rotation: DMatrix<f64>,
    pub shear: f64,
}

pub fn trace_case() -> impl Strategy<Value = TraceCase> {
    (2usize..=3)
        .prop_flat_map(|d| {
            (
                basis_strategy(d),
                1u32..=3,
                1u32..=3,
                0.2..3.0f64,
                0.2..3.0f64,
                -2.0..2.0f64,
            )
        })
        .prop_map(|(basis, m, m3, c, c3, shear)| {
            let d = basis.nrows();
            let mut weights = vec![m, m];
            let mut normal: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
            let mut binom = 1.0;
            for k in 0..=m {
                let mut b = vec![2 * k, 2 * (m - k)];
                if d == 3 {
                    b.push(0);
                }
                normal.insert(b, Complex64::new(c * binom, 0.0));
                binom = binom * (m - k) as f64 / (k + 1) as f64;
            }
            if d == 3 {
                weights.push(m3);
                normal.insert(vec![0, 0, 2 * m3], Complex64::new(c3, 0.0));
            }
            let polynomial =
                HomogeneousPolynomial::from_normal_form(basis.clone(), weights, normal)
                    .expect("positive real part");
            let mut j = DMatrix::zeros(d, d);
            j[(0, 1)] = 1.0;
            j[(1, 0)] = -1.0;
            let inv = basis.clone().try_inverse().expect("invertible");
            let rotation = &basis * j * inv;
            TraceCase {
                polynomial,
                rotation,
                shear,
            }
        })
}

/// `E` and `E + s A J A^{-1}` are both exponents and share a trace.
pub fn check_trace(case: TraceCase) -> Result<(), TestCaseError> {
    let e1 = case.polynomial.exponent().clone();
    let e2 = &e1 + &case.rotation * case.shear;
    match trace_invariance_check(&case.polynomial, &e1, &e2) {
        Ok(true) => Ok(()),
        Ok(false) => Err(TestCaseError::fail(format!(
            "traces differ: {} vs {}",
            e1.trace(),
            e2.trace()
        ))),
        Err(e) => Err(fail(e)),
    }
}

pub type LegendreCase = (HomogeneousPolynomial, f64, Vec<f64>);

pub fn legendre_case() -> impl Strategy<Value = LegendreCase> {
    (with_point(3, 3.0), 0.1..10.0f64)
        .prop_filter("nonzero point", |((_, x), _)| {
            x.iter().any(|v| v.abs() > 1e-3)
        })
        .prop_map(|((p, x), t)| (p, t, x))
}

/// `R^#(t^{(I - E)^*} x) = t R^#(x)`.
pub fn check_legendre_homogeneity((p, t, x): LegendreCase) -> Result<(), TestCaseError> {
    let ev = ConjugateEvaluator::new(&p).map_err(fail)?;
    let base = ev.conjugate(&x).map_err(fail)?;
    let moved = ev
        .conjugate(&ev.dual_group_action(t, &x).map_err(fail)?)
        .map_err(fail)?;
    let want = t * base;
    if (moved - want).abs() <= 1e-6 * want.abs().max(1e-12) {
        Ok(())
    } else {
        Err(TestCaseError::fail(format!(
            "R#(t^(I-E)* x) = {moved}, t R#(x) = {want}"
        )))
    }
}

pub type NormBoundCase = (SeparableSpec, Vec<f64>);

pub fn norm_bound_case() -> impl Strategy<Value = NormBoundCase> {
    separable_spec(3)
        .prop_flat_map(|s| {
            let d = s.weights.len();
            (Just(s), point(d, 4.0))
        })
        .prop_filter("nonzero point", |(_, z)| z.iter().any(|v| v.abs() > 1e-3))
}

/// `min kappa <= R^#(x) / |z|_m <= max kappa` and the exact separable value, with `z = A^T x`.
pub fn check_norm_bounds((spec, z): NormBoundCase) -> Result<(), TestCaseError> {
    let p = spec.polynomial();
    let ev = ConjugateEvaluator::new(&p).map_err(fail)?;
    let ratio = ev.compare(&z).map_err(fail)?;
    let kappas = spec.kappas();
    let lo = kappas.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = kappas.iter().cloned().fold(0.0, f64::max);
    if !(ratio >= lo * (1.0 - 1e-6) && ratio <= hi * (1.0 + 1e-6)) {
        return Err(TestCaseError::fail(format!(
            "ratio {ratio} outside [{lo}, {hi}]"
        )));
    }
    let x = p.basis_inverse().transpose() * nalgebra::DVector::from_column_slice(&z);
    let exact = spec.conjugate(x.as_slice());
    let got = ratio * mixed_norm(&z, &spec.weights);
    if (got - exact).abs() <= 1e-6 * exact.max(1e-12) {
        Ok(())
    } else {
        Err(TestCaseError::fail(format!(
            "conjugate {got}, closed form {exact}"
        )))
    }
}

fn fail(e: impl std::fmt::Display) -> TestCaseError {
    TestCaseError::fail(e.to_string())
}
