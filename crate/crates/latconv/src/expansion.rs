//! Taylor expansion of `log(symbol(xi0 + xi) / symbol(xi0))` and classification of unit-modulus points.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::Rational64;
use rayon::prelude::*;

use crate::error::{LatconvError, Result};
use crate::homogeneous::{canonical_eigenbasis, HomogeneousPolynomial};
use crate::lattice::LatticeFunction;
use crate::multiindex::{degree, eval_sparse, weighted_degree_cmp, MonomialBasis, MultiIndex};
use crate::symbol::{
    canonical_point, default_grid, normalize, principal_arg, torus_distance, OmegaSet, SymbolView,
    DEDUPE_RADIUS, OMEGA_TOL,
};

/// Largest total recentring distance accepted while testing a weight assignment.
const MAX_RECENTRE: f64 = 1e-2;
const RECENTRE_STEPS: usize = 8;
const REBASE_ROUNDS: usize = 4;
/// Kept coefficients below this magnitude are treated as rounding noise.
const KEPT_FLOOR: f64 = 1e-13;

/// Truncated Taylor series without constant term.
#[derive(Clone, Debug, PartialEq)]
pub struct TaylorSeries {
    dim: usize,
    order: usize,
    coefficients: BTreeMap<MultiIndex, Complex64>,
}

impl TaylorSeries {
    fn from_dense(basis: &MonomialBasis, dense: &[Complex64]) -> Self {
        let mut coefficients = basis.to_map(dense, 0.0);
        coefficients.remove(&vec![0; basis.dim()]);
        TaylorSeries {
            dim: basis.dim(),
            order: basis.order(),
            coefficients,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coefficients(&self) -> &BTreeMap<MultiIndex, Complex64> {
        &self.coefficients
    }

    pub fn coefficient(&self, beta: &[u32]) -> Complex64 {
        self.coefficients.get(beta).copied().unwrap_or_default()
    }

    /// Terms of total degree `k`.
    pub fn homogeneous_part(&self, k: u32) -> BTreeMap<MultiIndex, Complex64> {
        self.coefficients
            .iter()
            .filter(|(b, _)| degree(b) == k)
            .map(|(b, c)| (b.clone(), *c))
            .collect()
    }

    pub fn eval(&self, xi: &[f64]) -> Complex64 {
        let terms: Vec<(MultiIndex, Complex64)> = self
            .coefficients
            .iter()
            .map(|(b, c)| (b.clone(), *c))
            .collect();
        eval_sparse(&terms, xi)
    }
}

/// Taylor coefficients of `Gamma(xi) = log(symbol(xi + xi0) / symbol(xi0))` through total order `m`.
pub fn gamma_taylor(s: &SymbolView, xi0: &[f64], m: usize) -> Result<TaylorSeries> {
    if m < 2 {
        return Err(LatconvError::invalid("expansion order must be at least 2"));
    }
    if xi0.len() != s.dim() {
        return Err(LatconvError::DimensionMismatch {
            expected: s.dim(),
            found: xi0.len(),
        });
    }
    let basis = MonomialBasis::new(s.dim(), m);
    let dense = gamma_dense(s, xi0, &basis)?;
    Ok(TaylorSeries::from_dense(&basis, &dense))
}

fn gamma_dense(s: &SymbolView, xi0: &[f64], basis: &MonomialBasis) -> Result<Vec<Complex64>> {
    let f0 = s.evaluate(xi0);
    if (f0.norm() - 1.0).abs() > OMEGA_TOL {
        return Err(LatconvError::NotUnitModulus(f0.norm()));
    }
    let i = Complex64::i();
    let mut u = basis.zeros();
    for (x, v) in s.source().iter() {
        let xf: Vec<f64> = x.iter().map(|&c| c as f64).collect();
        let ph: f64 = xf.iter().zip(xi0).map(|(a, b)| a * b).sum();
        let w = v * Complex64::from_polar(1.0, ph) / f0;
        let pw = basis.scaled_powers(&xf, i);
        for (acc, p) in u.iter_mut().zip(&pw).skip(1) {
            *acc += w * p;
        }
    }
    u[0] = Complex64::new(0.0, 0.0);
    let mut out = u.clone();
    let mut pk = u.clone();
    for k in 2..=basis.order() {
        pk = basis.mul(&pk, &u);
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        for (o, p) in out.iter_mut().zip(&pk) {
            *o += p * (sign / k as f64);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    PositiveHomogeneousType,
    NotPositiveHomogeneousType,
    Indeterminate,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::PositiveHomogeneousType => "positive-homogeneous-type",
            Verdict::NotPositiveHomogeneousType => "not-positive-homogeneous-type",
            Verdict::Indeterminate => "indeterminate",
        })
    }
}

/// Order in which weight assignments for null axes are tried.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchOrder {
    Ascending,
    Descending,
}

#[derive(Clone, Debug)]
pub struct ClassifyOptions {
    pub m_max: usize,
    pub search: SearchOrder,
    /// Bound on surviving sub-homogeneous coefficients.
    pub coefficient_tol: f64,
    /// Hessian eigenvalues at or below this bound mark null axes.
    pub eigen_tol: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            m_max: 12,
            search: SearchOrder::Ascending,
            coefficient_tol: 1e-8,
            eigen_tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Diagnostics {
    pub order: usize,
    /// Largest surviving sub-homogeneous coefficient for the reported weights.
    pub sub_homogeneous_residual: f64,
    /// Largest coefficient of weighted degree above one.
    pub tail_norm: f64,
    /// Distance the expansion point moved while recentring.
    pub recentring_shift: f64,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Classification {
    pub verdict: Verdict,
    /// Expansion point after recentring.
    pub center: Vec<f64>,
    pub drift: Option<Vec<f64>>,
    pub polynomial: Option<HomogeneousPolynomial>,
    /// `Q = -(Gamma - i alpha.xi)` at `center`, in original coordinates.
    pub series: Option<TaylorSeries>,
    pub diagnostics: Diagnostics,
}

impl Classification {
    pub fn is_positive_homogeneous(&self) -> bool {
        self.verdict == Verdict::PositiveHomogeneousType
    }

    pub fn mu(&self) -> Option<Rational64> {
        self.polynomial.as_ref().map(|p| p.mu())
    }

    pub fn exponent(&self) -> Option<&DMatrix<f64>> {
        self.polynomial.as_ref().map(|p| p.exponent())
    }
}

/// Expansion data at one centre.
#[derive(Clone)]
struct Local {
    center: Vec<f64>,
    drift: Vec<f64>,
    real_linear: f64,
    q: Vec<Complex64>,
}

fn expand(s: &SymbolView, center: &[f64], basis: &MonomialBasis) -> Result<Local> {
    let gamma = gamma_dense(s, center, basis)?;
    let d = s.dim();
    let mut drift = vec![0.0; d];
    let mut real_linear: f64 = 0.0;
    let mut q: Vec<Complex64> = gamma.iter().map(|c| -c).collect();
    for (j, a) in drift.iter_mut().enumerate() {
        let mut e = vec![0; d];
        e[j] = 1;
        let k = basis.index(&e).expect("linear monomial");
        *a = gamma[k].im;
        real_linear = real_linear.max(gamma[k].re.abs());
        q[k] = Complex64::new(-gamma[k].re, 0.0);
    }
    Ok(Local {
        center: center.to_vec(),
        drift,
        real_linear,
        q,
    })
}

/// Hessian of `Re Q` at the expansion centre.
fn quadratic_form(basis: &MonomialBasis, local: &Local) -> DMatrix<f64> {
    let d = basis.dim();
    let mut h = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let mut b = vec![0; d];
            b[i] += 1;
            b[j] += 1;
            let c = local.q[basis.index(&b).expect("quadratic monomial")].re;
            h[(i, j)] = if i == j { 2.0 * c } else { c };
        }
    }
    h
}

fn axis_index(basis: &MonomialBasis, d: usize, j: usize, k: u32) -> Option<usize> {
    let mut e = vec![0; d];
    e[j] = k;
    basis.index(&e)
}

enum Attempt {
    Accepted(Box<Classification>),
    Rejected { residual: f64 },
}

/// Classifies a unit-modulus point of a normalized symbol.
pub fn classify(s: &SymbolView, xi0: &[f64], opts: &ClassifyOptions) -> Result<Classification> {
    let d = s.dim();
    if opts.m_max < 2 {
        return Err(LatconvError::invalid("m_max must be at least 2"));
    }
    if xi0.len() != d {
        return Err(LatconvError::DimensionMismatch {
            expected: d,
            found: xi0.len(),
        });
    }
    let basis = MonomialBasis::new(d, opts.m_max);
    let start = expand(s, xi0, &basis)?;
    let tol = opts.coefficient_tol;
    let reject = |local: &Local, note: String| Classification {
        verdict: Verdict::NotPositiveHomogeneousType,
        center: local.center.clone(),
        drift: None,
        polynomial: None,
        series: Some(TaylorSeries::from_dense(&basis, &local.q)),
        diagnostics: Diagnostics {
            order: opts.m_max,
            notes: vec![note],
            ..Default::default()
        },
    };
    if s.source().len() == 1 {
        return Ok(reject(
            &start,
            "pure translation: the log-symbol is linear".into(),
        ));
    }
    let h = quadratic_form(&basis, &start);
    let (a, eig) = canonical_eigenbasis(&h);
    if let Some(l) = eig.iter().find(|&&l| l < -opts.eigen_tol) {
        return Ok(reject(
            &start,
            format!("quadratic part of Re Q has negative eigenvalue {l:e}"),
        ));
    }
    let null: Vec<usize> = (0..d).filter(|&j| eig[j] <= opts.eigen_tol).collect();
    let orders: Vec<u32> = (2..=(opts.m_max / 2) as u32).collect();
    let mut candidates: Vec<Vec<u32>> = vec![vec![1; d]];
    for &j in &null {
        let mut next = Vec::new();
        for c in &candidates {
            for &m in &orders {
                let mut w = c.clone();
                w[j] = m;
                next.push(w);
            }
        }
        candidates = next;
    }
    if opts.search == SearchOrder::Descending {
        candidates.reverse();
    }
    let mut best_residual = f64::INFINITY;
    for w in &candidates {
        match attempt(s, &basis, &a, w, &start, opts)? {
            Attempt::Accepted(c) => return Ok(*c),
            Attempt::Rejected { residual } => best_residual = best_residual.min(residual),
        }
    }
    let qr = basis.compose_linear(&start.q, &a);
    let flat_axis = null.iter().find(|&&j| {
        (1..=opts.m_max as u32)
            .all(|k| axis_index(&basis, d, j, k).is_none_or(|i| qr[i].norm() <= tol))
    });
    let mut out = reject(&start, String::new());
    out.diagnostics.sub_homogeneous_residual = best_residual;
    out.diagnostics.notes.clear();
    if let Some(j) = flat_axis {
        out.verdict = Verdict::Indeterminate;
        out.diagnostics.notes.push(format!(
            "log-symbol vanishes along rotated axis {j} through order {}; raise m_max or supply a basis",
            opts.m_max
        ));
    } else if candidates.is_empty() {
        out.diagnostics
            .notes
            .push("no admissible weights below m_max".into());
    } else {
        out.diagnostics.notes.push(format!(
            "no weight assignment up to order {} gives a positive homogeneous principal part",
            opts.m_max
        ));
    }
    Ok(out)
}

fn attempt(
    s: &SymbolView,
    basis: &MonomialBasis,
    a: &DMatrix<f64>,
    weights: &[u32],
    start: &Local,
    opts: &ClassifyOptions,
) -> Result<Attempt> {
    let d = s.dim();
    let mut local = start.clone();
    let mut a = a.clone();
    let mut qr = basis.compose_linear(&local.q, &a);
    let mut moved = 0.0;
    for _ in 0..REBASE_ROUNDS {
        let before = local.center.clone();
        for _ in 0..RECENTRE_STEPS {
            let mut shift = vec![0.0; d];
            for j in 0..d {
                let k = 2 * weights[j];
                let Some(top) = axis_index(basis, d, j, k) else {
                    return Ok(Attempt::Rejected {
                        residual: f64::INFINITY,
                    });
                };
                let lead = qr[top].re;
                if !(lead > 0.0) {
                    return Ok(Attempt::Rejected {
                        residual: f64::INFINITY,
                    });
                }
                let below = axis_index(basis, d, j, k - 1)
                    .map(|i| qr[i].re)
                    .unwrap_or(0.0);
                shift[j] = -below / (k as f64 * lead);
            }
            let norm = shift.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-15 || moved + norm > MAX_RECENTRE {
                break;
            }
            let center: Vec<f64> = (0..d)
                .map(|i| local.center[i] + (0..d).map(|j| a[(i, j)] * shift[j]).sum::<f64>())
                .collect();
            match expand(s, &center, basis) {
                Ok(next) => {
                    local = next;
                    qr = basis.compose_linear(&local.q, &a);
                    moved += norm;
                }
                Err(_) => break,
            }
        }
        let step: f64 = local
            .center
            .iter()
            .zip(&before)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt();
        if step == 0.0 {
            break;
        }
        // the null directions depend on the centre; realign them before recentring again
        let (next, _) = canonical_eigenbasis(&quadratic_form(basis, &local));
        a = next;
        qr = basis.compose_linear(&local.q, &a);
    }
    if local.real_linear > opts.coefficient_tol {
        return Ok(Attempt::Rejected {
            residual: local.real_linear,
        });
    }
    let mut residual: f64 = 0.0;
    let mut tail: f64 = 0.0;
    let mut kept = BTreeMap::new();
    for (beta, c) in basis.monomials().iter().zip(&qr).skip(1) {
        match weighted_degree_cmp(beta, weights) {
            Ordering::Less => residual = residual.max(c.norm()),
            Ordering::Equal => {
                if c.norm() > KEPT_FLOOR {
                    kept.insert(beta.clone(), *c);
                }
            }
            Ordering::Greater => tail = tail.max(c.norm()),
        }
    }
    if residual > opts.coefficient_tol {
        return Ok(Attempt::Rejected { residual });
    }
    let poly = match HomogeneousPolynomial::from_normal_form(a, weights.to_vec(), kept) {
        Ok(p) => p,
        Err(LatconvError::InvalidPolynomial(_)) => return Ok(Attempt::Rejected { residual }),
        Err(e) => return Err(e),
    };
    Ok(Attempt::Accepted(Box::new(Classification {
        verdict: Verdict::PositiveHomogeneousType,
        center: local.center.clone(),
        drift: Some(local.drift.clone()),
        polynomial: Some(poly),
        series: Some(TaylorSeries::from_dense(basis, &local.q)),
        diagnostics: Diagnostics {
            order: opts.m_max,
            sub_homogeneous_residual: residual,
            tail_norm: tail,
            recentring_shift: moved,
            notes: Vec::new(),
        },
    })))
}

#[derive(Clone, Debug)]
pub struct AnalyzeOptions {
    /// Points per axis of the seed grid; `None` picks a size from the dimension.
    pub grid: Option<usize>,
    pub omega_tol: f64,
    pub classify: ClassifyOptions,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            grid: None,
            omega_tol: OMEGA_TOL,
            classify: ClassifyOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PointAnalysis {
    /// Refined location in `(-pi, pi]^d`.
    pub xi: Vec<f64>,
    pub value: Complex64,
    pub classification: Classification,
}

impl PointAnalysis {
    pub fn polynomial(&self) -> Option<&HomogeneousPolynomial> {
        self.classification.polynomial.as_ref()
    }

    pub fn drift(&self) -> Option<&[f64]> {
        self.classification.drift.as_deref()
    }
}

#[derive(Clone, Debug)]
pub struct SpectralAnalysis {
    pub dim: usize,
    pub normalized: LatticeFunction,
    /// Positive factor applied to the input.
    pub scale: f64,
    pub omega: OmegaSet,
    pub points: Vec<PointAnalysis>,
    /// Smallest index over all points, when every point is of positive homogeneous type.
    pub mu: Option<Rational64>,
    /// Indices into `points` attaining `mu`.
    pub minimal: Vec<usize>,
    pub verdict: Verdict,
}

impl SpectralAnalysis {
    pub fn minimal_points(&self) -> impl Iterator<Item = &PointAnalysis> {
        self.minimal.iter().map(|&i| &self.points[i])
    }
}

pub fn analyze(f: &LatticeFunction) -> Result<SpectralAnalysis> {
    analyze_with(f, &AnalyzeOptions::default())
}

pub fn analyze_with(f: &LatticeFunction, opts: &AnalyzeOptions) -> Result<SpectralAnalysis> {
    let (g, scale) = normalize(f)?;
    let s = SymbolView::new(&g);
    let grid = opts.grid.unwrap_or_else(|| default_grid(g.dim()));
    let mut omega = s.find_omega(grid, opts.omega_tol)?;
    let classified: Vec<Classification> = omega
        .points
        .par_iter()
        .map(|xi| classify(&s, xi, &opts.classify))
        .collect::<Result<_>>()?;
    let points: Vec<PointAnalysis> = classified
        .into_iter()
        .map(|c| {
            let xi = canonical_point(&c.center);
            PointAnalysis {
                value: s.evaluate(&xi),
                xi,
                classification: c,
            }
        })
        .collect();
    // seeds on either side of a flat maximum refine to the same centre
    let mut merged: Vec<PointAnalysis> = Vec::with_capacity(points.len());
    for p in points {
        match merged
            .iter_mut()
            .find(|q| torus_distance(&q.xi, &p.xi) < DEDUPE_RADIUS)
        {
            Some(q) => {
                let better = p.classification.diagnostics.sub_homogeneous_residual
                    < q.classification.diagnostics.sub_homogeneous_residual;
                if better {
                    *q = p;
                }
            }
            None => merged.push(p),
        }
    }
    let mut points = merged;
    points.sort_by(|a, b| {
        a.xi.iter()
            .zip(&b.xi)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    });
    omega.points = points.iter().map(|p| p.xi.clone()).collect();
    omega.values = points.iter().map(|p| p.value).collect();
    omega.phases = points.iter().map(|p| principal_arg(p.value)).collect();
    let verdict = if points
        .iter()
        .any(|p| p.classification.verdict == Verdict::Indeterminate)
    {
        Verdict::Indeterminate
    } else if points
        .iter()
        .all(|p| p.classification.is_positive_homogeneous())
    {
        Verdict::PositiveHomogeneousType
    } else {
        Verdict::NotPositiveHomogeneousType
    };
    let (mu, minimal) = if verdict == Verdict::PositiveHomogeneousType {
        let mus: Vec<Rational64> = points
            .iter()
            .map(|p| p.classification.mu().expect("classified"))
            .collect();
        let min = *mus.iter().min().expect("omega is nonempty");
        (
            Some(min),
            (0..mus.len()).filter(|&i| mus[i] == min).collect(),
        )
    } else {
        (None, Vec::new())
    };
    Ok(SpectralAnalysis {
        dim: g.dim(),
        normalized: g,
        scale,
        omega,
        points,
        mu,
        minimal,
        verdict,
    })
}
