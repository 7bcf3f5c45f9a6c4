//! Positive homogeneous polynomials, their exponents and the groups `t^E`.
//!
//! A polynomial is stored in a semi-elliptic normal form: a basis `A`, integer weights
//! `m` and coefficients in `A`-coordinates where every monomial has `|beta : 2m| = 1`.
//! The exponent `E = A diag(1/(2 m_j)) A^{-1}` is kept in this closed form.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_rational::Rational64;

use crate::error::{LatconvError, Result};
use crate::format::fmt_f64;
use crate::multiindex::{degree, eval_sparse, weighted_degree_cmp, MonomialBasis, MultiIndex};
use crate::sampling::{sphere_and_axes, sphere_samples, DEFAULT_SEED};

/// Sphere samples per dimension for positivity checks.
pub const SAMPLES_PER_DIM: usize = 1000;
/// Coefficients below this magnitude are dropped when changing coordinates.
const COEFF_FLOOR: f64 = 1e-15;

#[derive(Clone, Debug)]
pub struct HomogeneousPolynomial {
    dim: usize,
    coefficients: BTreeMap<MultiIndex, Complex64>,
    normal: BTreeMap<MultiIndex, Complex64>,
    normal_terms: Vec<(MultiIndex, Complex64)>,
    basis: DMatrix<f64>,
    basis_inv: DMatrix<f64>,
    weights: Vec<u32>,
    exponent: DMatrix<f64>,
    mu: Rational64,
}

/// `(A, m, coefficients in A-coordinates)`.
#[derive(Clone, Debug)]
pub struct SemiEllipticForm {
    pub basis: DMatrix<f64>,
    pub weights: Vec<u32>,
    pub coefficients: BTreeMap<MultiIndex, Complex64>,
}

impl HomogeneousPolynomial {
    pub fn from_normal_form(
        basis: DMatrix<f64>,
        weights: Vec<u32>,
        normal: BTreeMap<MultiIndex, Complex64>,
    ) -> Result<Self> {
        let d = weights.len();
        if d == 0 {
            return Err(LatconvError::InvalidPolynomial(
                "dimension must be positive".into(),
            ));
        }
        if basis.nrows() != d || basis.ncols() != d {
            return Err(LatconvError::DimensionMismatch {
                expected: d,
                found: basis.nrows(),
            });
        }
        if weights.contains(&0) {
            return Err(LatconvError::InvalidPolynomial(
                "weights must be positive".into(),
            ));
        }
        let basis_inv = basis
            .clone()
            .try_inverse()
            .filter(|_| basis.determinant().abs() > 1e-12)
            .ok_or_else(|| LatconvError::InvalidPolynomial("basis matrix is singular".into()))?;
        for beta in normal.keys() {
            if beta.len() != d {
                return Err(LatconvError::DimensionMismatch {
                    expected: d,
                    found: beta.len(),
                });
            }
            if weighted_degree_cmp(beta, &weights) != Ordering::Equal {
                return Err(LatconvError::InvalidPolynomial(format!(
                    "monomial {beta:?} is not of weighted degree one for weights {weights:?}"
                )));
            }
        }
        let normal: BTreeMap<MultiIndex, Complex64> =
            normal.into_iter().filter(|(_, c)| c.norm() > 0.0).collect();
        let order = normal.keys().map(|b| degree(b) as usize).max().unwrap_or(0);
        let mb = MonomialBasis::new(d, order);
        let dense = mb.from_map(&normal).expect("degrees fit the basis");
        let orig = mb.compose_linear(&dense, &basis_inv);
        let scale = orig.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let coefficients = mb.to_map(&orig, COEFF_FLOOR * scale.max(1.0));
        let diag = DMatrix::from_diagonal(&DVector::from_iterator(
            d,
            weights.iter().map(|&m| 1.0 / (2.0 * m as f64)),
        ));
        let exponent = &basis * diag * &basis_inv;
        let mu = weights
            .iter()
            .map(|&m| Rational64::new(1, 2 * m as i64))
            .sum();
        let p = HomogeneousPolynomial {
            dim: d,
            coefficients,
            normal_terms: normal.iter().map(|(b, c)| (b.clone(), *c)).collect(),
            normal,
            basis,
            basis_inv,
            weights,
            exponent,
            mu,
        };
        let min = p.min_real_on_sphere(SAMPLES_PER_DIM * d, DEFAULT_SEED);
        if !(min > 0.0) {
            return Err(LatconvError::InvalidPolynomial(format!(
                "real part is not positive definite (sampled minimum {min:e})"
            )));
        }
        Ok(p)
    }

    /// Normal form with `A = I`.
    pub fn diagonal(
        weights: Vec<u32>,
        coefficients: BTreeMap<MultiIndex, Complex64>,
    ) -> Result<Self> {
        let d = weights.len();
        Self::from_normal_form(DMatrix::identity(d, d), weights, coefficients)
    }

    /// `P(xi) = xi . C xi / 2` for a symmetric positive definite `C`.
    pub fn quadratic(c: &DMatrix<f64>) -> Result<Self> {
        let d = c.nrows();
        if c.ncols() != d || d == 0 {
            return Err(LatconvError::InvalidPolynomial(
                "matrix must be square".into(),
            ));
        }
        if (c - c.transpose()).amax() > 1e-12 * c.amax().max(1.0) {
            return Err(LatconvError::InvalidPolynomial(
                "matrix must be symmetric".into(),
            ));
        }
        let (a, eig) = canonical_eigenbasis(c);
        if eig.iter().any(|&l| l <= 0.0) {
            return Err(LatconvError::InvalidPolynomial(
                "matrix must be positive definite".into(),
            ));
        }
        let normal = (0..d)
            .map(|j| {
                let mut b = vec![0; d];
                b[j] = 2;
                (b, Complex64::new(eig[j] / 2.0, 0.0))
            })
            .collect();
        Self::from_normal_form(a, vec![1; d], normal)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coefficients in the original coordinates.
    pub fn coefficients(&self) -> &BTreeMap<MultiIndex, Complex64> {
        &self.coefficients
    }

    pub fn normal_coefficients(&self) -> &BTreeMap<MultiIndex, Complex64> {
        &self.normal
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn basis_inverse(&self) -> &DMatrix<f64> {
        &self.basis_inv
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    pub fn exponent(&self) -> &DMatrix<f64> {
        &self.exponent
    }

    /// `tr E` as an exact fraction.
    pub fn mu(&self) -> Rational64 {
        self.mu
    }

    /// Eigenvalues `1/(2 m_j)` of `E`.
    pub fn exponent_eigenvalues(&self) -> Vec<f64> {
        self.weights
            .iter()
            .map(|&m| 1.0 / (2.0 * m as f64))
            .collect()
    }

    pub fn lambda_max(&self) -> f64 {
        self.exponent_eigenvalues().into_iter().fold(0.0, f64::max)
    }

    pub fn lambda_min(&self) -> f64 {
        self.exponent_eigenvalues()
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_orthogonal_basis(&self) -> bool {
        (self.basis.transpose() * &self.basis - DMatrix::identity(self.dim, self.dim)).amax()
            < 1e-12
    }

    /// Coordinates `A^{-1} xi`.
    pub fn to_normal_coordinates(&self, xi: &[f64]) -> Vec<f64> {
        (&self.basis_inv * DVector::from_column_slice(xi))
            .as_slice()
            .to_vec()
    }

    pub fn eval_normal(&self, u: &[f64]) -> Complex64 {
        eval_sparse(&self.normal_terms, u)
    }

    pub fn eval(&self, xi: &[f64]) -> Complex64 {
        self.eval_normal(&self.to_normal_coordinates(xi))
    }

    /// `R = Re P`.
    pub fn real_part(&self, xi: &[f64]) -> f64 {
        self.eval(xi).re
    }

    /// Value, gradient and Hessian of `Re P` at `xi`.
    pub fn real_jet(&self, xi: &[f64]) -> (f64, DVector<f64>, DMatrix<f64>) {
        let d = self.dim;
        let u = self.to_normal_coordinates(xi);
        let mut val = 0.0;
        let mut g = DVector::zeros(d);
        let mut h = DMatrix::zeros(d, d);
        let pow = |x: f64, e: i64| if e < 0 { 0.0 } else { x.powi(e as i32) };
        for (beta, c) in &self.normal_terms {
            let a = c.re;
            if a == 0.0 {
                continue;
            }
            let e: Vec<i64> = beta.iter().map(|&b| b as i64).collect();
            val += a * (0..d).map(|k| pow(u[k], e[k])).product::<f64>();
            for i in 0..d {
                if e[i] == 0 {
                    continue;
                }
                let gi: f64 = (0..d)
                    .map(|k| {
                        if k == i {
                            e[k] as f64 * pow(u[k], e[k] - 1)
                        } else {
                            pow(u[k], e[k])
                        }
                    })
                    .product();
                g[i] += a * gi;
                for j in 0..d {
                    let hij: f64 = if i == j {
                        (0..d)
                            .map(|k| {
                                if k == i {
                                    (e[k] * (e[k] - 1)) as f64 * pow(u[k], e[k] - 2)
                                } else {
                                    pow(u[k], e[k])
                                }
                            })
                            .product()
                    } else {
                        if e[j] == 0 {
                            continue;
                        }
                        (0..d)
                            .map(|k| {
                                if k == i || k == j {
                                    e[k] as f64 * pow(u[k], e[k] - 1)
                                } else {
                                    pow(u[k], e[k])
                                }
                            })
                            .product()
                    };
                    h[(i, j)] += a * hij;
                }
            }
        }
        let bt = self.basis_inv.transpose();
        (val, &bt * g, &bt * h * &self.basis_inv)
    }

    /// `t^E = A diag(t^{1/(2 m_j)}) A^{-1}`.
    pub fn group_matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(LatconvError::invalid(format!(
                "group parameter must be positive, got {t}"
            )));
        }
        let diag = DMatrix::from_diagonal(&DVector::from_iterator(
            self.dim,
            self.weights.iter().map(|&m| t.powf(1.0 / (2.0 * m as f64))),
        ));
        Ok(&self.basis * diag * &self.basis_inv)
    }

    /// `t^E xi`.
    pub fn group_action(&self, t: f64, xi: &[f64]) -> Result<Vec<f64>> {
        if xi.len() != self.dim {
            return Err(LatconvError::DimensionMismatch {
                expected: self.dim,
                found: xi.len(),
            });
        }
        let m = self.group_matrix(t)?;
        Ok((m * DVector::from_column_slice(xi)).as_slice().to_vec())
    }

    /// Smallest `Re P` over sphere samples and the signed axes.
    pub fn min_real_on_sphere(&self, count: usize, seed: u64) -> f64 {
        sphere_and_axes(self.dim, count, seed)
            .iter()
            .map(|v| self.real_part(v))
            .fold(f64::INFINITY, f64::min)
    }

    /// Tests `t P(xi) = P(t^E xi)` for `t` in `{1/8, ..., 8}` and sampled unit `xi`.
    pub fn is_exponent(&self, e: &DMatrix<f64>, samples: usize) -> (bool, f64) {
        if e.nrows() != self.dim || e.ncols() != self.dim {
            return (false, f64::INFINITY);
        }
        let xs = sphere_samples(self.dim, samples.max(1), DEFAULT_SEED ^ 0x0e);
        let mut worst: f64 = 0.0;
        for k in -3..=3 {
            let t = 2f64.powi(k);
            let g = (e * t.ln()).exp();
            for xi in &xs {
                let lhs = self.eval(xi) * t;
                let y = &g * DVector::from_column_slice(xi);
                let rhs = self.eval(y.as_slice());
                let dev = (lhs - rhs).norm() / lhs.norm().max(f64::MIN_POSITIVE);
                if !dev.is_finite() {
                    return (false, f64::INFINITY);
                }
                worst = worst.max(dev);
            }
        }
        (worst < 1e-8, worst)
    }

    pub fn semi_elliptic_form(&self) -> SemiEllipticForm {
        SemiEllipticForm {
            basis: self.basis.clone(),
            weights: self.weights.clone(),
            coefficients: self.normal.clone(),
        }
    }

    /// Whether `A^T v_j` lies on the `j`-th axis for every `j`; also returns the weights.
    pub fn p_fitted(&self, v: &[Vec<f64>]) -> Result<(bool, Vec<u32>)> {
        if v.len() != self.dim {
            return Err(LatconvError::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        let at = self.basis.transpose();
        let mut ok = true;
        for (j, vj) in v.iter().enumerate() {
            if vj.len() != self.dim {
                return Err(LatconvError::DimensionMismatch {
                    expected: self.dim,
                    found: vj.len(),
                });
            }
            let w = &at * DVector::from_column_slice(vj);
            ok &= w.iter().enumerate().all(|(k, c)| k == j || c.abs() < 1e-9);
        }
        Ok((ok, self.weights.clone()))
    }

    /// Writes `(t, eta)` with `|eta| = 1` and `t^E eta = xi`.
    pub fn polar(&self, xi: &[f64]) -> Result<(f64, Vec<f64>)> {
        let lam = self.exponent_eigenvalues();
        polar_decomposition(&self.basis, &self.basis_inv, &lam, xi)
    }

    /// CSV serialization: a `#` header with `dim`, `weights`, `mu` and the rows of `A`,
    /// then `beta_1..beta_d,re,im` rows in original coordinates.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let w: Vec<String> = self.weights.iter().map(|m| m.to_string()).collect();
        let _ = writeln!(s, "# dim {}", self.dim);
        let _ = writeln!(s, "# weights {}", w.join(","));
        let _ = writeln!(s, "# mu {}/{}", self.mu.numer(), self.mu.denom());
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim).map(|j| fmt_f64(self.basis[(i, j)])).collect();
            let _ = writeln!(s, "# basis {}", row.join(","));
        }
        let mut header: Vec<String> = (1..=self.dim).map(|j| format!("beta_{j}")).collect();
        header.push("re".into());
        header.push("im".into());
        let _ = writeln!(s, "{}", header.join(","));
        for (b, c) in &self.coefficients {
            let idx: Vec<String> = b.iter().map(|e| e.to_string()).collect();
            let _ = writeln!(s, "{},{},{}", idx.join(","), fmt_f64(c.re), fmt_f64(c.im));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let perr = |line: usize, m: &str| LatconvError::Parse {
            line,
            message: m.to_string(),
        };
        let mut weights: Option<Vec<u32>> = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut body = String::new();
        for (k, line) in text.lines().enumerate() {
            let t = line.trim();
            if let Some(rest) = t.strip_prefix('#') {
                let mut it = rest.trim().splitn(2, ' ');
                let key = it.next().unwrap_or("");
                let val = it.next().unwrap_or("").trim();
                match key {
                    "weights" => {
                        weights = Some(
                            val.split(',')
                                .map(|x| x.trim().parse::<u32>())
                                .collect::<std::result::Result<_, _>>()
                                .map_err(|_| perr(k + 1, "bad weights"))?,
                        )
                    }
                    "basis" => rows.push(
                        val.split(',')
                            .map(|x| x.trim().parse::<f64>())
                            .collect::<std::result::Result<_, _>>()
                            .map_err(|_| perr(k + 1, "bad basis row"))?,
                    ),
                    _ => {}
                }
            } else if !t.is_empty() {
                body.push_str(line);
                body.push('\n');
            }
        }
        let weights = weights.ok_or_else(|| perr(0, "missing weights header"))?;
        let d = weights.len();
        if rows.len() != d || rows.iter().any(|r| r.len() != d) {
            return Err(perr(0, "basis header must have d rows of d entries"));
        }
        let basis = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
        let mut rd = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(body.as_bytes());
        let mut orig: BTreeMap<MultiIndex, Complex64> = BTreeMap::new();
        for rec in rd.records() {
            let rec = rec.map_err(crate::format::csv_err)?;
            if rec.len() != d + 2 {
                return Err(perr(0, "coefficient row has the wrong number of fields"));
            }
            let beta: MultiIndex = (0..d)
                .map(|j| rec[j].trim().parse::<u32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| perr(0, "bad multi-index"))?;
            let re: f64 = rec[d]
                .trim()
                .parse()
                .map_err(|_| perr(0, "bad real part"))?;
            let im: f64 = rec[d + 1]
                .trim()
                .parse()
                .map_err(|_| perr(0, "bad imaginary part"))?;
            *orig.entry(beta).or_default() += Complex64::new(re, im);
        }
        Self::from_coefficients(basis, weights, &orig)
    }

    /// Builds the normal form from coefficients given in original coordinates.
    pub fn from_coefficients(
        basis: DMatrix<f64>,
        weights: Vec<u32>,
        coefficients: &BTreeMap<MultiIndex, Complex64>,
    ) -> Result<Self> {
        let d = weights.len();
        let order = coefficients
            .keys()
            .map(|b| degree(b) as usize)
            .max()
            .unwrap_or(0);
        let mb = MonomialBasis::new(d, order);
        let dense = mb.from_map(coefficients).ok_or_else(|| {
            LatconvError::InvalidPolynomial("multi-index of wrong dimension".into())
        })?;
        let rotated = mb.compose_linear(&dense, &basis);
        let scale = rotated
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
            .max(1.0);
        let mut normal = BTreeMap::new();
        for (beta, c) in mb.monomials().iter().zip(&rotated) {
            if c.norm() <= 1e-12 * scale {
                continue;
            }
            if weighted_degree_cmp(beta, &weights) != Ordering::Equal {
                return Err(LatconvError::InvalidPolynomial(format!(
                    "monomial {beta:?} with coefficient {c} is not homogeneous for weights {weights:?}"
                )));
            }
            normal.insert(beta.clone(), *c);
        }
        Self::from_normal_form(basis, weights, normal)
    }
}

/// Solves `t^E eta = xi`, `|eta| = 1`, for `E = A diag(lam) A^{-1}` by bisection in `log t`.
pub fn polar_decomposition(
    a: &DMatrix<f64>,
    a_inv: &DMatrix<f64>,
    lam: &[f64],
    xi: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let d = lam.len();
    let w = a_inv * DVector::from_column_slice(xi);
    if w.norm() == 0.0 {
        return Err(LatconvError::invalid(
            "the origin has no polar decomposition",
        ));
    }
    let apply = |s: f64| -> DVector<f64> {
        let v = DVector::from_iterator(d, (0..d).map(|j| (-lam[j] * s).exp() * w[j]));
        a * v
    };
    let g = |s: f64| apply(s).norm() - 1.0;
    let (mut lo, mut hi) = (-1.0, 1.0);
    let mut guard = 0;
    while g(lo) < 0.0 {
        lo *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(LatconvError::Numerical("polar bracket not found".into()));
        }
    }
    while g(hi) > 0.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(LatconvError::Numerical("polar bracket not found".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * (1.0 + lo.abs()) {
            break;
        }
    }
    let s = 0.5 * (lo + hi);
    let eta = apply(s);
    let n = eta.norm();
    Ok((s.exp(), eta.as_slice().iter().map(|x| x / n).collect()))
}

/// Deterministic orthonormal eigenbasis of a symmetric matrix.
///
/// Column `j` is the eigenvector with the largest `|v_j|` among those not yet assigned
/// (ties go to the larger eigenvalue) and is signed so that `v_j > 0`. Degenerate
/// eigenspaces are spanned by Gram-Schmidt on projected standard basis vectors.
pub fn canonical_eigenbasis(h: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let d = h.nrows();
    let sym = (h + h.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let scale = eig.eigenvalues.amax().max(1.0);
    let mut vecs: Vec<(f64, DVector<f64>)> = Vec::with_capacity(d);
    let mut i = 0;
    while i < d {
        let mut j = i + 1;
        while j < d && (eig.eigenvalues[order[i]] - eig.eigenvalues[order[j]]).abs() <= 1e-9 * scale
        {
            j += 1;
        }
        let cluster: Vec<usize> = order[i..j].to_vec();
        let lam = cluster.iter().map(|&k| eig.eigenvalues[k]).sum::<f64>() / cluster.len() as f64;
        if cluster.len() == 1 {
            vecs.push((lam, eig.eigenvectors.column(cluster[0]).into_owned()));
        } else {
            let mut proj = DMatrix::zeros(d, d);
            for &k in &cluster {
                let v = eig.eigenvectors.column(k);
                proj += v * v.transpose();
            }
            let mut chosen: Vec<DVector<f64>> = Vec::new();
            for e in 0..d {
                if chosen.len() == cluster.len() {
                    break;
                }
                let mut v = proj.column(e).into_owned();
                for c in &chosen {
                    let p = c.dot(&v);
                    v -= c * p;
                }
                let n = v.norm();
                if n > 1e-6 {
                    chosen.push(v / n);
                }
            }
            for v in chosen {
                vecs.push((lam, v));
            }
        }
        i = j;
    }
    let mut a = DMatrix::zeros(d, d);
    let mut lams = vec![0.0; d];
    let mut used = vec![false; d];
    for axis in 0..d {
        let mut best: Option<usize> = None;
        for (k, (lam, v)) in vecs.iter().enumerate() {
            if used[k] {
                continue;
            }
            best = match best {
                None => Some(k),
                Some(b) => {
                    let (lb, vb) = &vecs[b];
                    let (x, y) = (v[axis].abs(), vb[axis].abs());
                    if x > y + 1e-9 || ((x - y).abs() <= 1e-9 && *lam > *lb + 1e-9 * scale) {
                        Some(k)
                    } else {
                        Some(b)
                    }
                }
            };
        }
        let k = best.expect("one vector per axis");
        used[k] = true;
        let (lam, v) = &vecs[k];
        let pivot = if v[axis].abs() > 1e-12 {
            v[axis]
        } else {
            *v.iter().find(|c| c.abs() > 1e-12).unwrap_or(&1.0)
        };
        let v = if pivot < 0.0 { -v } else { v.clone() };
        a.set_column(axis, &v);
        lams[axis] = *lam;
    }
    (a, lams)
}

/// `t^E = exp(log(t) E)` for a general matrix.
pub fn matrix_power(e: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    (e * t.ln()).exp()
}

pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

/// `||t^E||` decreases over `t = 1e-2, 1e-4, 1e-6` and ends below `1/2`.
pub fn contraction_check(e: &DMatrix<f64>) -> bool {
    let norms: Vec<f64> = [1e-2, 1e-4, 1e-6]
        .iter()
        .map(|&t| operator_norm(&matrix_power(e, t)))
        .collect();
    norms.windows(2).all(|w| w[1] < w[0]) && norms[2] < 0.5
}

/// Both matrices must be exponents of `p`; returns whether their traces agree.
pub fn trace_invariance_check(
    p: &HomogeneousPolynomial,
    e1: &DMatrix<f64>,
    e2: &DMatrix<f64>,
) -> Result<bool> {
    for (name, e) in [("first", e1), ("second", e2)] {
        let (ok, dev) = p.is_exponent(e, 200);
        if !ok {
            return Err(LatconvError::HypothesisViolation(format!(
                "{name} matrix is not an exponent (deviation {dev:e})"
            )));
        }
    }
    Ok((e1.trace() - e2.trace()).abs() < 1e-10)
}
