//! The Fourier symbol `f^(xi) = sum_x f(x) exp(i x.xi)` as an exact trigonometric polynomial.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftDirection;

use crate::error::{LatconvError, Result};
use crate::fft::fft_nd;
use crate::lattice::LatticeFunction;

/// Seeds for the unit-modulus search must satisfy `|symbol|^2 > 1 - SEED_LEVEL`.
pub const SEED_LEVEL: f64 = 1e-3;
/// Default acceptance tolerance for `|symbol| >= 1 - tol`.
pub const OMEGA_TOL: f64 = 1e-9;
/// Points closer than this on the torus are merged.
pub const DEDUPE_RADIUS: f64 = 1e-6;
const GRADIENT_TOL: f64 = 1e-12;
const MAX_ASCENT_STEPS: usize = 100;
const TRUST_RADIUS: f64 = 0.05;

/// Largest total number of grid points used by default scans.
const GRID_BUDGET: usize = 1 << 21;
/// Largest total number of grid points used while refining the supremum.
const GRID_LIMIT: usize = 1 << 22;

#[derive(Clone, Debug)]
pub struct SymbolView {
    source: LatticeFunction,
    coords: Vec<f64>,
    ints: Vec<i64>,
    values: Vec<Complex64>,
}

/// Second-order jet of `|symbol|^2`.
struct ModulusJet {
    g: f64,
    grad: DVector<f64>,
    hess: DMatrix<f64>,
}

#[derive(Clone, Debug)]
struct Ascent {
    xi: Vec<f64>,
    g: f64,
    converged: bool,
}

/// The unit-modulus set of a normalized symbol.
#[derive(Clone, Debug, Default)]
pub struct OmegaSet {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<Complex64>,
    /// Principal arguments of `values`, in `(-pi, pi]`.
    pub phases: Vec<f64>,
    pub warnings: Vec<String>,
}

impl OmegaSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum VonNeumann {
    Satisfied { max: f64, argmax: Vec<f64> },
    Violated { max: f64, argmax: Vec<f64> },
}

impl VonNeumann {
    pub fn is_satisfied(&self) -> bool {
        matches!(self, VonNeumann::Satisfied { .. })
    }
}

/// Grid resolution per axis used by default scans in dimension `d`.
pub fn default_grid(d: usize) -> usize {
    let mut n = 512usize;
    while n > 8 && n.saturating_pow(d as u32) > GRID_BUDGET {
        n /= 2;
    }
    n
}

/// Reduces an angle to `(-pi, pi]`.
pub fn wrap_angle(t: f64) -> f64 {
    let mut r = t - 2.0 * PI * (t / (2.0 * PI)).round();
    if r <= -PI {
        r += 2.0 * PI;
    }
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Canonical torus representative: coordinates in `(-pi, pi]`, with points within the
/// dedupe radius of `-pi` moved to the `+pi` side.
pub fn canonical_point(xi: &[f64]) -> Vec<f64> {
    xi.iter()
        .map(|&t| {
            let r = wrap_angle(t);
            if r < -PI + DEDUPE_RADIUS {
                r + 2.0 * PI
            } else {
                r
            }
        })
        .collect()
}

pub fn torus_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| wrap_angle(x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

impl SymbolView {
    pub fn new(f: &LatticeFunction) -> Self {
        let mut coords = Vec::with_capacity(f.len() * f.dim());
        let mut ints = Vec::with_capacity(f.len() * f.dim());
        let mut values = Vec::with_capacity(f.len());
        for (x, v) in f.iter() {
            coords.extend(x.iter().map(|&c| c as f64));
            ints.extend_from_slice(x);
            values.push(*v);
        }
        SymbolView {
            source: f.clone(),
            coords,
            ints,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    pub fn source(&self) -> &LatticeFunction {
        &self.source
    }

    fn support(&self) -> impl Iterator<Item = (&[f64], Complex64)> {
        self.coords
            .chunks_exact(self.dim())
            .zip(self.values.iter().copied())
    }

    pub fn evaluate(&self, xi: &[f64]) -> Complex64 {
        self.support()
            .map(|(x, v)| {
                let ph: f64 = x.iter().zip(xi).map(|(a, b)| a * b).sum();
                v * Complex64::from_polar(1.0, ph)
            })
            .sum()
    }

    /// Evaluation at complex arguments `z = xi - i nu`.
    pub fn evaluate_complex(&self, z: &[Complex64]) -> Complex64 {
        let i = Complex64::i();
        self.support()
            .map(|(x, v)| {
                let ph: Complex64 = x.iter().zip(z).map(|(a, b)| b * *a).sum();
                v * (i * ph).exp()
            })
            .sum()
    }

    /// `d^beta symbol (xi) = sum_x (i x)^beta f(x) exp(i x.xi)`.
    pub fn derivative(&self, beta: &[u32], xi: &[f64]) -> Complex64 {
        let i = Complex64::i();
        let order: u32 = beta.iter().sum();
        let ipow = i.powu(order);
        self.support()
            .map(|(x, v)| {
                let mono: f64 = x.iter().zip(beta).map(|(a, &b)| a.powi(b as i32)).product();
                let ph: f64 = x.iter().zip(xi).map(|(a, b)| a * b).sum();
                v * ipow * mono * Complex64::from_polar(1.0, ph)
            })
            .sum()
    }

    /// The moment `sum_x (i x)^beta f(x)`.
    pub fn moment(&self, beta: &[u32]) -> Complex64 {
        self.derivative(beta, &vec![0.0; self.dim()])
    }

    /// Values on the torus grid `xi_k = 2 pi k / n`, `k in [0, n)^d`, row-major.
    pub fn grid_values(&self, n: usize) -> Result<Vec<Complex64>> {
        let d = self.dim();
        let total = n
            .checked_pow(d as u32)
            .filter(|t| *t <= GRID_LIMIT * 4)
            .ok_or_else(|| LatconvError::Resource(format!("symbol grid {n}^{d} too large")))?;
        let mut buf = vec![Complex64::new(0.0, 0.0); total];
        for (x, v) in self.ints.chunks_exact(d).zip(&self.values) {
            let mut idx = 0usize;
            for c in x {
                idx = idx * n + c.rem_euclid(n as i64) as usize;
            }
            buf[idx] += v;
        }
        fft_nd(&mut buf, &vec![n; d], FftDirection::Inverse);
        Ok(buf)
    }

    fn grid_point(&self, mut idx: usize, n: usize) -> Vec<f64> {
        let d = self.dim();
        let mut xi = vec![0.0; d];
        for j in (0..d).rev() {
            let k = idx % n;
            idx /= n;
            xi[j] = wrap_angle(2.0 * PI * k as f64 / n as f64);
        }
        xi
    }

    fn modulus_jet(&self, xi: &[f64]) -> ModulusJet {
        let d = self.dim();
        let i = Complex64::i();
        let mut f = Complex64::new(0.0, 0.0);
        let mut df = vec![Complex64::new(0.0, 0.0); d];
        let mut ddf = vec![Complex64::new(0.0, 0.0); d * d];
        for (x, v) in self.support() {
            let ph: f64 = x.iter().zip(xi).map(|(a, b)| a * b).sum();
            let e = v * Complex64::from_polar(1.0, ph);
            f += e;
            for j in 0..d {
                df[j] += i * x[j] * e;
                for k in 0..d {
                    ddf[j * d + k] -= x[j] * x[k] * e;
                }
            }
        }
        let g = f.norm_sqr();
        let grad = DVector::from_fn(d, |j, _| 2.0 * (f.conj() * df[j]).re);
        let hess = DMatrix::from_fn(d, d, |j, k| {
            2.0 * (df[j].conj() * df[k] + f.conj() * ddf[j * d + k]).re
        });
        ModulusJet { g, grad, hess }
    }

    /// Newton ascent on `|symbol|^2` with a trust radius and backtracking.
    ///
    /// Converges once the gradient norm drops below `1e-12`; a few further steps are taken
    /// while they still increase the objective, which helps at flat maxima.
    fn ascend(&self, start: &[f64]) -> Ascent {
        let d = self.dim();
        let mut xi = start.to_vec();
        let mut jet = self.modulus_jet(&xi);
        let mut converged = false;
        let mut extra = 0;
        for _ in 0..MAX_ASCENT_STEPS {
            if jet.grad.norm() < GRADIENT_TOL {
                converged = true;
                extra += 1;
                if extra > 30 {
                    break;
                }
            }
            let mut step = newton_direction(&jet);
            let len = step.norm();
            if len > TRUST_RADIUS {
                step *= TRUST_RADIUS / len;
            }
            if step.norm() < 1e-16 {
                break;
            }
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..40 {
                let cand: Vec<f64> = (0..d).map(|j| xi[j] + t * step[j]).collect();
                let cj = self.modulus_jet(&cand);
                // Near a flat maximum the objective is constant to rounding; progress is then
                // measured by the gradient.
                let flat = cj.g >= jet.g - 4.0 * f64::EPSILON * jet.g.max(1.0)
                    && cj.grad.norm() < 0.9 * jet.grad.norm();
                if cj.g > jet.g || flat {
                    accepted = Some((cand, cj));
                    break;
                }
                t *= 0.5;
            }
            match accepted {
                Some((cand, cj)) => {
                    xi = cand;
                    jet = cj;
                }
                None => break,
            }
        }
        if jet.grad.norm() < GRADIENT_TOL {
            converged = true;
        }
        Ascent {
            xi: canonical_point(&xi),
            g: jet.g,
            converged,
        }
    }

    /// Grid local maxima of `|symbol|^2` at or above `level`, best first.
    fn local_maxima(&self, grid: &[Complex64], n: usize, level: f64) -> Vec<(usize, f64)> {
        let d = self.dim();
        let vals: Vec<f64> = grid.iter().map(|z| z.norm_sqr()).collect();
        let offsets: Vec<Vec<i64>> = {
            let mut out = vec![vec![]];
            for _ in 0..d {
                out = out
                    .into_iter()
                    .flat_map(|o| {
                        [-1i64, 0, 1].into_iter().map(move |s| {
                            let mut p = o.clone();
                            p.push(s);
                            p
                        })
                    })
                    .collect();
            }
            out.retain(|o| o.iter().any(|&s| s != 0));
            out
        };
        let mut found = Vec::new();
        let mut k = vec![0usize; d];
        for (idx, &v) in vals.iter().enumerate() {
            if v >= level {
                let mut is_max = true;
                for o in &offsets {
                    let mut nb = 0usize;
                    for j in 0..d {
                        let c = (k[j] as i64 + o[j]).rem_euclid(n as i64) as usize;
                        nb = nb * n + c;
                    }
                    let w = vals[nb];
                    if w > v || (w == v && nb < idx) {
                        is_max = false;
                        break;
                    }
                }
                if is_max {
                    found.push((idx, v));
                }
            }
            for j in (0..d).rev() {
                k[j] += 1;
                if k[j] < n {
                    break;
                }
                k[j] = 0;
            }
        }
        found.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        found
    }

    /// Supremum of `|symbol|` over the torus and a point attaining it.
    ///
    /// The grid is doubled until the polished maximum changes by less than `1e-12`.
    pub fn sup_modulus(&self) -> Result<(f64, Vec<f64>)> {
        let d = self.dim();
        let mut n = default_grid(d);
        let mut prev: Option<f64> = None;
        let mut best: (f64, Vec<f64>);
        loop {
            let grid = self.grid_values(n)?;
            let maxima = self.local_maxima(&grid, n, 0.0);
            let top = maxima.first().map(|m| m.1).unwrap_or(0.0);
            let mut round_best = (
                top,
                self.grid_point(maxima.first().map(|m| m.0).unwrap_or(0), n),
            );
            for &(idx, v) in maxima.iter().take(32) {
                if v < 0.5 * top {
                    break;
                }
                let a = self.ascend(&self.grid_point(idx, n));
                if a.g > round_best.0 {
                    round_best = (a.g, a.xi);
                }
            }
            best = (round_best.0.sqrt(), round_best.1);
            let stable = prev.is_some_and(|p| (p - best.0).abs() < 1e-12);
            let next_total = (2 * n).checked_pow(d as u32);
            if stable || next_total.is_none_or(|t| t > GRID_LIMIT) {
                break;
            }
            prev = Some(best.0);
            n *= 2;
        }
        Ok(best)
    }

    pub fn check_von_neumann(&self) -> Result<VonNeumann> {
        let (max, argmax) = self.sup_modulus()?;
        Ok(if max <= 1.0 + 1e-9 {
            VonNeumann::Satisfied { max, argmax }
        } else {
            VonNeumann::Violated { max, argmax }
        })
    }

    /// Locates the unit-modulus set of a normalized symbol.
    pub fn find_omega(&self, grid_n: usize, tol: f64) -> Result<OmegaSet> {
        if grid_n < 4 {
            return Err(LatconvError::invalid(
                "omega grid needs at least 4 points per axis",
            ));
        }
        let grid = self.grid_values(grid_n)?;
        let grid_max = grid.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
        if grid_max.sqrt() > 1.0 + 1e-9 {
            return Err(LatconvError::NotNormalized(grid_max.sqrt()));
        }
        let mut out = OmegaSet::default();
        let mut polished_max = grid_max;
        let mut kept: Vec<Vec<f64>> = Vec::new();
        for (idx, _) in self.local_maxima(&grid, grid_n, 1.0 - SEED_LEVEL) {
            let seed = self.grid_point(idx, grid_n);
            let a = self.ascend(&seed);
            if !a.converged {
                out.warnings.push(format!(
                    "ascent from seed {seed:?} did not converge; seed dropped"
                ));
                continue;
            }
            polished_max = polished_max.max(a.g);
            if a.g.sqrt() >= 1.0 - tol
                && kept
                    .iter()
                    .all(|p| torus_distance(p, &a.xi) > DEDUPE_RADIUS)
            {
                kept.push(a.xi);
            }
        }
        if polished_max.sqrt() > 1.0 + 1e-9 {
            return Err(LatconvError::NotNormalized(polished_max.sqrt()));
        }
        if kept.is_empty() {
            return Err(LatconvError::NotNormalized(polished_max.sqrt()));
        }
        kept.sort_by(|a, b| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let probability = self.source.is_probability(1e-12);
        for xi in kept {
            let v = self.evaluate(&xi);
            let phase = principal_arg(v);
            if probability {
                for (x, _) in self.support() {
                    let ph: f64 = x.iter().zip(&xi).map(|(a, b)| a * b).sum();
                    if (Complex64::from_polar(1.0, ph) - Complex64::from_polar(1.0, phase)).norm()
                        > 1e-9
                    {
                        out.warnings
                            .push(format!("phase at {xi:?} is not constant on the support"));
                        break;
                    }
                }
            }
            out.values.push(v);
            out.phases.push(phase);
            out.points.push(xi);
        }
        Ok(out)
    }
}

fn newton_direction(jet: &ModulusJet) -> DVector<f64> {
    ascent_direction(&jet.hess, &jet.grad)
}

/// Newton direction for maximization with the Hessian eigenvalues reflected and floored,
/// so the step is always an ascent direction.
pub(crate) fn ascent_direction(hess: &DMatrix<f64>, grad: &DVector<f64>) -> DVector<f64> {
    let eig = (-hess.clone()).symmetric_eigen();
    let scale = eig.eigenvalues.amax().max(1e-300);
    let floor = 1e-10 * scale;
    let v = &eig.eigenvectors;
    let mut coords = v.transpose() * grad;
    for (c, l) in coords.iter_mut().zip(eig.eigenvalues.iter()) {
        *c /= l.abs().max(floor);
    }
    v * coords
}

/// Argument in `(-pi, pi]`.
pub fn principal_arg(z: Complex64) -> f64 {
    let a = z.arg();
    if a <= -PI {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Rescales `f` so that `sup |symbol| = 1`; returns the function and the positive multiplier.
pub fn normalize(f: &LatticeFunction) -> Result<(LatticeFunction, f64)> {
    if f.is_zero() {
        return Err(LatconvError::ZeroFunction);
    }
    let (sup, _) = SymbolView::new(f).sup_modulus()?;
    if !(sup > 0.0) {
        return Err(LatconvError::ZeroFunction);
    }
    // Leave the input untouched when it is already normalized to rounding accuracy.
    if (sup - 1.0).abs() <= 8.0 * f64::EPSILON * f.norm_l1().max(1.0) {
        return Ok((f.clone(), 1.0));
    }
    let scale = 1.0 / sup;
    Ok((f.scale(Complex64::new(scale, 0.0)), scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bernoulli() -> LatticeFunction {
        LatticeFunction::from_real(1, [(vec![1], 0.5), (vec![-1], 0.5)]).unwrap()
    }

    #[test]
    fn delta_symbol_is_one() {
        let s = SymbolView::new(&LatticeFunction::delta(&[0, 0]).unwrap());
        assert!((s.evaluate(&[0.3, -1.2]) - 1.0).norm() < 1e-15);
    }

    #[test]
    fn bernoulli_symbol_is_cosine() {
        let s = SymbolView::new(&bernoulli());
        for t in [0.0, 0.4, 2.0, -3.0] {
            assert!((s.evaluate(&[t]) - t.cos()).norm() < 1e-15);
        }
        let z = Complex64::new(0.3, -0.7);
        assert!((s.evaluate_complex(&[z]) - z.cos()).norm() < 1e-14);
    }

    #[test]
    fn derivatives_are_exact() {
        let s = SymbolView::new(&bernoulli());
        // d/dxi cos = -sin, d^2 = -cos
        assert!((s.derivative(&[1], &[0.5]) + 0.5f64.sin()).norm() < 1e-15);
        assert!((s.derivative(&[2], &[0.5]) + 0.5f64.cos()).norm() < 1e-15);
        assert!((s.moment(&[2]) + 1.0).norm() < 1e-15);
    }

    #[test]
    fn grid_matches_pointwise() {
        let f = LatticeFunction::from_entries(
            2,
            [
                (vec![0, 0], Complex64::new(0.3, 0.1)),
                (vec![1, -2], Complex64::new(-0.2, 0.4)),
                (vec![-3, 1], Complex64::new(0.05, 0.0)),
            ],
        )
        .unwrap();
        let s = SymbolView::new(&f);
        let n = 16;
        let g = s.grid_values(n).unwrap();
        for (idx, v) in g.iter().enumerate() {
            let xi = s.grid_point(idx, n);
            assert!((s.evaluate(&xi) - v).norm() < 1e-14);
        }
    }

    #[test]
    fn wrap_and_canonicalize() {
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        let p = canonical_point(&[-PI + 1e-9, 0.5]);
        assert!((p[0] - (PI + 1e-9)).abs() < 1e-12);
        assert!(torus_distance(&[PI - 1e-7], &[-PI + 1e-7]) < 1e-6);
    }

    #[test]
    fn von_neumann() {
        let s = SymbolView::new(&bernoulli());
        assert!(s.check_von_neumann().unwrap().is_satisfied());
        let bad = LatticeFunction::from_real(1, [(vec![0], 1.0), (vec![1], 1.0)]).unwrap();
        match SymbolView::new(&bad).check_von_neumann().unwrap() {
            VonNeumann::Violated { max, argmax } => {
                assert!((max - 2.0).abs() < 1e-12);
                assert!(argmax[0].abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn normalize_scales() {
        let (_, s) = normalize(&bernoulli()).unwrap();
        assert_eq!(s, 1.0);
        let (g, s) = normalize(&bernoulli().scale(Complex64::new(2.0, 0.0))).unwrap();
        assert!((s - 0.5).abs() < 1e-14);
        assert!(g.max_abs_diff(&bernoulli()) < 1e-15);
        assert!(matches!(
            normalize(&LatticeFunction::zero(1).unwrap()),
            Err(LatconvError::ZeroFunction)
        ));
    }

    #[test]
    fn omega_of_bernoulli() {
        let s = SymbolView::new(&bernoulli());
        let om = s.find_omega(512, OMEGA_TOL).unwrap();
        assert_eq!(om.len(), 2);
        assert!(om.points[0][0].abs() < 1e-12);
        assert!((om.points[1][0] - PI).abs() < 1e-12);
        assert!((om.phases[1] - PI).abs() < 1e-12);
    }

    #[test]
    fn omega_rejects_unnormalized() {
        let s = SymbolView::new(&bernoulli().scale(Complex64::new(0.5, 0.0)));
        assert!(matches!(
            s.find_omega(64, OMEGA_TOL),
            Err(LatconvError::NotNormalized(_))
        ));
    }
}
