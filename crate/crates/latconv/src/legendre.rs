//! Legendre-Fenchel transform `R^#(x) = sup_xi { x.xi - R(xi) }` of `R = Re P`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

use nalgebra::{DMatrix, DVector};

use crate::error::{LatconvError, Result};
use crate::homogeneous::{polar_decomposition, HomogeneousPolynomial, SAMPLES_PER_DIM};
use crate::sampling::{sphere_samples, DEFAULT_SEED};
use crate::symbol::ascent_direction;

/// Stationarity threshold for the ascent.
pub const GRADIENT_TOL: f64 = 1e-10;
/// Points per axis of the fallback grid.
pub const GRID_POINTS: usize = 64;
/// Queries are memoized on a grid of this spacing.
pub const CACHE_QUANTUM: f64 = 1e-12;

const MAX_ITERS: usize = 400;

#[derive(Clone, Debug, PartialEq)]
pub struct Maximizer {
    pub value: f64,
    pub argmax: Vec<f64>,
}

/// Evaluates `R^#` for a fixed positive homogeneous polynomial, with a thread-safe memo.
#[derive(Debug)]
pub struct ConjugateEvaluator {
    poly: HomogeneousPolynomial,
    directions: Vec<Vec<f64>>,
    grid_fallback: bool,
    cache: Mutex<HashMap<Vec<i128>, Maximizer>>,
}

impl Clone for ConjugateEvaluator {
    fn clone(&self) -> Self {
        ConjugateEvaluator {
            poly: self.poly.clone(),
            directions: self.directions.clone(),
            grid_fallback: self.grid_fallback,
            cache: Mutex::new(self.cache.lock().expect("cache lock").clone()),
        }
    }
}

impl ConjugateEvaluator {
    pub fn new(p: &HomogeneousPolynomial) -> Result<Self> {
        let d = p.dim();
        let floor = p.min_real_on_sphere(SAMPLES_PER_DIM * d, DEFAULT_SEED ^ 0x1e);
        if !(floor > 0.0) {
            return Err(LatconvError::InvalidPolynomial(format!(
                "Re P is not positive definite (minimum {floor:e} on the unit sphere)"
            )));
        }
        let starts = 8usize.pow(d.min(3) as u32);
        let directions = sphere_samples(d, starts - 1, DEFAULT_SEED ^ 0x1f);
        Ok(ConjugateEvaluator {
            poly: p.clone(),
            directions,
            grid_fallback: true,
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// Disables the grid fallback; the result is then the best of the multi-start ascent.
    pub fn without_grid_fallback(mut self) -> Self {
        self.grid_fallback = false;
        self
    }

    pub fn polynomial(&self) -> &HomogeneousPolynomial {
        &self.poly
    }

    pub fn dim(&self) -> usize {
        self.poly.dim()
    }

    /// `R^#(x)`.
    pub fn conjugate(&self, x: &[f64]) -> Result<f64> {
        Ok(self.maximize(x)?.value)
    }

    /// `R^#(x)` together with a maximizing `xi`.
    pub fn maximize(&self, x: &[f64]) -> Result<Maximizer> {
        let d = self.dim();
        if x.len() != d {
            return Err(LatconvError::DimensionMismatch {
                expected: d,
                found: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(LatconvError::invalid("query point must be finite"));
        }
        let key: Vec<i128> = x
            .iter()
            .map(|v| (v / CACHE_QUANTUM).round() as i128)
            .collect();
        if let Some(m) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(m.clone());
        }
        let m = self.compute(x);
        self.cache
            .lock()
            .expect("cache lock")
            .entry(key)
            .or_insert_with(|| m.clone());
        Ok(m)
    }

    fn objective(&self, x: &[f64], xi: &[f64]) -> f64 {
        x.iter().zip(xi).map(|(a, b)| a * b).sum::<f64>() - self.poly.real_part(xi)
    }

    fn compute(&self, x: &[f64]) -> Maximizer {
        let d = self.dim();
        let zero = Maximizer {
            value: 0.0,
            argmax: vec![0.0; d],
        };
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return zero;
        }
        let xhat: Vec<f64> = x.iter().map(|v| v / norm).collect();
        let base = self.ray_search(x, &xhat).max(1e-8);
        let mut best = zero;
        let consider = |m: Maximizer, best: &mut Maximizer| {
            if m.value > best.value {
                *best = m;
            }
        };
        for dir in std::iter::once(&xhat).chain(&self.directions) {
            let s = self.ray_search(x, dir);
            let s = if s > 0.0 { s } else { base };
            let start: Vec<f64> = dir.iter().map(|v| v * s).collect();
            consider(self.ascend(x, start), &mut best);
        }
        if self.grid_fallback {
            let g = self.grid_maximize_around(x, &best.argmax);
            if g.value > best.value {
                let polished = self.ascend(x, g.argmax.clone());
                consider(g, &mut best);
                consider(polished, &mut best);
            }
        }
        best
    }

    /// Maximizer of `s -> s x.dir - R(s dir)` over `s >= 0`.
    fn ray_search(&self, x: &[f64], dir: &[f64]) -> f64 {
        let c: f64 = x.iter().zip(dir).map(|(a, b)| a * b).sum();
        if c <= 0.0 {
            return 0.0;
        }
        let h = |s: f64| {
            s * c
                - self
                    .poly
                    .real_part(&dir.iter().map(|v| v * s).collect::<Vec<_>>())
        };
        let mut hi = 1.0;
        let mut guard = 0;
        while h(hi) > -hi * c && guard < 200 {
            hi *= 2.0;
            guard += 1;
        }
        let mut guard = 0;
        while h(hi / 2.0) <= -hi * c / 2.0 && hi > 1e-12 && guard < 200 {
            hi /= 2.0;
            guard += 1;
        }
        let k = 64;
        let (mut arg, mut val) = (0.0, 0.0);
        for i in 1..=k {
            let s = hi * i as f64 / k as f64;
            let v = h(s);
            if v > val {
                val = v;
                arg = s;
            }
        }
        // golden section on the bracketing cell
        let step = hi / k as f64;
        let (mut a, mut b) = ((arg - step).max(0.0), arg + step);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let m1 = b - g * (b - a);
            let m2 = a + g * (b - a);
            if h(m1) < h(m2) {
                a = m1;
            } else {
                b = m2;
            }
        }
        0.5 * (a + b)
    }

    /// Modified Newton ascent with Armijo backtracking.
    fn ascend(&self, x: &[f64], start: Vec<f64>) -> Maximizer {
        let d = self.dim();
        let xv = DVector::from_column_slice(x);
        let mut xi = start;
        let mut val = self.objective(x, &xi);
        for _ in 0..MAX_ITERS {
            let (_, grad_r, hess_r) = self.poly.real_jet(&xi);
            let grad = &xv - grad_r;
            if grad.norm() < GRADIENT_TOL {
                break;
            }
            let mut p = ascent_direction(&(-hess_r), &grad);
            if !p.iter().all(|v| v.is_finite()) || p.dot(&grad) <= 0.0 {
                p = grad.clone();
            }
            let slope = p.dot(&grad);
            let mut step = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let cand: Vec<f64> = (0..d).map(|i| xi[i] + step * p[i]).collect();
                let cv = self.objective(x, &cand);
                if cv >= val + 1e-4 * step * slope {
                    xi = cand;
                    val = cv;
                    moved = true;
                    break;
                }
                // at rounding level, accept steps that reduce the gradient without losing value
                if cv >= val - 4.0 * f64::EPSILON * val.abs().max(1.0) {
                    let (_, gc, _) = self.poly.real_jet(&cand);
                    if (&xv - gc).norm() < 0.5 * grad.norm() {
                        xi = cand;
                        val = cv.max(val);
                        moved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        Maximizer {
            value: val.max(0.0),
            argmax: xi,
        }
    }

    /// Best value on a `GRID_POINTS^d` grid over a box certified to contain the maximizer,
    /// refined once around the best cell.
    pub fn grid_maximize(&self, x: &[f64]) -> Result<Maximizer> {
        let d = self.dim();
        if x.len() != d {
            return Err(LatconvError::DimensionMismatch {
                expected: d,
                found: x.len(),
            });
        }
        Ok(self.grid_maximize_around(x, &vec![0.0; d]))
    }

    fn grid_maximize_around(&self, x: &[f64], hint: &[f64]) -> Maximizer {
        let d = self.dim();
        let hint_norm = hint.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut r = (1.5 * hint_norm).max(1.0);
        for _ in 0..200 {
            if self.boundary_certified(x, r) {
                break;
            }
            r *= 2.0;
        }
        let h = 2.0 * r / (GRID_POINTS - 1) as f64;
        let coarse = self.grid_pass(x, &vec![0.0; d], r, GRID_POINTS);
        let fine = self.grid_pass(x, &coarse.argmax, h, GRID_POINTS);
        let zero = Maximizer {
            value: 0.0,
            argmax: vec![0.0; d],
        };
        [coarse, fine]
            .into_iter()
            .fold(zero, |b, m| if m.value > b.value { m } else { b })
    }

    /// Whether `R(xi) > x.xi` at every boundary node of the grid on `[-r, r]^d`.
    fn boundary_certified(&self, x: &[f64], r: f64) -> bool {
        let d = self.dim();
        let n = GRID_POINTS;
        let mut ok = true;
        for_each_node(d, n, |idx| {
            if !ok || !idx.iter().any(|&i| i == 0 || i == n - 1) {
                return;
            }
            let xi: Vec<f64> = idx
                .iter()
                .map(|&i| -r + 2.0 * r * i as f64 / (n - 1) as f64)
                .collect();
            if self.objective(x, &xi) >= 0.0 {
                ok = false;
            }
        });
        ok
    }

    fn grid_pass(&self, x: &[f64], center: &[f64], half: f64, n: usize) -> Maximizer {
        let d = self.dim();
        let mut best = Maximizer {
            value: f64::NEG_INFINITY,
            argmax: center.to_vec(),
        };
        for_each_node(d, n, |idx| {
            let xi: Vec<f64> = idx
                .iter()
                .zip(center)
                .map(|(&i, c)| c - half + 2.0 * half * i as f64 / (n - 1) as f64)
                .collect();
            let v = self.objective(x, &xi);
            if v > best.value {
                best = Maximizer {
                    value: v,
                    argmax: xi,
                };
            }
        });
        best
    }

    /// `(I - E)^*` for the stored exponent `E`.
    pub fn dual_exponent(&self) -> DMatrix<f64> {
        let d = self.dim();
        (DMatrix::identity(d, d) - self.poly.exponent()).transpose()
    }

    /// `t^{(I - E)^*} x`.
    pub fn dual_group_action(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(LatconvError::invalid(format!(
                "group parameter must be positive, got {t}"
            )));
        }
        let (b, b_inv, lam) = self.dual_frame();
        let y = &b_inv * DVector::from_column_slice(x);
        let scaled =
            DVector::from_iterator(y.len(), y.iter().zip(&lam).map(|(v, l)| v * t.powf(*l)));
        Ok((b * scaled).as_slice().to_vec())
    }

    /// `(B, B^{-1}, eigenvalues)` with `(I - E)^* = B diag(eigenvalues) B^{-1}`.
    fn dual_frame(&self) -> (DMatrix<f64>, DMatrix<f64>, Vec<f64>) {
        let a = self.poly.basis();
        let b = self.poly.basis_inverse().transpose();
        let lam = self
            .poly
            .weights()
            .iter()
            .map(|&m| 1.0 - 1.0 / (2.0 * m as f64))
            .collect();
        (b, a.transpose(), lam)
    }

    /// `R^#(x) / |z|_m` where `z = A^T x` are the coordinates dual to the normal form.
    pub fn compare(&self, z: &[f64]) -> Result<f64> {
        let d = self.dim();
        if z.len() != d {
            return Err(LatconvError::DimensionMismatch {
                expected: d,
                found: z.len(),
            });
        }
        let x = (self.poly.basis_inverse().transpose() * DVector::from_column_slice(z))
            .as_slice()
            .to_vec();
        let denom = mixed_norm(z, self.poly.weights());
        if denom == 0.0 {
            return Err(LatconvError::invalid(
                "comparison is undefined at the origin",
            ));
        }
        Ok(self.conjugate(&x)? / denom)
    }

    /// Fits `M = sup(|x| - R^#(x))` and `M' = sup(R^#(x) / N_E(x))` over shells up to
    /// `radius`, then again up to `2 radius`.
    pub fn bounds_check(&self, radius: f64, per_shell: usize) -> Result<BoundsCheck> {
        if !(radius > 0.0) {
            return Err(LatconvError::invalid("sample radius must be positive"));
        }
        let fit = |r: f64| -> Result<(f64, f64)> {
            let mut lower = f64::NEG_INFINITY;
            let mut upper: f64 = 0.0;
            let dirs = sphere_samples(self.dim(), per_shell.max(1), DEFAULT_SEED ^ 0x2b);
            let mut rho = r;
            while rho >= r * 1e-3 {
                for w in &dirs {
                    let x: Vec<f64> = w.iter().map(|v| v * rho).collect();
                    let v = self.conjugate(&x)?;
                    if v < -1e-12 {
                        return Err(LatconvError::Numerical(format!(
                            "negative conjugate value {v:e}"
                        )));
                    }
                    lower = lower.max(rho - v);
                    upper = upper.max(v / self.norm_envelope(&x));
                }
                rho /= 2.0;
            }
            Ok((lower, upper))
        };
        let (m1, u1) = fit(radius)?;
        let (m2, u2) = fit(2.0 * radius)?;
        let ratio = |a: f64, b: f64| {
            if a.min(b) > 0.0 {
                a.max(b) / a.min(b)
            } else {
                f64::INFINITY
            }
        };
        let stable = m1.is_finite()
            && u1.is_finite()
            && (m2 - m1).abs() <= 0.5 * m1.abs().max(1e-12)
            && ratio(u1, u2) <= 1.5;
        Ok(BoundsCheck {
            lower: m2.max(m1),
            upper: u2.max(u1),
            stable,
            radius,
        })
    }

    /// `N_E(x) = |x|^{1/(1 - lambda)}` with `lambda` the largest exponent eigenvalue when
    /// `|x| >= 1` and the smallest otherwise.
    pub fn norm_envelope(&self, x: &[f64]) -> f64 {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let lam = if r >= 1.0 {
            self.poly.lambda_max()
        } else {
            self.poly.lambda_min()
        };
        r.powf(1.0 / (1.0 - lam))
    }
}

/// Result of [`ConjugateEvaluator::bounds_check`].
#[derive(Clone, Debug)]
pub struct BoundsCheck {
    /// Smallest `M` with `|x| - M <= R^#(x)` on the samples.
    pub lower: f64,
    /// Smallest `M'` with `R^#(x) <= M' N_E(x)` on the samples.
    pub upper: f64,
    pub stable: bool,
    pub radius: f64,
}

/// `|z|_m = sum_j |z_j|^{2 m_j / (2 m_j - 1)}`.
pub fn mixed_norm(z: &[f64], weights: &[u32]) -> f64 {
    z.iter()
        .zip(weights)
        .map(|(v, &m)| {
            let m = m as f64;
            v.abs().powf(2.0 * m / (2.0 * m - 1.0))
        })
        .sum()
}

/// `C_m = (2m)^{-1/(2m-1)} - (2m)^{-2m/(2m-1)}`, so that `|xi|^{2m}` has conjugate `C_m |x|^{2m/(2m-1)}`.
pub fn power_conjugate_constant(m: u32) -> f64 {
    let k = 2.0 * m as f64;
    k.powf(-1.0 / (k - 1.0)) - k.powf(-k / (k - 1.0))
}

fn for_each_node(d: usize, n: usize, mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; d];
    loop {
        f(&idx);
        let mut j = d;
        loop {
            if j == 0 {
                return;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < n {
                break;
            }
            idx[j] = 0;
        }
    }
}

/// `R^#` tabulated on the unit sphere and extended by `t R^#(y) = R^#(t^{(I-E)^*} y)`.
///
/// Supported for `d <= 3`; values between nodes are interpolated linearly in the angles.
#[derive(Clone, Debug)]
pub struct ConjugateTable {
    b: DMatrix<f64>,
    b_inv: DMatrix<f64>,
    lam: Vec<f64>,
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl ConjugateTable {
    /// Builds a table with `resolution` azimuthal nodes (half as many polar nodes in 3-d).
    pub fn new(ev: &ConjugateEvaluator, resolution: usize) -> Result<Self> {
        let d = ev.dim();
        let (b, b_inv, lam) = ev.dual_frame();
        let resolution = resolution.max(8);
        let (shape, nodes): (Vec<usize>, Vec<Vec<f64>>) = match d {
            1 => (vec![2], vec![vec![-1.0], vec![1.0]]),
            2 => (
                vec![resolution],
                (0..resolution)
                    .map(|k| {
                        let a = 2.0 * PI * k as f64 / resolution as f64;
                        vec![a.cos(), a.sin()]
                    })
                    .collect(),
            ),
            3 => {
                let nt = resolution / 2 + 1;
                let mut pts = Vec::with_capacity(nt * resolution);
                for i in 0..nt {
                    let th = PI * i as f64 / (nt - 1) as f64;
                    for k in 0..resolution {
                        let ph = 2.0 * PI * k as f64 / resolution as f64;
                        pts.push(vec![th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]);
                    }
                }
                (vec![nt, resolution], pts)
            }
            _ => {
                return Err(LatconvError::invalid(
                    "conjugate tables support dimensions 1 to 3",
                ))
            }
        };
        let values = nodes
            .iter()
            .map(|y| ev.conjugate(y))
            .collect::<Result<Vec<_>>>()?;
        Ok(ConjugateTable {
            b,
            b_inv,
            lam,
            shape,
            values,
        })
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.lam.len() {
            return Err(LatconvError::DimensionMismatch {
                expected: self.lam.len(),
                found: x.len(),
            });
        }
        if x.iter().all(|v| *v == 0.0) {
            return Ok(0.0);
        }
        let (t, y) = polar_decomposition(&self.b, &self.b_inv, &self.lam, x)?;
        Ok(t * self.on_sphere(&y))
    }

    fn on_sphere(&self, y: &[f64]) -> f64 {
        match y.len() {
            1 => self.values[if y[0] < 0.0 { 0 } else { 1 }],
            2 => {
                let n = self.shape[0];
                let a = y[1].atan2(y[0]).rem_euclid(2.0 * PI) / (2.0 * PI) * n as f64;
                let i = (a.floor() as usize) % n;
                let f = a - a.floor();
                self.values[i] * (1.0 - f) + self.values[(i + 1) % n] * f
            }
            _ => {
                let (nt, np) = (self.shape[0], self.shape[1]);
                let th = y[2].clamp(-1.0, 1.0).acos() / PI * (nt - 1) as f64;
                let ph = y[1].atan2(y[0]).rem_euclid(2.0 * PI) / (2.0 * PI) * np as f64;
                let i = (th.floor() as usize).min(nt - 2);
                let fi = th - i as f64;
                let k = (ph.floor() as usize) % np;
                let fk = ph - ph.floor();
                let at = |i: usize, k: usize| self.values[i * np + k % np];
                (1.0 - fi) * ((1.0 - fk) * at(i, k) + fk * at(i, k + 1))
                    + fi * ((1.0 - fk) * at(i + 1, k) + fk * at(i + 1, k + 1))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use std::collections::BTreeMap;

    fn diag(weights: Vec<u32>, terms: &[(&[u32], f64)]) -> HomogeneousPolynomial {
        let map: BTreeMap<Vec<u32>, Complex64> = terms
            .iter()
            .map(|(b, c)| (b.to_vec(), Complex64::new(*c, 0.0)))
            .collect();
        HomogeneousPolynomial::diagonal(weights, map).unwrap()
    }

    #[test]
    fn quadratic_in_one_dimension() {
        let ev = ConjugateEvaluator::new(&diag(vec![1], &[(&[2], 1.0)])).unwrap();
        assert!((ev.conjugate(&[1.0]).unwrap() - 0.25).abs() < 1e-12);
        assert!((ev.conjugate(&[-3.0]).unwrap() - 2.25).abs() < 1e-12);
        assert_eq!(ev.conjugate(&[0.0]).unwrap(), 0.0);
        assert!((power_conjugate_constant(1) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn separable_sextic_quartic() {
        // R = xi^6 + eta^4 has conjugate C_3 |x|^{6/5} + C_2 |y|^{4/3}
        let ev =
            ConjugateEvaluator::new(&diag(vec![3, 2], &[(&[6, 0], 1.0), (&[0, 4], 1.0)])).unwrap();
        for x in [[1.0f64, 0.0], [0.3, -2.0], [-5.0, 0.7]] {
            let want = power_conjugate_constant(3) * x[0].abs().powf(1.2)
                + power_conjugate_constant(2) * x[1].abs().powf(4.0 / 3.0);
            let got = ev.conjugate(&x).unwrap();
            assert!(
                (got - want).abs() < 1e-9 * want.max(1.0),
                "{x:?}: {got} vs {want}"
            );
            assert!(ev.grid_maximize(&x).unwrap().value <= got + 1e-12);
        }
    }

    #[test]
    fn homogeneity_and_table() {
        let ev = ConjugateEvaluator::new(&diag(
            vec![2, 1],
            &[(&[4, 0], 1.0), (&[2, 1], 0.5), (&[0, 2], 2.0)],
        ))
        .unwrap();
        let x = [0.8, -0.3];
        let base = ev.conjugate(&x).unwrap();
        for t in [0.25, 2.0, 9.0] {
            let y = ev.dual_group_action(t, &x).unwrap();
            let v = ev.conjugate(&y).unwrap();
            assert!((v - t * base).abs() < 1e-8 * t * base, "{t}");
        }
        let table = ConjugateTable::new(&ev, 2048).unwrap();
        for x in [[0.8, -0.3], [-4.0, 2.0], [0.01, 0.02]] {
            let want = ev.conjugate(&x).unwrap();
            assert!(
                (table.value(&x).unwrap() - want).abs() < 1e-4 * want,
                "{x:?}"
            );
        }
    }

    #[test]
    fn bounds_are_finite() {
        let ev = ConjugateEvaluator::new(&diag(vec![1], &[(&[2], 1.0)])).unwrap();
        let b = ev.bounds_check(8.0, 2).unwrap();
        // |x| - x^2/4 peaks at x = 2 with value 1
        assert!((b.lower - 1.0).abs() < 1e-3, "{b:?}");
        assert!(b.stable);
        assert!(b.upper.is_finite() && b.upper > 0.0);
    }
}
