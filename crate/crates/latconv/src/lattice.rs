//! Finitely supported complex functions on `Z^d` and their convolution arithmetic.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rustfft::FftDirection;

use crate::error::{LatconvError, Result};
use crate::fft::{fft_nd, smooth_size};

pub type LatticePoint = Vec<i64>;

/// Entries below this magnitude are treated as exact zeros.
pub const ZERO_CUTOFF: f64 = 1e-300;

/// Default memory cap for transform boxes: 2 GiB.
pub const DEFAULT_MEMORY_CAP: usize = 2 << 30;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

/// A finitely supported function `Z^d -> C` in canonical sparse form.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeFunction {
    dim: usize,
    entries: BTreeMap<LatticePoint, Complex64>,
}

/// How `power` computes `f^(n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PowerMethod {
    /// Iterated sparse convolution; the reference path.
    Direct,
    /// Repeated squaring of one zero-padded transform.
    Fast,
    /// Sampling of the symbol on a torus grid followed by one inverse transform.
    Spectral,
}

impl FromStr for PowerMethod {
    type Err = LatconvError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(PowerMethod::Direct),
            "fast" => Ok(PowerMethod::Fast),
            "spectral" => Ok(PowerMethod::Spectral),
            other => Err(LatconvError::invalid(format!(
                "unknown power method '{other}'"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PowerConfig {
    pub memory_cap: usize,
}

impl Default for PowerConfig {
    fn default() -> Self {
        PowerConfig {
            memory_cap: DEFAULT_MEMORY_CAP,
        }
    }
}

impl LatticeFunction {
    /// The zero function on `Z^dim`.
    pub fn zero(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(LatconvError::invalid("dimension must be positive"));
        }
        Ok(LatticeFunction {
            dim,
            entries: BTreeMap::new(),
        })
    }

    /// Builds a function from `(point, value)` pairs. Repeated points are summed.
    pub fn from_entries<I>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (LatticePoint, Complex64)>,
    {
        let mut f = Self::zero(dim)?;
        for (x, v) in entries {
            if x.len() != dim {
                return Err(LatconvError::DimensionMismatch {
                    expected: dim,
                    found: x.len(),
                });
            }
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(LatconvError::invalid(format!("non-finite value at {x:?}")));
            }
            *f.entries.entry(x).or_insert(C0) += v;
        }
        f.entries.retain(|_, v| v.norm() >= ZERO_CUTOFF);
        Ok(f)
    }

    pub fn from_real<I>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (LatticePoint, f64)>,
    {
        Self::from_entries(
            dim,
            entries
                .into_iter()
                .map(|(x, v)| (x, Complex64::new(v, 0.0))),
        )
    }

    /// The point mass at `y`.
    pub fn delta(y: &[i64]) -> Result<Self> {
        Self::from_entries(y.len(), [(y.to_vec(), C1)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    pub fn get(&self, x: &[i64]) -> Complex64 {
        self.entries.get(x).copied().unwrap_or(C0)
    }

    /// Entries in lexicographic order of their points.
    pub fn iter(&self) -> impl Iterator<Item = (&LatticePoint, &Complex64)> {
        self.entries.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &LatticePoint> {
        self.entries.keys()
    }

    pub fn sum(&self) -> Complex64 {
        self.entries.values().sum()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|(x, v)| (x.clone(), v * c))
            .filter(|(_, v)| v.norm() >= ZERO_CUTOFF)
            .collect();
        LatticeFunction {
            dim: self.dim,
            entries,
        }
    }

    fn check_dim(&self, other: usize) -> Result<()> {
        if self.dim != other {
            return Err(LatconvError::DimensionMismatch {
                expected: self.dim,
                found: other,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.dim)?;
        Self::from_entries(
            self.dim,
            self.iter()
                .chain(other.iter())
                .map(|(x, v)| (x.clone(), *v)),
        )
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-C1))
    }

    /// Componentwise bounds of the support, or `None` for the zero function.
    pub fn bounding_box(&self) -> Option<(Vec<i64>, Vec<i64>)> {
        let mut it = self.entries.keys();
        let first = it.next()?;
        let mut lo = first.clone();
        let mut hi = first.clone();
        for x in it {
            for j in 0..self.dim {
                lo[j] = lo[j].min(x[j]);
                hi[j] = hi[j].max(x[j]);
            }
        }
        Some((lo, hi))
    }

    /// Largest `|x_j|` over the support, per axis.
    pub fn radius(&self) -> Vec<i64> {
        let mut r = vec![0; self.dim];
        for x in self.entries.keys() {
            for j in 0..self.dim {
                r[j] = r[j].max(x[j].abs());
            }
        }
        r
    }

    pub fn norm_l1(&self) -> f64 {
        self.entries.values().map(|v| v.norm()).sum()
    }

    pub fn norm_linf(&self) -> f64 {
        self.entries.values().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// True when all values are real, nonnegative and sum to one within `tol`.
    pub fn is_probability(&self, tol: f64) -> bool {
        !self.is_zero()
            && self.entries.values().all(|v| v.im == 0.0 && v.re >= 0.0)
            && (self.sum().re - 1.0).abs() <= tol
    }

    pub fn translate(&self, y: &[i64]) -> Result<Self> {
        self.check_dim(y.len())?;
        let entries = self
            .entries
            .iter()
            .map(|(x, v)| (x.iter().zip(y).map(|(a, b)| a + b).collect(), *v))
            .collect();
        Ok(LatticeFunction {
            dim: self.dim,
            entries,
        })
    }

    /// `(f ⊗ g)(x, y) = f(x) g(y)` on `Z^(d1 + d2)`.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut entries = BTreeMap::new();
        for (x, a) in &self.entries {
            for (y, b) in &other.entries {
                let v = a * b;
                if v.norm() >= ZERO_CUTOFF {
                    let mut p = x.clone();
                    p.extend_from_slice(y);
                    entries.insert(p, v);
                }
            }
        }
        LatticeFunction {
            dim: self.dim + other.dim,
            entries,
        }
    }

    /// Largest entrywise difference over the union of supports.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut m: f64 = 0.0;
        for (x, v) in &self.entries {
            m = m.max((v - other.get(x)).norm());
        }
        for (x, v) in &other.entries {
            if !self.entries.contains_key(x) {
                m = m.max(v.norm());
            }
        }
        m
    }

    /// `(f * g)(x) = sum_y f(x - y) g(y)`.
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        self.check_dim(other.dim)?;
        if self.is_zero() || other.is_zero() {
            return Self::zero(self.dim);
        }
        let mut acc: BTreeMap<LatticePoint, Complex64> = BTreeMap::new();
        for (y, b) in &other.entries {
            for (x, a) in &self.entries {
                let p: LatticePoint = x.iter().zip(y).map(|(s, t)| s + t).collect();
                *acc.entry(p).or_insert(C0) += a * b;
            }
        }
        acc.retain(|_, v| v.norm() >= ZERO_CUTOFF);
        Ok(LatticeFunction {
            dim: self.dim,
            entries: acc,
        })
    }

    pub fn power(&self, n: u64, method: PowerMethod) -> Result<Self> {
        self.power_with(n, method, &PowerConfig::default())
    }

    pub fn power_with(&self, n: u64, method: PowerMethod, cfg: &PowerConfig) -> Result<Self> {
        Ok(self.power_dense(n, method, cfg)?.to_function())
    }

    /// `f^(n)` on its bounding box.
    pub fn power_dense(&self, n: u64, method: PowerMethod, cfg: &PowerConfig) -> Result<DenseGrid> {
        if n == 0 {
            return Err(LatconvError::invalid("power requires n >= 1"));
        }
        if self.is_zero() {
            return Err(LatconvError::ZeroFunction);
        }
        match method {
            PowerMethod::Direct => {
                let mut seq = DirectPowers::new(self, cfg)?;
                while seq.exponent() < n {
                    seq.advance()?;
                }
                Ok(seq.into_current())
            }
            PowerMethod::Fast => power_fast(self, n, cfg),
            PowerMethod::Spectral => power_spectral(self, n, cfg),
        }
    }

    /// `sum over k in Z^d of f^(n)(x + k * period)` on `window`, computed on a torus of the
    /// given side lengths. Matches `f^(n)` on the window when the mass outside one period is
    /// negligible.
    pub fn power_periodized(
        &self,
        n: u64,
        window: &LatticeBox,
        period: &[usize],
        cfg: &PowerConfig,
    ) -> Result<DenseGrid> {
        if n == 0 {
            return Err(LatconvError::invalid("power requires n >= 1"));
        }
        self.check_dim(window.dim())?;
        self.check_dim(period.len())?;
        if period.contains(&0) {
            return Err(LatconvError::invalid("period lengths must be positive"));
        }
        let total = box_volume(period)?;
        check_memory(total, cfg, "periodized power")?;
        let mut buf = vec![C0; total];
        for (x, v) in self.iter() {
            let mut idx = 0usize;
            for j in 0..x.len() {
                idx = idx * period[j] + x[j].rem_euclid(period[j] as i64) as usize;
            }
            buf[idx] += *v;
        }
        fft_nd(&mut buf, period, FftDirection::Forward);
        for z in buf.iter_mut() {
            *z = cpow(*z, n);
        }
        fft_nd(&mut buf, period, FftDirection::Inverse);
        let norm = 1.0 / total as f64;
        let mut out = DenseGrid::zeros(window.lo.clone(), window.shape());
        let mut k = 0;
        window.for_each_point(|x| {
            let mut idx = 0usize;
            for j in 0..x.len() {
                idx = idx * period[j] + x[j].rem_euclid(period[j] as i64) as usize;
            }
            out.data[k] = buf[idx] * norm;
            k += 1;
        });
        Ok(out)
    }

    /// Dense copy on the bounding box.
    pub fn to_dense(&self) -> Option<DenseGrid> {
        let (lo, hi) = self.bounding_box()?;
        let shape = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| (b - a + 1) as usize)
            .collect();
        let mut g = DenseGrid::zeros(lo, shape);
        for (x, v) in &self.entries {
            let i = g.index(x).expect("point inside bounding box");
            g.data[i] = *v;
        }
        Some(g)
    }
}

/// Values on a rectangular box of lattice points, row-major with the last axis fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseGrid {
    lo: Vec<i64>,
    shape: Vec<usize>,
    data: Vec<Complex64>,
}

impl DenseGrid {
    pub fn zeros(lo: Vec<i64>, shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        DenseGrid {
            lo,
            shape,
            data: vec![C0; n],
        }
    }

    pub fn from_parts(lo: Vec<i64>, shape: Vec<usize>, data: Vec<Complex64>) -> Result<Self> {
        if lo.len() != shape.len() || shape.iter().product::<usize>() != data.len() {
            return Err(LatconvError::invalid("grid parts are inconsistent"));
        }
        Ok(DenseGrid { lo, shape, data })
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn hi(&self) -> Vec<i64> {
        self.lo
            .iter()
            .zip(&self.shape)
            .map(|(a, s)| a + *s as i64 - 1)
            .collect()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn bounds(&self) -> LatticeBox {
        LatticeBox {
            lo: self.lo.clone(),
            hi: self.hi(),
        }
    }

    pub fn index(&self, x: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for j in 0..self.shape.len() {
            let off = x[j] - self.lo[j];
            if off < 0 || off as usize >= self.shape[j] {
                return None;
            }
            idx = idx * self.shape[j] + off as usize;
        }
        Some(idx)
    }

    pub fn point(&self, mut idx: usize) -> LatticePoint {
        let d = self.shape.len();
        let mut p = vec![0; d];
        for j in (0..d).rev() {
            p[j] = self.lo[j] + (idx % self.shape[j]) as i64;
            idx /= self.shape[j];
        }
        p
    }

    pub fn get(&self, x: &[i64]) -> Complex64 {
        self.index(x).map(|i| self.data[i]).unwrap_or(C0)
    }

    /// Visits every point of the box in lexicographic order.
    pub fn for_each(&self, mut f: impl FnMut(&[i64], Complex64)) {
        let d = self.shape.len();
        if self.data.is_empty() {
            return;
        }
        let mut p = self.lo.clone();
        for v in &self.data {
            f(&p, *v);
            for j in (0..d).rev() {
                p[j] += 1;
                if p[j] < self.lo[j] + self.shape[j] as i64 {
                    break;
                }
                p[j] = self.lo[j];
            }
        }
    }

    /// Canonical sparse form, dropping exact zeros only.
    pub fn to_function(&self) -> LatticeFunction {
        let mut entries = BTreeMap::new();
        self.for_each(|x, v| {
            if v.norm() >= ZERO_CUTOFF {
                entries.insert(x.to_vec(), v);
            }
        });
        LatticeFunction {
            dim: self.shape.len(),
            entries,
        }
    }

    pub fn norm_l1(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).sum()
    }

    pub fn norm_linf(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Location and value of the largest modulus; the first maximal point wins ties.
    pub fn argmax_abs(&self) -> (LatticePoint, Complex64) {
        let mut best = 0;
        let mut bv = -1.0;
        for (i, v) in self.data.iter().enumerate() {
            let a = v.norm();
            if a > bv {
                bv = a;
                best = i;
            }
        }
        (self.point(best), self.data[best])
    }

    /// Copy restricted to (or zero-extended onto) `b`.
    pub fn restrict(&self, b: &LatticeBox) -> DenseGrid {
        let mut out = DenseGrid::zeros(b.lo.clone(), b.shape());
        let mut k = 0;
        b.for_each_point(|x| {
            out.data[k] = self.get(x);
            k += 1;
        });
        out
    }
}

/// An axis-aligned box of lattice points `lo <= x <= hi`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeBox {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl LatticeBox {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(LatconvError::invalid(
                "box bounds must have equal positive length",
            ));
        }
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(LatconvError::invalid("box lower bound exceeds upper bound"));
        }
        Ok(LatticeBox { lo, hi })
    }

    /// The cube `[-r, r]^d`.
    pub fn centered(d: usize, r: i64) -> Self {
        LatticeBox {
            lo: vec![-r; d],
            hi: vec![r; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| (b - a + 1) as usize)
            .collect()
    }

    pub fn count(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| a <= v && v <= b)
    }

    pub fn union(&self, other: &LatticeBox) -> LatticeBox {
        LatticeBox {
            lo: self
                .lo
                .iter()
                .zip(&other.lo)
                .map(|(a, b)| *a.min(b))
                .collect(),
            hi: self
                .hi
                .iter()
                .zip(&other.hi)
                .map(|(a, b)| *a.max(b))
                .collect(),
        }
    }

    pub fn for_each_point(&self, mut f: impl FnMut(&[i64])) {
        let d = self.lo.len();
        let mut p = self.lo.clone();
        loop {
            f(&p);
            let mut j = d;
            loop {
                if j == 0 {
                    return;
                }
                j -= 1;
                p[j] += 1;
                if p[j] <= self.hi[j] {
                    break;
                }
                p[j] = self.lo[j];
            }
        }
    }
}

impl FromStr for LatticeBox {
    type Err = LatconvError;

    /// Parses `a:b,c:d,...`.
    fn from_str(s: &str) -> Result<Self> {
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for part in s.split(',') {
            let (a, b) = part.trim().split_once(':').ok_or_else(|| {
                LatconvError::invalid(format!("window component '{part}' is not a:b"))
            })?;
            let a: i64 = a
                .trim()
                .parse()
                .map_err(|_| LatconvError::invalid(format!("bad bound '{a}'")))?;
            let b: i64 = b
                .trim()
                .parse()
                .map_err(|_| LatconvError::invalid(format!("bad bound '{b}'")))?;
            lo.push(a);
            hi.push(b);
        }
        LatticeBox::new(lo, hi)
    }
}

impl fmt::Display for LatticeBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| format!("{a}:{b}"))
            .collect();
        write!(f, "{}", parts.join(","))
    }
}

fn check_memory(points: usize, cfg: &PowerConfig, what: &str) -> Result<()> {
    let bytes = points.saturating_mul(std::mem::size_of::<Complex64>());
    if bytes > cfg.memory_cap {
        return Err(LatconvError::Resource(format!(
            "{what} needs {bytes} bytes, cap is {} bytes",
            cfg.memory_cap
        )));
    }
    Ok(())
}

fn box_volume(shape: &[usize]) -> Result<usize> {
    shape
        .iter()
        .try_fold(1usize, |acc, &s| acc.checked_mul(s))
        .ok_or_else(|| LatconvError::Resource("box size overflows".into()))
}

/// Successive powers `f, f^(2), f^(3), ...` by iterated dense convolution.
///
/// Each step sums contributions in the fixed order of the support of `f`, so results are
/// reproducible and entries that receive no contribution stay exactly zero.
pub struct DirectPowers {
    entries: Vec<(Vec<usize>, Complex64)>,
    f_lo: Vec<i64>,
    f_shape: Vec<usize>,
    current: DenseGrid,
    exponent: u64,
    cfg: PowerConfig,
}

impl DirectPowers {
    pub fn new(f: &LatticeFunction, cfg: &PowerConfig) -> Result<Self> {
        let current = f.to_dense().ok_or(LatconvError::ZeroFunction)?;
        let f_lo = current.lo.clone();
        let f_shape = current.shape.clone();
        let entries = f
            .iter()
            .map(|(x, v)| {
                (
                    x.iter().zip(&f_lo).map(|(a, b)| (a - b) as usize).collect(),
                    *v,
                )
            })
            .collect();
        Ok(DirectPowers {
            entries,
            f_lo,
            f_shape,
            current,
            exponent: 1,
            cfg: *cfg,
        })
    }

    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    pub fn current(&self) -> &DenseGrid {
        &self.current
    }

    pub fn into_current(self) -> DenseGrid {
        self.current
    }

    /// Advances to the next power and returns it.
    pub fn advance(&mut self) -> Result<&DenseGrid> {
        let d = self.f_shape.len();
        let acc = &self.current;
        let lo: Vec<i64> = acc.lo.iter().zip(&self.f_lo).map(|(a, b)| a + b).collect();
        let shape: Vec<usize> = acc
            .shape
            .iter()
            .zip(&self.f_shape)
            .map(|(a, b)| a + b - 1)
            .collect();
        let total = box_volume(&shape)?;
        check_memory(total, &self.cfg, "direct power box")?;
        let mut out = vec![C0; total];

        let row = acc.shape[d - 1];
        let rows = acc.data.len() / row;
        // Strides of the output box.
        let mut ostride = vec![1usize; d];
        for j in (0..d.saturating_sub(1)).rev() {
            ostride[j] = ostride[j + 1] * shape[j + 1];
        }
        // Output base offset of every input row, before the shift by a support point.
        let mut row_base = Vec::with_capacity(rows);
        let mut prefix = vec![0usize; d];
        for _ in 0..rows {
            let mut b = 0;
            for j in 0..d - 1 {
                b += prefix[j] * ostride[j];
            }
            row_base.push(b);
            for j in (0..d - 1).rev() {
                prefix[j] += 1;
                if prefix[j] < acc.shape[j] {
                    break;
                }
                prefix[j] = 0;
            }
        }
        for (off, v) in &self.entries {
            let shift: usize = (0..d).map(|j| off[j] * ostride[j]).sum();
            for (r, base) in row_base.iter().enumerate() {
                let src = &acc.data[r * row..(r + 1) * row];
                let dst = &mut out[base + shift..base + shift + row];
                for (o, s) in dst.iter_mut().zip(src) {
                    *o += v * s;
                }
            }
        }
        self.current = DenseGrid {
            lo,
            shape,
            data: out,
        };
        self.exponent += 1;
        Ok(&self.current)
    }
}

fn cpow(z: Complex64, mut n: u64) -> Complex64 {
    let mut acc = C1;
    let mut base = z;
    while n > 0 {
        if n & 1 == 1 {
            acc *= base;
        }
        n >>= 1;
        if n > 0 {
            base = base * base;
        }
    }
    acc
}

struct TransformBox {
    lo: Vec<i64>,
    out_shape: Vec<usize>,
    size: Vec<usize>,
}

fn transform_box(f: &LatticeFunction, n: u64, cfg: &PowerConfig) -> Result<TransformBox> {
    let (lo, hi) = f.bounding_box().ok_or(LatconvError::ZeroFunction)?;
    let mut out_shape = Vec::with_capacity(lo.len());
    for (a, b) in lo.iter().zip(&hi) {
        let span = (b - a) as u64;
        let s = span
            .checked_mul(n)
            .and_then(|v| v.checked_add(1))
            .filter(|v| *v < (1u64 << 40))
            .ok_or_else(|| LatconvError::Resource("power box too large".into()))?;
        out_shape.push(s as usize);
    }
    let size: Vec<usize> = out_shape.iter().map(|&s| smooth_size(s)).collect();
    check_memory(box_volume(&size)?, cfg, "transform box")?;
    let n_i = n as i64;
    Ok(TransformBox {
        lo: lo.iter().map(|a| a * n_i).collect(),
        out_shape,
        size,
    })
}

fn extract(tb: &TransformBox, buf: &[Complex64], wrap: bool) -> DenseGrid {
    // `wrap` selects indexing by `x mod N`; otherwise by `x - lo`.
    let mut out = DenseGrid::zeros(tb.lo.clone(), tb.out_shape.clone());
    let d = tb.size.len();
    let mut k = 0;
    let bounds = out.bounds();
    bounds.for_each_point(|x| {
        let mut idx = 0usize;
        for j in 0..d {
            let off = if wrap {
                x[j].rem_euclid(tb.size[j] as i64)
            } else {
                x[j] - tb.lo[j]
            };
            idx = idx * tb.size[j] + off as usize;
        }
        out.data[k] = buf[idx];
        k += 1;
    });
    out
}

fn power_fast(f: &LatticeFunction, n: u64, cfg: &PowerConfig) -> Result<DenseGrid> {
    let tb = transform_box(f, n, cfg)?;
    let (flo, _) = f.bounding_box().ok_or(LatconvError::ZeroFunction)?;
    let total = box_volume(&tb.size)?;
    let mut buf = vec![C0; total];
    for (x, v) in f.iter() {
        let mut idx = 0usize;
        for j in 0..x.len() {
            idx = idx * tb.size[j] + (x[j] - flo[j]) as usize;
        }
        buf[idx] = *v;
    }
    fft_nd(&mut buf, &tb.size, FftDirection::Forward);
    for z in buf.iter_mut() {
        *z = cpow(*z, n);
    }
    fft_nd(&mut buf, &tb.size, FftDirection::Inverse);
    let norm = 1.0 / total as f64;
    for z in buf.iter_mut() {
        *z *= norm;
    }
    Ok(extract(&tb, &buf, false))
}

fn power_spectral(f: &LatticeFunction, n: u64, cfg: &PowerConfig) -> Result<DenseGrid> {
    let tb = transform_box(f, n, cfg)?;
    let d = f.dim();
    let total = box_volume(&tb.size)?;
    // Roots of unity per axis: exp(2 pi i r / N).
    let roots: Vec<Vec<Complex64>> = tb
        .size
        .iter()
        .map(|&m| {
            (0..m)
                .map(|r| {
                    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * r as f64 / m as f64)
                })
                .collect()
        })
        .collect();
    let mut buf = vec![C0; total];
    let support: Vec<(&LatticePoint, &Complex64)> = f.iter().collect();
    let grid = LatticeBox {
        lo: vec![0; d],
        hi: tb.size.iter().map(|&m| m as i64 - 1).collect(),
    };
    let mut k = 0;
    grid.for_each_point(|kv| {
        let mut s = C0;
        for (x, v) in &support {
            let mut ph = **v;
            for j in 0..d {
                let m = tb.size[j] as i64;
                ph *= roots[j][(x[j] * kv[j]).rem_euclid(m) as usize];
            }
            s += ph;
        }
        buf[k] = cpow(s, n);
        k += 1;
    });
    fft_nd(&mut buf, &tb.size, FftDirection::Forward);
    let norm = 1.0 / total as f64;
    for z in buf.iter_mut() {
        *z *= norm;
    }
    Ok(extract(&tb, &buf, true))
}
