//! Dense truncated polynomials in `d` variables, indexed by multi-indices of bounded degree.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type MultiIndex = Vec<u32>;

const C0: Complex64 = Complex64::new(0.0, 0.0);

/// All monomials of total degree `<= order`, sorted by degree then lexicographically.
#[derive(Clone, Debug)]
pub struct MonomialBasis {
    dim: usize,
    order: usize,
    list: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
    /// `raise[i * dim + k]` is the index of `list[i] + e_k` when its degree fits.
    raise: Vec<Option<usize>>,
    /// `(a, b, c)` with `list[a] + list[b] = list[c]`.
    products: Vec<(usize, usize, usize)>,
}

impl MonomialBasis {
    pub fn new(dim: usize, order: usize) -> Self {
        let mut list: Vec<MultiIndex> = vec![vec![0; dim]];
        let mut frontier = list.clone();
        for _ in 0..order {
            let mut next: Vec<MultiIndex> = Vec::new();
            for m in &frontier {
                for k in 0..dim {
                    let mut p = m.clone();
                    p[k] += 1;
                    next.push(p);
                }
            }
            next.sort();
            next.dedup();
            list.extend(next.iter().cloned());
            frontier = next;
        }
        let lookup: HashMap<MultiIndex, usize> = list
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, m)| (m, i))
            .collect();
        let mut raise = vec![None; list.len() * dim];
        for (i, m) in list.iter().enumerate() {
            for k in 0..dim {
                let mut p = m.clone();
                p[k] += 1;
                raise[i * dim + k] = lookup.get(&p).copied();
            }
        }
        let mut products = Vec::new();
        for (a, ma) in list.iter().enumerate() {
            let da: u32 = ma.iter().sum();
            for (b, mb) in list.iter().enumerate() {
                let db: u32 = mb.iter().sum();
                if (da + db) as usize > order {
                    continue;
                }
                let sum: MultiIndex = ma.iter().zip(mb).map(|(x, y)| x + y).collect();
                products.push((a, b, lookup[&sum]));
            }
        }
        MonomialBasis {
            dim,
            order,
            list,
            lookup,
            raise,
            products,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }

    pub fn monomials(&self) -> &[MultiIndex] {
        &self.list
    }

    pub fn index(&self, beta: &[u32]) -> Option<usize> {
        self.lookup.get(beta).copied()
    }

    pub fn zeros(&self) -> Vec<Complex64> {
        vec![C0; self.len()]
    }

    /// Truncated product.
    pub fn mul(&self, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
        let mut out = self.zeros();
        for &(i, j, k) in &self.products {
            let (x, y) = (a[i], b[j]);
            if x != C0 && y != C0 {
                out[k] += x * y;
            }
        }
        out
    }

    /// Monomial values `(c x)^beta / beta!` for every basis element, with `c` a complex factor.
    pub fn scaled_powers(&self, x: &[f64], c: Complex64) -> Vec<Complex64> {
        let mut out = self.zeros();
        out[0] = Complex64::new(1.0, 0.0);
        for (i, m) in self.list.iter().enumerate().skip(1) {
            let k = m.iter().position(|&e| e > 0).expect("nonconstant monomial");
            let mut prev = m.clone();
            prev[k] -= 1;
            let p = self.lookup[&prev];
            out[i] = out[p] * c * x[k] / m[k] as f64;
        }
        out
    }

    /// Coefficients of `q(u) = p(M u)`.
    pub fn compose_linear(&self, p: &[Complex64], m: &DMatrix<f64>) -> Vec<Complex64> {
        let d = self.dim;
        // values[i] holds the expansion of (M u)^list[i].
        let mut values: Vec<Vec<Complex64>> = Vec::with_capacity(self.len());
        let mut one = self.zeros();
        one[0] = Complex64::new(1.0, 0.0);
        values.push(one);
        for mono in self.list.iter().skip(1) {
            let v = mono
                .iter()
                .position(|&e| e > 0)
                .expect("nonconstant monomial");
            let mut prev = mono.clone();
            prev[v] -= 1;
            let src = &values[self.lookup[&prev]];
            let mut out = self.zeros();
            for (i, c) in src.iter().enumerate() {
                if *c == C0 {
                    continue;
                }
                for k in 0..d {
                    let w = m[(v, k)];
                    if w == 0.0 {
                        continue;
                    }
                    if let Some(t) = self.raise[i * d + k] {
                        out[t] += c * w;
                    }
                }
            }
            values.push(out);
        }
        let mut q = self.zeros();
        for (i, c) in p.iter().enumerate() {
            if *c == C0 {
                continue;
            }
            for (t, w) in values[i].iter().enumerate() {
                q[t] += c * w;
            }
        }
        q
    }

    pub fn eval(&self, p: &[Complex64], x: &[f64]) -> Complex64 {
        let pw = self.scaled_powers(x, Complex64::new(1.0, 0.0));
        // scaled_powers divides by beta!; undo it per monomial.
        self.list
            .iter()
            .enumerate()
            .filter(|(i, _)| p[*i] != C0)
            .map(|(i, m)| p[i] * pw[i] * factorial_multi(m))
            .sum()
    }

    pub fn to_map(&self, p: &[Complex64], drop_below: f64) -> BTreeMap<MultiIndex, Complex64> {
        self.list
            .iter()
            .zip(p)
            .filter(|(_, c)| c.norm() > drop_below)
            .map(|(m, c)| (m.clone(), *c))
            .collect()
    }

    pub fn from_map(&self, map: &BTreeMap<MultiIndex, Complex64>) -> Option<Vec<Complex64>> {
        let mut p = self.zeros();
        for (m, c) in map {
            p[self.index(m)?] += c;
        }
        Some(p)
    }
}

pub fn degree(beta: &[u32]) -> u32 {
    beta.iter().sum()
}

pub fn factorial_multi(beta: &[u32]) -> f64 {
    beta.iter()
        .map(|&b| (1..=b).map(|k| k as f64).product::<f64>())
        .product()
}

/// Evaluates a sparse polynomial `sum c_beta x^beta`.
pub fn eval_sparse(terms: &[(MultiIndex, Complex64)], x: &[f64]) -> Complex64 {
    terms
        .iter()
        .map(|(b, c)| {
            c * b
                .iter()
                .zip(x)
                .map(|(&e, &v)| v.powi(e as i32))
                .product::<f64>()
        })
        .sum()
}

/// Weighted degree `|beta : 2m|` compared with one, exactly.
pub fn weighted_degree_cmp(beta: &[u32], weights: &[u32]) -> std::cmp::Ordering {
    let l = weights.iter().fold(1u64, |acc, &m| lcm(acc, 2 * m as u64));
    let s: u64 = beta
        .iter()
        .zip(weights)
        .map(|(&b, &m)| b as u64 * (l / (2 * m as u64)))
        .sum();
    s.cmp(&l)
}

/// `|beta : 2m|` as an exact fraction `(num, den)` in lowest terms.
pub fn weighted_degree(beta: &[u32], weights: &[u32]) -> (u64, u64) {
    let l = weights.iter().fold(1u64, |acc, &m| lcm(acc, 2 * m as u64));
    let s: u64 = beta
        .iter()
        .zip(weights)
        .map(|(&b, &m)| b as u64 * (l / (2 * m as u64)))
        .sum();
    let g = gcd(s, l);
    (s / g, l / g)
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}
