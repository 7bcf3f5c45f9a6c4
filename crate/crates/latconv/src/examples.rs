//! Built-in example functions, constructed at full double precision.

use num_complex::Complex64;

use crate::error::{LatconvError, Result};
use crate::lattice::LatticeFunction;

/// Names accepted by [`builtin`]; parameterized families show their syntax.
pub const BUILTIN_NAMES: &[&str] = &[
    "intro",
    "ex71",
    "ex72",
    "ex73",
    "ex74",
    "ex75:<m1,..,md>[/<l1,..,ld>]",
    "srw:<d>",
    "phim:<m1,..,md>",
    "unstable1d",
];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Looks up a builtin by name.
pub fn builtin(name: &str) -> Result<LatticeFunction> {
    let (head, arg) = match name.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (name, None),
    };
    match (head, arg) {
        ("intro", None) => Ok(intro()),
        ("ex71", None) => Ok(ex71()),
        ("ex72", None) => Ok(ex72()),
        ("ex73", None) => Ok(ex73()),
        ("ex74", None) => Ok(ex74()),
        ("unstable1d", None) => Ok(unstable1d()),
        ("ex75", Some(a)) => {
            let (m, lam) = match a.split_once('/') {
                Some((m, l)) => (parse_list::<u32>(m)?, Some(parse_list::<f64>(l)?)),
                None => (parse_list::<u32>(a)?, None),
            };
            match lam {
                Some(l) => semi_elliptic_family(&m, &l),
                None => semi_elliptic_family(&m, &default_lambda(&m)),
            }
        }
        ("srw", Some(a)) => {
            let d: usize = a
                .trim()
                .parse()
                .map_err(|_| LatconvError::invalid(format!("bad dimension '{a}'")))?;
            simple_random_walk(d)
        }
        ("phim", Some(a)) => spread_walk(&parse_list::<u32>(a)?),
        _ => Err(LatconvError::invalid(format!(
            "unknown example '{name}'; known: {}",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<T>()
                .map_err(|_| LatconvError::invalid(format!("bad list entry '{t}'")))
        })
        .collect()
}

/// Complex function on `Z^2` with a single unit-modulus point at `(0, pi/3)`.
pub fn intro() -> LatticeFunction {
    let s3 = 3f64.sqrt();
    let k = 1.0 / (22.0 + 2.0 * s3);
    let m = (s3 - 1.0) * k;
    LatticeFunction::from_entries(
        2,
        [
            (vec![0, 0], c(8.0 * k, 0.0)),
            (vec![1, 0], c((5.0 + s3) * k, 0.0)),
            (vec![-1, 0], c((5.0 + s3) * k, 0.0)),
            (vec![2, 0], c(-2.0 * k, 0.0)),
            (vec![-2, 0], c(-2.0 * k, 0.0)),
            (vec![1, -1], c(0.0, m)),
            (vec![-1, -1], c(0.0, m)),
            (vec![1, 1], c(0.0, -m)),
            (vec![-1, 1], c(0.0, -m)),
            (vec![0, 1], c(2.0 * k, -2.0 * k)),
            (vec![0, -1], c(2.0 * k, 2.0 * k)),
        ],
    )
    .expect("valid example")
}

/// Real function on `Z^2` maximized only at the origin with a sextic-quartic principal part.
pub fn ex71() -> LatticeFunction {
    let first: [([i64; 2], f64); 9] = [
        ([0, 0], 326.0),
        ([2, 0], -20.0),
        ([-2, 0], -20.0),
        ([4, 0], 1.0),
        ([-4, 0], 1.0),
        ([0, 1], 64.0),
        ([0, -1], 64.0),
        ([0, 2], -16.0),
        ([0, -2], -16.0),
    ];
    let second: [([i64; 2], f64); 12] = [
        ([1, 0], 76.0),
        ([-1, 0], 52.0),
        ([3, 0], -4.0),
        ([-3, 0], 4.0),
        ([1, 1], -6.0),
        ([-1, 1], 6.0),
        ([1, -1], -6.0),
        ([-1, -1], 6.0),
        ([3, 1], 2.0),
        ([-3, 1], -2.0),
        ([3, -1], 2.0),
        ([-3, -1], -2.0),
    ];
    LatticeFunction::from_real(
        2,
        first
            .iter()
            .chain(&second)
            .map(|(x, v)| (x.to_vec(), v / 512.0)),
    )
    .expect("valid example")
}

/// Complex function on `Z^2` with four unit-modulus points and two opposite drifts.
pub fn ex72() -> LatticeFunction {
    let a = (2.0 + 2f64.sqrt()).sqrt();
    let corner = c(1.0, 1.0) / (4.0 * a);
    let edge = 1.0 / (2f64.sqrt() * a);
    LatticeFunction::from_entries(
        2,
        [
            (vec![-1, 1], corner),
            (vec![-1, -1], corner),
            (vec![1, 1], -corner),
            (vec![1, -1], -corner),
            (vec![0, 1], c(edge, 0.0)),
            (vec![0, -1], c(-edge, 0.0)),
        ],
    )
    .expect("valid example")
}

/// Real function on `Z^2` supported on `{x + y even}`, with a rotated principal part.
pub fn ex73() -> LatticeFunction {
    LatticeFunction::from_real(
        2,
        [
            (vec![0, 0], 3.0 / 8.0),
            (vec![1, 1], 1.0 / 8.0),
            (vec![-1, -1], 1.0 / 8.0),
            (vec![1, -1], 1.0 / 4.0),
            (vec![-1, 1], 1.0 / 4.0),
            (vec![2, -2], -1.0 / 16.0),
            (vec![-2, 2], -1.0 / 16.0),
        ],
    )
    .expect("valid example")
}

/// First tensor factor of [`ex74`].
pub fn ex74_first() -> LatticeFunction {
    LatticeFunction::from_real(
        1,
        [
            (vec![0], 19.0 / 64.0),
            (vec![1], 0.5),
            (vec![-1], 0.5),
            (vec![2], -5.0 / 32.0),
            (vec![-2], -5.0 / 32.0),
            (vec![4], 1.0 / 128.0),
            (vec![-4], 1.0 / 128.0),
        ],
    )
    .expect("valid example")
}

/// Second tensor factor of [`ex74`]: the lazy Bernoulli walk.
pub fn ex74_second() -> LatticeFunction {
    LatticeFunction::from_real(1, [(vec![0], 0.5), (vec![1], 0.25), (vec![-1], 0.25)])
        .expect("valid example")
}

/// Real function on `Z^2` with unit-modulus points of different indices.
pub fn ex74() -> LatticeFunction {
    ex74_first().tensor(&ex74_second())
}

/// The default admissible parameter `lambda_j = 2^{1 - m_j} / (2d)`.
pub fn default_lambda(m: &[u32]) -> Vec<f64> {
    let d = m.len() as f64;
    m.iter()
        .map(|&mj| 2f64.powi(1 - mj as i32) / (2.0 * d))
        .collect()
}

/// `delta_0 - sum_j lambda_j (delta_0 - rho_j)^(m_j)` with `rho_j` the Bernoulli walk on axis `j`.
pub fn semi_elliptic_family(m: &[u32], lambda: &[f64]) -> Result<LatticeFunction> {
    let d = m.len();
    if d == 0 || lambda.len() != d {
        return Err(LatconvError::invalid(
            "m and lambda must have the same positive length",
        ));
    }
    if m.contains(&0) {
        return Err(LatconvError::invalid("orders m_j must be positive"));
    }
    for (&mj, &lj) in m.iter().zip(lambda) {
        let cap = 2f64.powi(1 - mj as i32) / d as f64;
        if !(lj > 0.0 && lj <= cap * (1.0 + 1e-15)) {
            return Err(LatconvError::invalid(format!(
                "lambda {lj} outside (0, {cap}] for order {mj}"
            )));
        }
    }
    let mut entries: Vec<(Vec<i64>, f64)> = vec![(vec![0; d], 1.0)];
    for j in 0..d {
        // coefficients of (1 - cos)^{m_j} = ((-1/2, 1, -1/2) convolved m_j times)
        let mut p = vec![1.0];
        for _ in 0..m[j] {
            let mut q = vec![0.0; p.len() + 2];
            for (i, v) in p.iter().enumerate() {
                q[i] += -0.5 * v;
                q[i + 1] += v;
                q[i + 2] += -0.5 * v;
            }
            p = q;
        }
        let r = (p.len() / 2) as i64;
        for (i, v) in p.iter().enumerate() {
            let mut x = vec![0; d];
            x[j] = i as i64 - r;
            entries.push((x, -lambda[j] * v));
        }
    }
    LatticeFunction::from_real(d, entries)
}

/// Simple random walk on `Z^d`.
pub fn simple_random_walk(d: usize) -> Result<LatticeFunction> {
    spread_walk(&vec![1; d])
}

/// Walk with steps `+-m_j e_j`, each of probability `1/(2d)`.
pub fn spread_walk(m: &[u32]) -> Result<LatticeFunction> {
    let d = m.len();
    if d == 0 || m.contains(&0) {
        return Err(LatconvError::invalid("step lengths must be positive"));
    }
    let p = 1.0 / (2 * d) as f64;
    let mut entries = Vec::new();
    for (j, &mj) in m.iter().enumerate() {
        for s in [1i64, -1] {
            let mut x = vec![0; d];
            x[j] = s * mj as i64;
            entries.push((x, p));
        }
    }
    LatticeFunction::from_real(d, entries)
}

/// One-dimensional function with `sup |symbol| = 1` whose powers grow in `l^1`.
///
/// Its symbol is `1 + (i/2)(cos - 1) - (1/4)(cos - 1)^2`.
pub fn unstable1d() -> LatticeFunction {
    LatticeFunction::from_entries(
        1,
        [
            (vec![0], c(5.0 / 8.0, -0.5)),
            (vec![1], c(0.25, 0.25)),
            (vec![-1], c(0.25, 0.25)),
            (vec![2], c(-1.0 / 16.0, 0.0)),
            (vec![-2], c(-1.0 / 16.0, 0.0)),
        ],
    )
    .expect("valid example")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::SymbolView;

    #[test]
    fn builtin_lookup() {
        for name in [
            "intro",
            "ex71",
            "ex72",
            "ex73",
            "ex74",
            "unstable1d",
            "ex75:3,2",
            "ex75:2/0.25",
            "srw:3",
            "phim:2,1",
        ] {
            assert!(builtin(name).is_ok(), "{name}");
        }
        assert!(builtin("nope").is_err());
        assert!(builtin("ex75:1,1/0.6,0.5").is_err());
        assert!(builtin("ex75:1,1/0.5,0.5").is_ok());
        assert!(builtin("srw:x").is_err());
    }

    #[test]
    fn symbols_at_known_points() {
        let s = SymbolView::new(&intro());
        assert!((s.evaluate(&[0.0, std::f64::consts::FRAC_PI_3]).norm() - 1.0).abs() < 1e-14);
        assert!((SymbolView::new(&ex71()).evaluate(&[0.0, 0.0]) - 1.0).norm() < 1e-15);
        assert!(
            (SymbolView::new(&ex74()).evaluate(&[std::f64::consts::PI, 0.0]) + 1.0).norm() < 1e-15
        );
        let f = semi_elliptic_family(&[3, 2], &[1.0 / 16.0, 1.0 / 8.0]).unwrap();
        let xi = [0.7, -0.4];
        let want = 1.0 - (1.0 - 0.7f64.cos()).powi(3) / 16.0 - (1.0 - 0.4f64.cos()).powi(2) / 8.0;
        assert!((SymbolView::new(&f).evaluate(&xi) - want).norm() < 1e-14);
        let u = SymbolView::new(&unstable1d());
        let t = 1.3f64;
        let k = t.cos() - 1.0;
        let want = c(1.0 - 0.25 * k * k, 0.5 * k);
        assert!((u.evaluate(&[t]) - want).norm() < 1e-15);
    }
}
