use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_rational::Rational64;

use crate::error::{LatconvError, Result};
use crate::expansion::AnalyzeOptions;
use crate::lattice::{DirectPowers, LatticeFunction, LatticePoint, PowerConfig};
use crate::symbol::{default_grid, principal_arg, SymbolView};

const PROBABILITY_TOL: f64 = 1e-12;
const MAX_DENOMINATOR: i64 = 64;
const SNAP_TOL: f64 = 1e-7;
const IMAGINARY_TOL: f64 = 1e-9;
const ZERO_TOL: f64 = 1e-9;

/// Moments, dimensionality and unit-modulus data of a probability distribution.
#[derive(Clone, Debug)]
pub struct WalkProfile {
    pub dim: usize,
    pub mean: Vec<f64>,
    pub covariance: DMatrix<f64>,
    /// Support not contained in any affine hyperplane.
    pub genuinely_d_dimensional: bool,
    /// Rank of the centered support span.
    pub rank: usize,
    /// Unit-modulus points, each coordinate in `(-pi, pi]`.
    pub omega: Vec<Vec<f64>>,
    /// Arguments of the symbol at `omega`.
    pub phases: Vec<f64>,
    omega_pi: Vec<Vec<Rational64>>,
    phases_pi: Vec<Rational64>,
}

fn ratio_f64(r: &Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn snap(t: f64) -> Result<Rational64> {
    let r = t / PI;
    for q in 1..=MAX_DENOMINATOR {
        let p = (r * q as f64).round();
        if (r - p / q as f64).abs() < SNAP_TOL {
            return Ok(Rational64::new(p as i64, q));
        }
    }
    Err(LatconvError::Numerical(format!(
        "angle {t} is not a rational multiple of pi"
    )))
}

/// Rank of an integer matrix by fraction-free elimination.
fn integer_rank(mut rows: Vec<Vec<i128>>) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    let mut prev = 1i128;
    for c in 0..cols {
        let Some(p) = (rank..rows.len()).find(|&r| rows[r][c] != 0) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank].clone();
        for row in rows.iter_mut().skip(rank + 1) {
            for k in (c + 1)..cols {
                row[k] = (pivot[c] * row[k] - row[c] * pivot[k]) / prev;
            }
            row[c] = 0;
        }
        prev = pivot[c];
        rank += 1;
    }
    rank
}

/// Exact moments and unit-modulus structure of a probability distribution.
pub fn walk_profile(f: &LatticeFunction) -> Result<WalkProfile> {
    if !f.is_probability(PROBABILITY_TOL) {
        return Err(LatconvError::NotProbability(
            "entries must be nonnegative reals summing to 1".into(),
        ));
    }
    let d = f.dim();
    let mut mean = vec![0.0; d];
    for (x, v) in f.iter() {
        for (m, &c) in mean.iter_mut().zip(x) {
            *m += c as f64 * v.re;
        }
    }
    let mut covariance = DMatrix::zeros(d, d);
    for (x, v) in f.iter() {
        for k in 0..d {
            for l in k..d {
                covariance[(k, l)] += (x[k] as f64 - mean[k]) * (x[l] as f64 - mean[l]) * v.re;
            }
        }
    }
    for k in 0..d {
        for l in 0..k {
            covariance[(k, l)] = covariance[(l, k)];
        }
    }
    let base = f.support().next().expect("nonzero probability").clone();
    let rows: Vec<Vec<i128>> = f
        .support()
        .map(|x| x.iter().zip(&base).map(|(a, b)| (a - b) as i128).collect())
        .collect();
    let rank = integer_rank(rows);
    let mut omega_pi = Vec::new();
    let mut phases_pi = Vec::new();
    // a point mass has unit modulus on the whole torus, so the unit-modulus data stays empty
    if f.len() > 1 {
        let found =
            SymbolView::new(f).find_omega(default_grid(d), AnalyzeOptions::default().omega_tol)?;
        for (xi, value) in found.points.iter().zip(&found.values) {
            omega_pi.push(xi.iter().map(|&t| snap(t)).collect::<Result<Vec<_>>>()?);
            phases_pi.push(snap(principal_arg(*value))?);
        }
    }
    let as_f64 = |r: &Rational64| ratio_f64(r) * PI;
    Ok(WalkProfile {
        dim: d,
        mean,
        covariance,
        genuinely_d_dimensional: rank == d,
        rank,
        omega: omega_pi
            .iter()
            .map(|p| p.iter().map(as_f64).collect())
            .collect(),
        phases: phases_pi.iter().map(as_f64).collect(),
        omega_pi,
        phases_pi,
    })
}

/// `(cos(pi r), sin(pi r))`, exact when `2r` is an integer.
fn unit_at(r: Rational64) -> (f64, f64) {
    let two = Rational64::from_integer(2);
    let red = r - two * (r / two).floor();
    match (*red.numer(), *red.denom()) {
        (0, 1) => (1.0, 0.0),
        (1, 1) => (-1.0, 0.0),
        (1, 2) => (0.0, 1.0),
        (3, 2) => (0.0, -1.0),
        _ => {
            let t = ratio_f64(&red) * PI;
            (t.cos(), t.sin())
        }
    }
}

/// `sum over omega of exp(i (n phase - x . xi))`, evaluated in exact rational angles.
pub fn theta(profile: &WalkProfile, n: u64, x: &[i64]) -> Result<f64> {
    if x.len() != profile.dim {
        return Err(LatconvError::DimensionMismatch {
            expected: profile.dim,
            found: x.len(),
        });
    }
    if profile.omega_pi.is_empty() {
        return Err(LatconvError::HypothesisViolation(
            "a point mass has no isolated unit-modulus points".into(),
        ));
    }
    let (mut re, mut im) = (0.0, 0.0);
    for (xi, ph) in profile.omega_pi.iter().zip(&profile.phases_pi) {
        let mut r = *ph * Rational64::from_integer(n as i64);
        for (c, &xc) in xi.iter().zip(x) {
            if *c.numer() != 0 {
                r -= *c * Rational64::from_integer(xc);
            }
        }
        let (c, s) = unit_at(r);
        re += c;
        im += s;
    }
    if im.abs() > IMAGINARY_TOL {
        return Err(LatconvError::Numerical(format!(
            "theta has imaginary residue {im}"
        )));
    }
    Ok(re)
}

/// `sum over omega of cos(n phase - x . xi)` in floating point.
pub fn theta_cosine(profile: &WalkProfile, n: u64, x: &[i64]) -> f64 {
    profile
        .omega
        .iter()
        .zip(&profile.phases)
        .map(|(xi, ph)| {
            let dot: f64 = xi.iter().zip(x).map(|(a, &b)| a * b as f64).sum();
            (n as f64 * ph - dot).cos()
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicityCheck {
    pub holds: bool,
    /// First `(n, x)` with `f^(n)(x) != 0` but `theta(n, x) = 0`.
    pub first_violation: Option<(u64, LatticePoint)>,
}

/// Checks `supp f^(n)` lies inside `supp theta(n, .)` for every `n <= n_max`.
pub fn support_periodicity_check(f: &LatticeFunction, n_max: u64) -> Result<PeriodicityCheck> {
    let profile = walk_profile(f)?;
    let mut seq = DirectPowers::new(f, &PowerConfig::default())?;
    loop {
        let n = seq.exponent();
        let mut violation = None;
        let mut err = None;
        seq.current().for_each(|x, v| {
            if violation.is_some() || err.is_some() || v.norm() == 0.0 {
                return;
            }
            match theta(&profile, n, x) {
                Ok(t) if t.abs() <= ZERO_TOL => violation = Some(x.to_vec()),
                Ok(_) => {}
                Err(e) => err = Some(e),
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        if let Some(x) = violation {
            return Ok(PeriodicityCheck {
                holds: false,
                first_violation: Some((n, x)),
            });
        }
        if n >= n_max {
            return Ok(PeriodicityCheck {
                holds: true,
                first_violation: None,
            });
        }
        seq.advance()?;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::simple_random_walk;

    #[test]
    fn walk_parity() {
        let p = walk_profile(&simple_random_walk(2).unwrap()).unwrap();
        assert_eq!(p.omega.len(), 2);
        assert_eq!(theta(&p, 2, &[1, 1]).unwrap(), 2.0);
        assert_eq!(theta(&p, 1, &[0, 0]).unwrap(), 0.0);
        assert!((theta_cosine(&p, 5, &[2, 1]) - 2.0).abs() < 1e-10);
        assert!((p.covariance[(0, 0)] - 0.5).abs() < 1e-15 && p.covariance[(0, 1)] == 0.0);
        assert!(p.genuinely_d_dimensional);
        assert!(
            support_periodicity_check(&simple_random_walk(2).unwrap(), 16)
                .unwrap()
                .holds
        );
    }

    #[test]
    fn point_mass_is_degenerate() {
        let p = walk_profile(&LatticeFunction::delta(&[2, -1]).unwrap()).unwrap();
        assert!(!p.genuinely_d_dimensional);
        assert_eq!(p.rank, 0);
    }

    #[test]
    fn rejects_signed_input() {
        let f = LatticeFunction::from_real(1, [(vec![0], 1.5), (vec![1], -0.5)]).unwrap();
        assert!(matches!(
            walk_profile(&f),
            Err(LatconvError::NotProbability(_))
        ));
    }
}
