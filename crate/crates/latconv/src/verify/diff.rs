use num_complex::Complex64;

use crate::error::{LatconvError, Result};
use crate::expansion::SpectralAnalysis;
use crate::lattice::{DenseGrid, LatticeFunction, PowerConfig, PowerMethod};
use crate::symbol::{torus_distance, SymbolView};

const POINT_MATCH: f64 = 1e-6;
const INTEGRAL_TOL: f64 = 1e-9;

/// `(D_w psi)(x) = psi(x + w) - psi(x)`.
pub fn space_diff(psi: &LatticeFunction, w: &[i64]) -> Result<LatticeFunction> {
    let neg: Vec<i64> = w.iter().map(|c| -c).collect();
    psi.translate(&neg)?.sub(psi)
}

/// `D_{v_1}^{beta_1} ... D_{v_d}^{beta_d} psi`.
pub fn space_diff_multi(
    psi: &LatticeFunction,
    v: &[Vec<i64>],
    beta: &[u32],
) -> Result<LatticeFunction> {
    if v.len() != beta.len() {
        return Err(LatconvError::DimensionMismatch {
            expected: v.len(),
            found: beta.len(),
        });
    }
    let mut out = psi.clone();
    for (w, &b) in v.iter().zip(beta) {
        for _ in 0..b {
            out = space_diff(&out, w)?;
        }
    }
    Ok(out)
}

/// Dense counterpart of [`space_diff`], on the smallest box holding the result.
pub(crate) fn dense_diff(g: &DenseGrid, w: &[i64]) -> Result<DenseGrid> {
    if w.len() != g.dim() {
        return Err(LatconvError::DimensionMismatch {
            expected: g.dim(),
            found: w.len(),
        });
    }
    let hi = g.hi();
    let lo: Vec<i64> = g.lo().iter().zip(w).map(|(&l, s)| l.min(l - s)).collect();
    let top: Vec<i64> = hi.iter().zip(w).map(|(&h, s)| h.max(h - s)).collect();
    let shape: Vec<usize> = lo
        .iter()
        .zip(&top)
        .map(|(a, b)| (b - a + 1) as usize)
        .collect();
    let mut out = DenseGrid::zeros(lo, shape);
    let mut shifted = vec![0i64; w.len()];
    let b = out.bounds();
    let mut k = 0;
    let data = out.data_mut();
    b.for_each_point(|x| {
        for ((s, xi), wi) in shifted.iter_mut().zip(x).zip(w) {
            *s = xi + wi;
        }
        data[k] = g.get(&shifted) - g.get(x);
        k += 1;
    });
    Ok(out)
}

/// `psi - symbol(xi0)^{-l} (delta_{-l alpha} * f^(l)) * psi`, with `alpha` the drift at the
/// unit-modulus point of `analysis` nearest `xi0`.
pub fn time_diff(
    f: &LatticeFunction,
    analysis: &SpectralAnalysis,
    xi0: &[f64],
    l: u64,
    psi: &LatticeFunction,
) -> Result<LatticeFunction> {
    if xi0.len() != f.dim() || psi.dim() != f.dim() {
        return Err(LatconvError::DimensionMismatch {
            expected: f.dim(),
            found: xi0.len().min(psi.dim()),
        });
    }
    if l == 0 {
        return Err(LatconvError::invalid("time step must be positive"));
    }
    let point = analysis
        .points
        .iter()
        .find(|p| torus_distance(&p.xi, xi0) < POINT_MATCH)
        .ok_or_else(|| LatconvError::invalid("xi0 is not a unit-modulus point of the analysis"))?;
    let alpha = point
        .drift()
        .ok_or_else(|| LatconvError::AnalysisFailed("no drift at the requested point".into()))?;
    let mut shift = Vec::with_capacity(alpha.len());
    for a in alpha {
        let s = a * l as f64;
        if (s - s.round()).abs() > INTEGRAL_TOL {
            return Err(LatconvError::HypothesisViolation(format!(
                "l * alpha = {s} is not integral"
            )));
        }
        shift.push(-(s.round() as i64));
    }
    let value = SymbolView::new(f).evaluate(xi0);
    if value.norm() == 0.0 {
        return Err(LatconvError::NotUnitModulus(0.0));
    }
    let factor = Complex64::new(1.0, 0.0) / value.powu(l as u32);
    let kernel = f
        .power_with(l, PowerMethod::Direct, &PowerConfig::default())?
        .translate(&shift)?
        .scale(factor);
    psi.sub(&kernel.convolve(psi)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::simple_random_walk;
    use crate::expansion::analyze;

    #[test]
    fn differences_commute() {
        let psi = LatticeFunction::from_real(
            2,
            [(vec![0, 0], 1.0), (vec![1, 2], -0.5), (vec![3, -1], 2.0)],
        )
        .unwrap();
        let a = space_diff(&space_diff(&psi, &[1, 0]).unwrap(), &[2, -1]).unwrap();
        let b = space_diff(&space_diff(&psi, &[2, -1]).unwrap(), &[1, 0]).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-15);
        let dense = dense_diff(&psi.to_dense().unwrap(), &[2, -1])
            .unwrap()
            .to_function();
        assert!(dense.max_abs_diff(&space_diff(&psi, &[2, -1]).unwrap()) < 1e-15);
    }

    #[test]
    fn unit_step_is_consecutive_power_gap() {
        let f = simple_random_walk(1).unwrap();
        let a = analyze(&f).unwrap();
        let p3 = f.power(3, PowerMethod::Direct).unwrap();
        let p4 = f.power(4, PowerMethod::Direct).unwrap();
        let got = time_diff(&f, &a, &[0.0], 1, &p3).unwrap();
        assert!(got.max_abs_diff(&p3.sub(&p4).unwrap()) < 1e-15);
    }
}
