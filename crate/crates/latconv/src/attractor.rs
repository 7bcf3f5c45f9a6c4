//! Attractors `H_P^t(x) = (2 pi)^{-d} int exp(-t P(xi) - i x.xi) dxi` and the local-limit
//! approximation assembled from them.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftDirection;

use crate::error::{LatconvError, Result};
use crate::expansion::{SpectralAnalysis, Verdict};
use crate::fft::{fft_nd, smooth_size};
use crate::homogeneous::HomogeneousPolynomial;
use crate::lattice::{DenseGrid, LatticeBox, LatticeFunction, PowerConfig};
use crate::legendre::ConjugateEvaluator;
use crate::sampling::{sphere_and_axes, DEFAULT_SEED};

/// `t Re P` reaches this level on the boundary of the integration box.
pub const T_CUT: f64 = 46.0;
/// Minimum quadrature nodes per axis.
pub const MIN_NODES: usize = 256;
/// Quadrature nodes per oscillation of `exp(-i x.xi)` in pointwise evaluation.
pub const NODES_PER_OSCILLATION: f64 = 8.0;

const BOX_SAFETY: f64 = 1.05;

/// Half-widths `L_j` of a box outside of which `t Re P >= T_CUT`.
///
/// The sublevel set `{Re P <= s}` is the union of the orbit segments `r^E eta`,
/// `|eta| = 1`, `r <= s / Re P(eta)`; its axis extents are sampled along those segments.
pub fn box_half_widths(p: &HomogeneousPolynomial, t: f64) -> Result<Vec<f64>> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(LatconvError::invalid(format!(
            "time must be positive, got {t}"
        )));
    }
    let d = p.dim();
    let level = T_CUT / t;
    let mut ext = vec![0.0f64; d];
    for eta in sphere_and_axes(d, 400 * d, DEFAULT_SEED ^ 0x3a) {
        let re = p.real_part(&eta);
        if !(re > 0.0) {
            return Err(LatconvError::InvalidPolynomial(
                "Re P is not positive definite".into(),
            ));
        }
        let rmax = level / re;
        for k in 0..40 {
            let r = rmax * 0.7f64.powi(k);
            let v = p.group_action(r, &eta)?;
            for j in 0..d {
                ext[j] = ext[j].max(v[j].abs());
            }
        }
    }
    Ok(ext.into_iter().map(|e| e * BOX_SAFETY).collect())
}

/// Pointwise trapezoid evaluation of `H_P^t(x)` at a real point.
pub fn attractor_eval(p: &HomogeneousPolynomial, t: f64, x: &[f64]) -> Result<Complex64> {
    let d = p.dim();
    if x.len() != d {
        return Err(LatconvError::DimensionMismatch {
            expected: d,
            found: x.len(),
        });
    }
    let half = box_half_widths(p, t)?;
    let counts: Vec<usize> = half
        .iter()
        .zip(x)
        .map(|(l, xj)| {
            let n = (NODES_PER_OSCILLATION * l * xj.abs() / PI).ceil() as usize;
            n.max(MIN_NODES)
        })
        .collect();
    let nodes: Vec<Vec<f64>> = half
        .iter()
        .zip(&counts)
        .map(|(l, &n)| {
            (0..=n)
                .map(|k| -l + 2.0 * l * k as f64 / n as f64)
                .collect()
        })
        .collect();
    let h: Vec<f64> = half
        .iter()
        .zip(&counts)
        .map(|(l, &n)| 2.0 * l / n as f64)
        .collect();
    let phases: Vec<Vec<Complex64>> = nodes
        .iter()
        .zip(x)
        .map(|(axis, xj)| {
            axis.iter()
                .map(|v| Complex64::from_polar(1.0, -xj * v))
                .collect()
        })
        .collect();
    // outer axis in parallel; inner axes summed in a fixed order
    let sizes: Vec<usize> = nodes.iter().map(|a| a.len()).collect();
    let inner: usize = sizes[1..].iter().product();
    let total: Complex64 = (0..sizes[0])
        .into_par_iter()
        .map(|i0| {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut xi = vec![0.0; d];
            xi[0] = nodes[0][i0];
            for flat in 0..inner {
                let mut rem = flat;
                let mut ph = phases[0][i0];
                for j in (1..d).rev() {
                    let k = rem % sizes[j];
                    rem /= sizes[j];
                    xi[j] = nodes[j][k];
                    ph *= phases[j][k];
                }
                let v = -t * p.eval(&xi);
                if v.re > -700.0 {
                    acc += v.exp() * ph;
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    let vol: f64 = h.iter().product();
    Ok(total * vol / (2.0 * PI).powi(d as i32))
}

/// Values of `H_P^t(x - shift)` on a lattice box, with quadrature metadata.
#[derive(Clone, Debug)]
pub struct AttractorGrid {
    pub polynomial: HomogeneousPolynomial,
    pub t: f64,
    pub shift: Vec<f64>,
    pub values: DenseGrid,
    /// Half-widths `L_j` of the integration box.
    pub half_widths: Vec<f64>,
    /// Transform length per axis; the node spacing is `2 pi / counts[j]`.
    pub counts: Vec<usize>,
    /// Distance per axis beyond which `|H_P^t|` is below `exp(-T_CUT)`.
    pub decay_extent: Vec<f64>,
}

/// `H_P^t` on `window` by one transform of the sampled `exp(-t P)`.
pub fn attractor_grid(
    p: &HomogeneousPolynomial,
    t: f64,
    window: &LatticeBox,
) -> Result<AttractorGrid> {
    attractor_grid_shifted(p, t, &vec![0.0; p.dim()], window, &PowerConfig::default())
}

/// Per-axis reach of `{x : t R^#(x / t) <= T_CUT}`, outside of which `H_P^t` is negligible.
pub fn decay_extent(ev: &ConjugateEvaluator, t: f64) -> Result<Vec<f64>> {
    let d = ev.dim();
    // t R^#(x/t) = T_CUT  <=>  x = t (T_CUT/t)^{(I-E)^*} y  with  R^#(y) = 1
    let level = T_CUT / t;
    let mut ext = vec![0.0f64; d];
    for w in sphere_and_axes(d, 32 * d * d, DEFAULT_SEED ^ 0x3b) {
        let v = ev.conjugate(&w)?;
        if !(v > 0.0) {
            return Err(LatconvError::Numerical(
                "conjugate vanished on the unit sphere".into(),
            ));
        }
        let unit = ev.dual_group_action(1.0 / v, &w)?;
        let y = ev.dual_group_action(level, &unit)?;
        for j in 0..d {
            ext[j] = ext[j].max(t * y[j].abs());
        }
    }
    Ok(ext.into_iter().map(|e| 1.25 * e + 2.0).collect())
}

/// `H_P^t(x - shift)` for `x` in `window`.
///
/// Nodes `xi_k = 2 pi k / M_j` cover the integration box; folding the node index modulo
/// `M_j` turns the sum into one length-`M` transform. `M_j` exceeds the window span by the
/// decay extent, so wrapped contributions are negligible.
pub fn attractor_grid_shifted(
    p: &HomogeneousPolynomial,
    t: f64,
    shift: &[f64],
    window: &LatticeBox,
    cfg: &PowerConfig,
) -> Result<AttractorGrid> {
    let d = p.dim();
    if shift.len() != d {
        return Err(LatconvError::DimensionMismatch {
            expected: d,
            found: shift.len(),
        });
    }
    if window.dim() != d {
        return Err(LatconvError::DimensionMismatch {
            expected: d,
            found: window.dim(),
        });
    }
    let half = box_half_widths(p, t)?;
    let ev = ConjugateEvaluator::new(p)?;
    let reach = decay_extent(&ev, t)?;
    let mut counts = Vec::with_capacity(d);
    for j in 0..d {
        let lo = (window.lo[j] as f64).min(shift[j] - reach[j]);
        let hi = (window.hi[j] as f64).max(shift[j] + reach[j]);
        let span = hi - lo + reach[j] + 1.0;
        let resolve = MIN_NODES as f64 * PI / half[j];
        counts.push(smooth_size(span.max(resolve).ceil() as usize));
    }
    let total: usize = counts
        .iter()
        .try_fold(1usize, |a, &m| a.checked_mul(m))
        .ok_or_else(|| LatconvError::Resource("attractor transform size overflows".into()))?;
    let bytes = total.saturating_mul(std::mem::size_of::<Complex64>());
    if bytes > cfg.memory_cap {
        return Err(LatconvError::Resource(format!(
            "attractor transform needs {bytes} bytes, cap is {} bytes",
            cfg.memory_cap
        )));
    }
    let spacing: Vec<f64> = counts.iter().map(|&m| 2.0 * PI / m as f64).collect();
    let kmax: Vec<i64> = half
        .iter()
        .zip(&spacing)
        .map(|(l, h)| (l / h).ceil() as i64)
        .collect();
    let mut buf = vec![Complex64::new(0.0, 0.0); total];
    let mut strides = vec![1usize; d];
    for j in (0..d.saturating_sub(1)).rev() {
        strides[j] = strides[j + 1] * counts[j + 1];
    }
    let weight = spacing.iter().product::<f64>() / (2.0 * PI).powi(d as i32);
    let outer: Vec<i64> = (-kmax[0]..=kmax[0]).collect();
    let inner: usize = kmax[1..].iter().map(|&k| (2 * k + 1) as usize).product();
    // samples are accumulated per outer index in parallel, then folded in a fixed order
    let rows: Vec<Vec<(usize, Complex64)>> = outer
        .par_iter()
        .map(|&k0| {
            let mut out = Vec::with_capacity(inner);
            let mut xi = vec![0.0; d];
            xi[0] = k0 as f64 * spacing[0];
            for flat in 0..inner {
                let mut rem = flat;
                let mut idx = (k0.rem_euclid(counts[0] as i64) as usize) * strides[0];
                for j in (1..d).rev() {
                    let width = (2 * kmax[j] + 1) as usize;
                    let kj = (rem % width) as i64 - kmax[j];
                    rem /= width;
                    xi[j] = kj as f64 * spacing[j];
                    idx += (kj.rem_euclid(counts[j] as i64) as usize) * strides[j];
                }
                let v = -t * p.eval(&xi);
                if v.re < -T_CUT - 30.0 {
                    continue;
                }
                let phase: f64 = xi.iter().zip(shift).map(|(a, b)| a * b).sum();
                out.push((idx, (v + Complex64::new(0.0, phase)).exp() * weight));
            }
            out
        })
        .collect();
    for row in rows {
        for (i, v) in row {
            buf[i] += v;
        }
    }
    fft_nd(&mut buf, &counts, FftDirection::Forward);
    let mut values = DenseGrid::zeros(window.lo.clone(), window.shape());
    let mut k = 0;
    window.for_each_point(|x| {
        let idx: usize = (0..d)
            .map(|j| (x[j].rem_euclid(counts[j] as i64) as usize) * strides[j])
            .sum();
        values.data_mut()[k] = buf[idx];
        k += 1;
    });
    Ok(AttractorGrid {
        polynomial: p.clone(),
        t,
        shift: shift.to_vec(),
        values,
        half_widths: half,
        counts,
        decay_extent: reach,
    })
}

/// Local-limit approximation `sum_q exp(-i x.xi_q) value_q^n H^n_{P_q}(x - n alpha_q)` over the
/// minimal points, on `window`, for the powers of the analysed (unnormalized) input.
pub fn llt_approx_grid(
    analysis: &SpectralAnalysis,
    n: u64,
    window: &LatticeBox,
    cfg: &PowerConfig,
) -> Result<DenseGrid> {
    match analysis.verdict {
        Verdict::PositiveHomogeneousType => {}
        Verdict::Indeterminate => {
            return Err(LatconvError::AnalysisFailed(
                "classification is indeterminate".into(),
            ));
        }
        Verdict::NotPositiveHomogeneousType => {
            return Err(LatconvError::AnalysisFailed(
                "some unit-modulus point is not of positive homogeneous type".into(),
            ));
        }
    }
    if n == 0 {
        return Err(LatconvError::invalid("n must be positive"));
    }
    let d = analysis.dim;
    let nf = n as f64;
    let mut out = DenseGrid::zeros(window.lo.clone(), window.shape());
    let rescale = analysis.scale.powf(-nf);
    for q in analysis.minimal_points() {
        let poly = q.polynomial().expect("classified point");
        let alpha = q.drift().expect("classified point");
        let shift: Vec<f64> = alpha.iter().map(|a| a * nf).collect();
        let h = attractor_grid_shifted(poly, nf, &shift, window, cfg)?;
        let pre = Complex64::from_polar(
            rescale * q.value.norm().powf(nf),
            n_times_arg(q.value.arg(), n),
        );
        let xi = &q.xi;
        let mut k = 0;
        let data = out.data_mut();
        window.for_each_point(|x| {
            let dot: f64 = (0..d).map(|j| x[j] as f64 * xi[j]).sum();
            data[k] += Complex64::from_polar(1.0, -dot) * pre * h.values.data()[k];
            k += 1;
        });
    }
    Ok(out)
}

/// Sparse form of [`llt_approx_grid`].
pub fn llt_approx(
    analysis: &SpectralAnalysis,
    n: u64,
    window: &LatticeBox,
) -> Result<LatticeFunction> {
    Ok(llt_approx_grid(analysis, n, window, &PowerConfig::default())?.to_function())
}

/// `n * theta` reduced modulo `2 pi` without forming the large product first.
fn n_times_arg(theta: f64, n: u64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut acc = 0.0f64;
    let mut base = theta.rem_euclid(two_pi);
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            acc = (acc + base).rem_euclid(two_pi);
        }
        base = (2.0 * base).rem_euclid(two_pi);
        e >>= 1;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use std::collections::BTreeMap;

    fn quadratic_1d() -> HomogeneousPolynomial {
        let m: BTreeMap<Vec<u32>, Complex64> =
            [(vec![2], Complex64::new(1.0, 0.0))].into_iter().collect();
        HomogeneousPolynomial::diagonal(vec![1], m).unwrap()
    }

    #[test]
    fn gaussian_at_origin() {
        let v = attractor_eval(&quadratic_1d(), 1.0, &[0.0]).unwrap();
        assert!((v.re - 0.5 / PI.sqrt()).abs() < 1e-12, "{v}");
        assert!(v.im.abs() < 1e-14);
    }

    #[test]
    fn grid_matches_closed_form() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]);
        let p = HomogeneousPolynomial::quadratic(&c).unwrap();
        let win: LatticeBox = "-10:10,-10:10".parse().unwrap();
        let g = attractor_grid(&p, 1.0, &win).unwrap();
        let ci = c.clone().try_inverse().unwrap();
        let det = c.determinant();
        let mut worst: f64 = 0.0;
        g.values.for_each(|x, v| {
            let xv = DVector::from_vec(x.iter().map(|&a| a as f64).collect());
            let want = (2.0 * PI).powi(-1) / det.sqrt()
                * (-(xv.transpose() * &ci * &xv)[(0, 0)] / 2.0).exp();
            worst = worst.max((v - want).norm());
        });
        assert!(worst < 1e-8, "{worst}");
        let point = attractor_eval(&p, 1.0, &[3.0, -2.0]).unwrap();
        assert!((point - g.values.get(&[3, -2])).norm() < 1e-7);
    }

    #[test]
    fn shifted_grid() {
        let p = quadratic_1d();
        let win: LatticeBox = "-20:20".parse().unwrap();
        let g = attractor_grid_shifted(&p, 3.0, &[2.5], &win, &PowerConfig::default()).unwrap();
        let v = attractor_eval(&p, 3.0, &[1.0 - 2.5]).unwrap();
        assert!((g.values.get(&[1]) - v).norm() < 1e-9);
    }

    #[test]
    fn argument_reduction() {
        assert!((n_times_arg(1.0, 7) - 7f64.rem_euclid(2.0 * PI)).abs() < 1e-12);
        assert!(
            (n_times_arg(PI / 3.0, 6)).abs() < 1e-12
                || (n_times_arg(PI / 3.0, 6) - 2.0 * PI).abs() < 1e-12
        );
    }
}
