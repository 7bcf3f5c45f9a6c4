use crate::error::{LatconvError, Result};
use crate::expansion::SpectralAnalysis;
use crate::fft::smooth_size;
use crate::lattice::{
    DenseGrid, DirectPowers, LatticeBox, LatticeFunction, PowerConfig, PowerMethod,
};

/// Direct convolution is used under [`PathPolicy::Auto`] while its multiply count stays below this.
pub const DIRECT_WORK_CAP: f64 = 2e9;

/// Which power path a report uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathPolicy {
    Direct,
    Fast,
    /// Direct when affordable, so that structural zeros stay exact.
    Auto,
}

/// Multiplications needed to reach `f^(n_max)` by iterated direct convolution.
pub fn direct_work(f: &LatticeFunction, n_max: u64) -> f64 {
    let Some((lo, hi)) = f.bounding_box() else {
        return 0.0;
    };
    let widths: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| (b - a) as f64).collect();
    let s = f.len() as f64;
    (1..n_max)
        .map(|k| s * widths.iter().map(|w| k as f64 * w + 1.0).product::<f64>())
        .sum()
}

/// Distance, in units of `n^{lambda_max}`, kept between the window and every aliased copy.
pub const ALIAS_GUARD: f64 = 24.0;

/// `f^(n)` on `window` through a torus large enough that aliased copies of the mass around
/// every `n alpha_q` stay [`ALIAS_GUARD`] scale lengths away from the window.
pub fn windowed_power(
    f: &LatticeFunction,
    analysis: &SpectralAnalysis,
    n: u64,
    window: &LatticeBox,
    cfg: &PowerConfig,
) -> Result<DenseGrid> {
    if analysis.points.iter().any(|p| p.polynomial().is_none()) {
        return Err(LatconvError::AnalysisFailed(
            "windowed powers need every unit-modulus point classified".into(),
        ));
    }
    let nf = n as f64;
    let lambda = analysis
        .points
        .iter()
        .map(|p| p.polynomial().expect("checked").lambda_max())
        .fold(0.0, f64::max);
    let guard = (ALIAS_GUARD * nf.powf(lambda)).ceil() as i64;
    let mut lo = window.lo.clone();
    let mut hi = window.hi.clone();
    for p in &analysis.points {
        for (j, a) in p.drift().expect("checked").iter().enumerate() {
            let c = (a * nf).round() as i64;
            lo[j] = lo[j].min(c - guard);
            hi[j] = hi[j].max(c + guard);
        }
    }
    let period: Vec<usize> = lo
        .iter()
        .zip(&hi)
        .map(|(a, b)| smooth_size((b - a + 1 + guard) as usize))
        .collect();
    f.power_periodized(n, window, &period, cfg)
}

/// `1, 2, 4, ...` up to `n_max`, with `n_max` appended when it is not a power of two.
pub fn dyadic(n_max: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut n = 1;
    while n <= n_max {
        out.push(n);
        n *= 2;
    }
    if out.last() != Some(&n_max) && n_max > 0 {
        out.push(n_max);
    }
    out
}

/// Calls `visit(n, f^(n))` for each `n` in `ns` (sorted, without repeats); returns whether
/// the direct path was used.
pub fn for_each_power(
    f: &LatticeFunction,
    ns: &[u64],
    policy: PathPolicy,
    cfg: &PowerConfig,
    mut visit: impl FnMut(u64, &DenseGrid) -> Result<()>,
) -> Result<bool> {
    if ns.is_empty() {
        return Ok(false);
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) || ns[0] == 0 {
        return Err(LatconvError::invalid(
            "n values must be positive and strictly increasing",
        ));
    }
    let n_max = *ns.last().expect("nonempty");
    let direct = match policy {
        PathPolicy::Direct => true,
        PathPolicy::Fast => false,
        PathPolicy::Auto => direct_work(f, n_max) <= DIRECT_WORK_CAP,
    };
    if direct {
        let mut seq = DirectPowers::new(f, cfg)?;
        for &n in ns {
            while seq.exponent() < n {
                seq.advance()?;
            }
            visit(n, seq.current())?;
        }
    } else {
        for &n in ns {
            let g = f.power_dense(n, PowerMethod::Fast, cfg)?;
            visit(n, &g)?;
        }
    }
    Ok(direct)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_lists() {
        assert_eq!(dyadic(16), vec![1, 2, 4, 8, 16]);
        assert_eq!(dyadic(12), vec![1, 2, 4, 8, 12]);
    }

    #[test]
    fn paths_agree() {
        let f = LatticeFunction::from_real(1, [(vec![-1], 0.25), (vec![0], 0.5), (vec![1], 0.25)])
            .unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        for_each_power(
            &f,
            &[3, 9],
            PathPolicy::Direct,
            &PowerConfig::default(),
            |_, g| {
                a.push(g.to_function());
                Ok(())
            },
        )
        .unwrap();
        for_each_power(
            &f,
            &[3, 9],
            PathPolicy::Fast,
            &PowerConfig::default(),
            |_, g| {
                b.push(g.to_function());
                Ok(())
            },
        )
        .unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!(x.max_abs_diff(y) < 1e-14);
        }
        assert!(direct_work(&f, 10) > 0.0);
    }

    #[test]
    fn windowed_matches_full_power() {
        let f = crate::examples::ex72();
        let a = crate::expansion::analyze(&f).unwrap();
        let window = LatticeBox::new(vec![-10, -40], vec![10, 40]).unwrap();
        let full = f
            .power_dense(200, PowerMethod::Fast, &PowerConfig::default())
            .unwrap()
            .restrict(&window);
        let win = windowed_power(&f, &a, 200, &window, &PowerConfig::default()).unwrap();
        let gap = full
            .data()
            .iter()
            .zip(win.data())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(gap < 1e-12, "{gap}");
    }
}
