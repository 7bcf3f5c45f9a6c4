//! Multidimensional transforms on row-major complex boxes (last axis fastest).

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

/// Smallest integer `>= n` whose only prime factors are 2, 3, 5 and 7.
pub fn smooth_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5, 7] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// In-place unnormalized transform along every axis.
///
/// `Forward` uses the kernel `exp(-2 pi i jk/N)`, `Inverse` uses `exp(+2 pi i jk/N)`.
pub fn fft_nd(data: &mut [Complex64], shape: &[usize], direction: FftDirection) {
    let total: usize = shape.iter().product();
    assert_eq!(total, data.len(), "buffer does not match shape");
    if total == 0 {
        return;
    }
    let mut planner = FftPlanner::<f64>::new();
    let d = shape.len();
    let mut stride = 1usize;
    for axis in (0..d).rev() {
        let len = shape[axis];
        if len > 1 {
            let fft = planner.plan_fft(len, direction);
            let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
            if stride == 1 {
                for line in data.chunks_exact_mut(len) {
                    fft.process_with_scratch(line, &mut scratch);
                }
            } else {
                let block = len * stride;
                let mut line = vec![Complex64::new(0.0, 0.0); len];
                for outer in (0..total).step_by(block) {
                    for inner in 0..stride {
                        let base = outer + inner;
                        for (k, v) in line.iter_mut().enumerate() {
                            *v = data[base + k * stride];
                        }
                        fft.process_with_scratch(&mut line, &mut scratch);
                        for (k, v) in line.iter().enumerate() {
                            data[base + k * stride] = *v;
                        }
                    }
                }
            }
        }
        stride *= len;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_size(1), 1);
        assert_eq!(smooth_size(11), 12);
        assert_eq!(smooth_size(257), 270);
        assert_eq!(smooth_size(1025), 1029);
    }

    #[test]
    fn round_trip_2d() {
        let shape = [6, 10];
        let orig: Vec<Complex64> = (0..60)
            .map(|k| Complex64::new((k as f64).sin(), (k as f64 * 0.3).cos()))
            .collect();
        let mut buf = orig.clone();
        fft_nd(&mut buf, &shape, FftDirection::Forward);
        fft_nd(&mut buf, &shape, FftDirection::Inverse);
        for (a, b) in orig.iter().zip(&buf) {
            assert!((a - b / 60.0).norm() < 1e-12);
        }
    }

    #[test]
    fn matches_naive_dft_3d() {
        let shape = [3, 4, 5];
        let data: Vec<Complex64> = (0..60)
            .map(|k| Complex64::new(k as f64, -(k as f64) / 7.0))
            .collect();
        let mut buf = data.clone();
        fft_nd(&mut buf, &shape, FftDirection::Forward);
        for (out, expect) in buf.iter().enumerate() {
            let k = [out / 20, (out / 5) % 4, out % 5];
            let mut acc = Complex64::new(0.0, 0.0);
            for (idx, v) in data.iter().enumerate() {
                let j = [idx / 20, (idx / 5) % 4, idx % 5];
                let phase: f64 = (0..3)
                    .map(|a| -2.0 * std::f64::consts::PI * (j[a] * k[a]) as f64 / shape[a] as f64)
                    .sum();
                acc += v * Complex64::from_polar(1.0, phase);
            }
            assert!((acc - expect).norm() < 1e-9);
        }
    }
}
