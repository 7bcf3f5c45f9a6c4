//! Reproducible random directions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub const DEFAULT_SEED: u64 = 0x5eed_1a77;

/// `count` uniformly distributed unit vectors in `R^d`.
pub fn sphere_samples(d: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-12 {
            out.push(v.into_iter().map(|a| a / n).collect());
        }
    }
    out
}

/// Sphere samples followed by the signed coordinate axes.
pub fn sphere_and_axes(d: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out = sphere_samples(d, count, seed);
    for j in 0..d {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; d];
            e[j] = s;
            out.push(e);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_length_and_reproducible() {
        let a = sphere_samples(3, 50, 1);
        let b = sphere_samples(3, 50, 1);
        assert_eq!(a, b);
        for v in &a {
            assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-14);
        }
        assert_eq!(sphere_and_axes(2, 5, 0).len(), 9);
    }
}
