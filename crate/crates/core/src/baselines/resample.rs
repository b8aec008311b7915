use alloc::vec::Vec;

use rand::{Rng, RngCore};

/// Systematic resampling: `n` draws at positions `(u + j)/n`, `u ~ U[0, 1)`,
/// against the cumulative weights. Index `i` is selected `⌊n wᵢ⌋` or `⌈n wᵢ⌉`
/// times.
pub fn systematic_resample(weights: &[f64], n: usize, rng: &mut dyn RngCore) -> Vec<usize> {
    if weights.is_empty() || n == 0 {
        return Vec::new();
    }
    let u: f64 = rng.random::<f64>();
    let mut out = Vec::with_capacity(n);
    let last = weights.len() - 1;
    let mut i = 0;
    let mut cum = weights[0] * n as f64;
    for j in 0..n {
        let pos = u + j as f64;
        while pos >= cum && i < last {
            i += 1;
            cum += weights[i] * n as f64;
        }
        out.push(i);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use alloc::vec;

    #[test]
    fn uniform_weights_select_each_once() {
        for seed in 0..50 {
            let idx = systematic_resample(&[0.25; 4], 4, &mut substream(seed, &[]));
            assert_eq!(idx, vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn degenerate_mass() {
        let idx = systematic_resample(&[1.0, 0.0, 0.0], 3, &mut substream(1, &[]));
        assert_eq!(idx, vec![0, 0, 0]);
        let idx = systematic_resample(&[0.0, 0.0, 1.0], 3, &mut substream(1, &[]));
        assert_eq!(idx, vec![2, 2, 2]);
    }

    #[test]
    fn exact_multiples_are_deterministic() {
        for seed in 0..50 {
            let idx = systematic_resample(&[0.5, 0.5], 4, &mut substream(seed, &[]));
            assert_eq!(idx, vec![0, 0, 1, 1]);
        }
    }

    #[test]
    fn counts_are_floor_or_ceil() {
        let w = [0.1, 0.35, 0.05, 0.5];
        for seed in 0..50 {
            let idx = systematic_resample(&w, 17, &mut substream(seed, &[]));
            assert_eq!(idx.len(), 17);
            for (i, wi) in w.iter().enumerate() {
                let c = idx.iter().filter(|&&j| j == i).count() as f64;
                let e = wi * 17.0;
                assert!(c >= e.floor() - 1e-9 && c <= e.ceil() + 1e-9, "index {i}: {c} vs {e}");
            }
        }
    }
}
