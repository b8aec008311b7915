//! Ensemble verification metrics: RMSE, spread, marginal 95% coverage and CRPS.

use alloc::vec::Vec;

use crate::ensemble::StateEnsemble;
use crate::error::{Error, Result};
use crate::math::{normal_cdf, normal_pdf};
#[allow(unused_imports)]
use crate::math::Float as _;

/// 97.5% quantile of the standard normal.
const Z_975: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRow {
    pub k: usize,
    pub rmse: f64,
    pub spread: f64,
    pub coverage: f64,
    pub crps: f64,
}

impl MetricRow {
    /// Metrics of an ensemble against the reference state.
    pub fn from_ensemble(k: usize, ensemble: &StateEnsemble, truth: &[f64]) -> Result<Self> {
        Ok(Self {
            k,
            rmse: rmse(&ensemble.mean(), truth)?,
            spread: spread(ensemble)?,
            coverage: coverage(ensemble, truth)?,
            crps: crps_ensemble(ensemble, truth, CrpsEstimator::Energy)?,
        })
    }

    /// Metrics of a Gaussian forecast `N(mean, diag(var))`.
    pub fn from_gaussian(k: usize, mean: &[f64], var: &[f64], truth: &[f64]) -> Result<Self> {
        if var.len() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                found: var.len(),
            });
        }
        let d = mean.len() as f64;
        let rmse = rmse(mean, truth)?;
        let spread = (var.iter().sum::<f64>() / d).sqrt();
        let mut covered = 0usize;
        let mut crps = 0.0;
        for ((&m, &v), &t) in mean.iter().zip(var).zip(truth) {
            let s = v.max(0.0).sqrt();
            if (t - m).abs() <= Z_975 * s {
                covered += 1;
            }
            crps += crps_gaussian(m, s, t);
        }
        Ok(Self {
            k,
            rmse,
            spread,
            coverage: covered as f64 / d,
            crps: crps / d,
        })
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: a, found: b })
    }
}

pub fn rmse(mean: &[f64], truth: &[f64]) -> Result<f64> {
    check_dims(mean.len(), truth.len())?;
    if mean.is_empty() {
        return Err(Error::DimensionMismatch { expected: 1, found: 0 });
    }
    let ss: f64 = mean.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((ss / mean.len() as f64).sqrt())
}

/// Root mean trace of the unbiased ensemble covariance.
pub fn spread(ensemble: &StateEnsemble) -> Result<f64> {
    if ensemble.len() < 2 {
        return Err(Error::EnsembleTooSmall {
            required: 2,
            found: ensemble.len(),
        });
    }
    let var = ensemble.variance(1);
    Ok((var.iter().sum::<f64>() / var.len() as f64).sqrt())
}

/// Quantile of sorted data by linear interpolation between order statistics
/// (position `p (n - 1)`).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let pos = p * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Fraction of coordinates whose reference value lies inside the ensemble's
/// empirical 2.5%–97.5% marginal interval.
pub fn coverage(ensemble: &StateEnsemble, truth: &[f64]) -> Result<f64> {
    if ensemble.len() < 2 {
        return Err(Error::EnsembleTooSmall {
            required: 2,
            found: ensemble.len(),
        });
    }
    check_dims(ensemble.dim(), truth.len())?;
    let hits = (0..ensemble.dim())
        .filter(|&j| {
            let m = sorted(ensemble.marginal(j));
            let (lo, hi) = (quantile_sorted(&m, 0.025), quantile_sorted(&m, 0.975));
            lo <= truth[j] && truth[j] <= hi
        })
        .count();
    Ok(hits as f64 / ensemble.dim() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CrpsEstimator {
    /// `(1/n) Σ|xᵢ − y| − (1/2n²) ΣΣ|xᵢ − xⱼ|`.
    #[default]
    Energy,
    /// Pairwise term divided by `2n(n−1)` instead.
    Unbiased,
}

/// CRPS of a scalar ensemble against `truth`.
pub fn crps(samples: &[f64], truth: f64, estimator: CrpsEstimator) -> Result<f64> {
    let n = samples.len();
    if n == 0 {
        return Err(Error::EnsembleTooSmall { required: 1, found: 0 });
    }
    let x = sorted(samples.to_vec());
    let abs_err = x.iter().map(|v| (v - truth).abs()).sum::<f64>() / n as f64;
    // ΣᵢΣⱼ|xᵢ − xⱼ| = 2 Σᵢ (2i − n + 1) x₍ᵢ₎ for ascending order statistics
    let pair_sum: f64 = 2.0
        * x.iter()
            .enumerate()
            .map(|(i, v)| (2.0 * i as f64 - n as f64 + 1.0) * v)
            .sum::<f64>();
    let nf = n as f64;
    let pair = match estimator {
        CrpsEstimator::Energy => pair_sum / (2.0 * nf * nf),
        CrpsEstimator::Unbiased if n > 1 => pair_sum / (2.0 * nf * (nf - 1.0)),
        CrpsEstimator::Unbiased => 0.0,
    };
    Ok((abs_err - pair).max(0.0))
}

/// CRPS averaged over dimensions.
pub fn crps_ensemble(ensemble: &StateEnsemble, truth: &[f64], estimator: CrpsEstimator) -> Result<f64> {
    check_dims(ensemble.dim(), truth.len())?;
    let mut total = 0.0;
    for (j, &t) in truth.iter().enumerate() {
        total += crps(&ensemble.marginal(j), t, estimator)?;
    }
    Ok(total / truth.len() as f64)
}

/// Closed-form CRPS of `N(mean, std²)`.
pub fn crps_gaussian(mean: f64, std: f64, truth: f64) -> f64 {
    if std <= 0.0 {
        return (truth - mean).abs();
    }
    let z = (truth - mean) / std;
    std * (z * (2.0 * normal_cdf(z) - 1.0) + 2.0 * normal_pdf(z) - 1.0 / core::f64::consts::PI.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{fill_standard_normal, substream};
    use alloc::vec;
    use rand::Rng;

    /// ∫ (F̂(z) − 1{z ≥ y})² dz by the midpoint rule over the support.
    fn crps_quadrature(samples: &[f64], y: f64) -> f64 {
        let lo = samples.iter().copied().fold(y, f64::min) - 1.0;
        let hi = samples.iter().copied().fold(y, f64::max) + 1.0;
        let mut pts: Vec<f64> = samples.to_vec();
        pts.push(y);
        pts.push(lo);
        pts.push(hi);
        pts.sort_by(|a, b| a.total_cmp(b));
        // piecewise-constant integrand: integrate exactly between breakpoints
        let n = samples.len() as f64;
        let mut total = 0.0;
        for w in pts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let f = samples.iter().filter(|&&s| s <= mid).count() as f64 / n;
            let ind = if mid >= y { 1.0 } else { 0.0 };
            total += (f - ind) * (f - ind) * (w[1] - w[0]);
        }
        total
    }

    /// Fine uniform grid version, independent of the breakpoint structure.
    fn crps_grid(samples: &[f64], y: f64) -> f64 {
        let lo = samples.iter().copied().fold(y, f64::min) - 1.0;
        let hi = samples.iter().copied().fold(y, f64::max) + 1.0;
        let steps = 50_000_000;
        let dz = (hi - lo) / steps as f64;
        let n = samples.len() as f64;
        let mut s = sorted(samples.to_vec());
        s.push(f64::INFINITY);
        let mut idx = 0;
        let mut total = 0.0;
        for i in 0..steps {
            let z = lo + (i as f64 + 0.5) * dz;
            while s[idx] <= z {
                idx += 1;
            }
            let f = idx as f64 / n;
            let ind = if z >= y { 1.0 } else { 0.0 };
            total += (f - ind) * (f - ind) * dz;
        }
        total
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[1.0], &[0.0]).unwrap(), 1.0);
        assert_eq!(rmse(&[1.0, 1.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert!(rmse(&[1.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn spread_examples() {
        assert_eq!(spread(&StateEnsemble::from_scalars(&[2.0; 4])).unwrap(), 0.0);
        assert!((spread(&StateEnsemble::from_scalars(&[-1.0, 1.0])).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let twin = StateEnsemble::from_rows(&[[0.3, 0.3], [1.2, 1.2], [-0.4, -0.4]]).unwrap();
        let single = StateEnsemble::from_scalars(&[0.3, 1.2, -0.4]);
        assert!((spread(&twin).unwrap() - spread(&single).unwrap()).abs() < 1e-15);
        assert!(spread(&StateEnsemble::from_scalars(&[1.0])).is_err());
    }

    #[test]
    fn population_and_unbiased_spread_differ_by_known_factor() {
        let mut x = vec![0.0; 30];
        fill_standard_normal(&mut substream(1, &[]), &mut x);
        let e = StateEnsemble::from_flat(3, x).unwrap();
        let (w, _) = crate::score_net::whiten(&e).unwrap();
        let n = w.len() as f64;
        assert!((spread(&w).unwrap() - (n / (n - 1.0)).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn coverage_examples() {
        let e = StateEnsemble::from_rows(&[[0.0, 10.0], [1.0, 11.0], [2.0, 12.0], [3.0, 13.0], [4.0, 14.0]]).unwrap();
        assert_eq!(coverage(&e, &[2.0, 12.0]).unwrap(), 1.0);
        assert_eq!(coverage(&e, &[-50.0, 50.0]).unwrap(), 0.0);
        assert_eq!(coverage(&e, &[2.0, 50.0]).unwrap(), 0.5);
    }

    #[test]
    fn quantile_interpolates() {
        let s = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert!((quantile_sorted(&s, 0.025) - 0.1).abs() < 1e-12);
        assert!((quantile_sorted(&s, 0.975) - 3.9).abs() < 1e-12);
    }

    #[test]
    fn crps_examples() {
        assert_eq!(crps(&[2.5], -1.0, CrpsEstimator::Energy).unwrap(), 3.5);
        assert!((crps(&[0.0, 2.0], 1.0, CrpsEstimator::Energy).unwrap() - 0.5).abs() < 1e-15);
        assert!(crps(&[], 1.0, CrpsEstimator::Energy).is_err());
        // unbiased: 1 − 4/(2·2·1) = 0
        assert!(crps(&[0.0, 2.0], 1.0, CrpsEstimator::Unbiased).unwrap().abs() < 1e-15);
    }

    #[test]
    fn crps_matches_integral_definition() {
        let mut rng = substream(42, &[]);
        for _ in 0..200 {
            let n = rng.random_range(1..=20);
            let samples: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let y = rng.random_range(-4.0..4.0);
            let got = crps(&samples, y, CrpsEstimator::Energy).unwrap();
            assert!((got - crps_quadrature(&samples, y)).abs() < 1e-6);
            let mean_abs = samples.iter().map(|s| (s - y).abs()).sum::<f64>() / n as f64;
            assert!(got <= mean_abs + 1e-15);
        }
        let samples = [0.3, -1.2, 2.2, 0.9];
        assert!((crps(&samples, 0.1, CrpsEstimator::Energy).unwrap() - crps_grid(&samples, 0.1)).abs() < 1e-6);
    }

    #[test]
    fn gaussian_crps_at_mean() {
        // CRPS(N(0,1), 0) = 2φ(0) − 1/√π
        let expected = 2.0 * normal_pdf(0.0) - 1.0 / core::f64::consts::PI.sqrt();
        assert!((crps_gaussian(0.0, 1.0, 0.0) - expected).abs() < 1e-15);
        let row = MetricRow::from_gaussian(1, &[0.0], &[1.0], &[0.0]).unwrap();
        assert_eq!(row.coverage, 1.0);
        assert_eq!(row.rmse, 0.0);
    }

    #[test]
    fn metrics_are_permutation_invariant() {
        let rows = [[0.1, 2.0], [1.5, -0.3], [-0.7, 0.8], [0.2, 0.2], [3.0, 1.0]];
        let mut perm = rows;
        perm.reverse();
        perm.swap(0, 2);
        let a = MetricRow::from_ensemble(1, &StateEnsemble::from_rows(&rows).unwrap(), &[0.4, 0.5]).unwrap();
        let b = MetricRow::from_ensemble(1, &StateEnsemble::from_rows(&perm).unwrap(), &[0.4, 0.5]).unwrap();
        assert!((a.rmse - b.rmse).abs() < 1e-15);
        assert!((a.spread - b.spread).abs() < 1e-15);
        assert_eq!(a.coverage, b.coverage);
        assert!((a.crps - b.crps).abs() < 1e-15);
    }
}
