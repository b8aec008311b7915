use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use super::resample::systematic_resample;
use crate::ensemble::StateEnsemble;
use crate::error::{Error, Result};
use crate::math::log_sum_exp;
#[allow(unused_imports)]
use crate::math::Float as _;
use crate::models::StateSpaceModel;

/// Particles with normalized importance weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedParticles {
    pub particles: StateEnsemble,
    pub weights: Vec<f64>,
}

impl WeightedParticles {
    /// Normalizes log-weights. Returns `degenerate = true` and uniform weights
    /// when no weight is positive and finite.
    pub fn from_log_weights(particles: StateEnsemble, log_w: &[f64]) -> (Self, bool) {
        let lse = log_sum_exp(log_w);
        let n = log_w.len();
        let (weights, degenerate) = if lse.is_finite() {
            let w: Vec<f64> = log_w
                .iter()
                .map(|&l| if l.is_nan() { 0.0 } else { (l - lse).exp() })
                .collect();
            let total: f64 = w.iter().sum();
            (w.into_iter().map(|v| v / total).collect(), false)
        } else {
            (vec![1.0 / n as f64; n], true)
        };
        (Self { particles, weights }, degenerate)
    }

    /// Systematic resampling to `n` equally weighted particles.
    pub fn resample(&self, n: usize, rng: &mut dyn RngCore) -> StateEnsemble {
        self.particles.select(&systematic_resample(&self.weights, n, rng))
    }
}

/// Output of one filter step.
#[derive(Debug, Clone, PartialEq)]
pub struct ApfOutput {
    pub particles: StateEnsemble,
    /// Set when every weight vanished and uniform weights were used.
    pub degenerate: bool,
}

fn log_likelihoods(ensemble: &StateEnsemble, model: &dyn StateSpaceModel, y: &[f64]) -> Vec<f64> {
    ensemble.particles().map(|x| model.log_likelihood(x, y)).collect()
}

/// Bootstrap update of equally weighted prior samples with the first
/// observation.
pub fn apf_initial(
    prior: &StateEnsemble,
    model: &dyn StateSpaceModel,
    y: &[f64],
    rng: &mut dyn RngCore,
) -> Result<ApfOutput> {
    if prior.is_empty() {
        return Err(Error::EnsembleTooSmall { required: 1, found: 0 });
    }
    let log_w = log_likelihoods(prior, model, y);
    let (wp, degenerate) = WeightedParticles::from_log_weights(prior.clone(), &log_w);
    Ok(ApfOutput {
        particles: wp.resample(prior.len(), rng),
        degenerate,
    })
}

/// Auxiliary particle filter step from equally weighted particles.
///
/// 1. Look-ahead points `μᵢ = F(xᵢ, 0)`; first-stage weights `∝ g(y|μᵢ)`.
/// 2. Systematic resampling of ancestors by first-stage weights.
/// 3. Propagation of the ancestors with fresh dynamics noise.
/// 4. Second-stage weights `∝ g(y|x'ᵢ) / g(y|μ_{aᵢ})`, then systematic
///    resampling to equal weights.
pub fn apf_step(
    particles: &StateEnsemble,
    model: &dyn StateSpaceModel,
    y_next: &[f64],
    rng: &mut dyn RngCore,
) -> Result<ApfOutput> {
    let n = particles.len();
    if n == 0 {
        return Err(Error::EnsembleTooSmall { required: 1, found: 0 });
    }
    let d = particles.dim();
    let zero = vec![0.0; model.noise_dim()];
    let mut look_ahead = StateEnsemble::zeros(n, d);
    for (mu, x) in look_ahead.particles_mut().zip(particles.particles()) {
        model.dynamics(x, &zero, mu);
    }
    let first_log = log_likelihoods(&look_ahead, model, y_next);
    let (first, degenerate_first) = WeightedParticles::from_log_weights(look_ahead, &first_log);
    let ancestors = systematic_resample(&first.weights, n, rng);

    let mut propagated = StateEnsemble::zeros(n, d);
    let mut noise = vec![0.0; model.noise_dim()];
    for (out, &a) in propagated.particles_mut().zip(&ancestors) {
        model.sample_dynamics_noise(rng, &mut noise);
        model.dynamics(particles.particle(a), &noise, out);
    }
    let second_log: Vec<f64> = propagated
        .particles()
        .zip(&ancestors)
        .map(|(x, &a)| {
            let num = model.log_likelihood(x, y_next);
            // uniform first stage carries no information to divide out
            if degenerate_first {
                num
            } else {
                num - first_log[a]
            }
        })
        .collect();
    let (second, degenerate_second) = WeightedParticles::from_log_weights(propagated, &second_log);
    Ok(ApfOutput {
        particles: second.resample(n, rng),
        degenerate: degenerate_first || degenerate_second,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::kalman::{kalman_step, Gaussian};
    use crate::models::{make_linear_gaussian, LinearGaussian};
    use crate::rng::{fill_standard_normal, substream};
    use nalgebra::{DMatrix, DVector};

    fn flat_likelihood() -> LinearGaussian {
        let mut m = make_linear_gaussian();
        m.obs_var = f64::INFINITY;
        m.process_var = 0.0;
        m
    }

    #[test]
    fn flat_likelihood_permutes_particles() {
        let m = flat_likelihood();
        let e = StateEnsemble::from_scalars(&[0.3, -1.0, 2.0, 5.0, 0.0]);
        let out = apf_step(&e, &m, &[0.0], &mut substream(3, &[])).unwrap();
        assert!(!out.degenerate);
        let mut a = out.particles.into_flat();
        let mut b = e.into_flat();
        a.sort_by(|x, y| x.total_cmp(y));
        b.sort_by(|x, y| x.total_cmp(y));
        assert_eq!(a, b);
    }

    #[test]
    fn single_particle_is_propagated() {
        let m = make_linear_gaussian();
        let e = StateEnsemble::from_scalars(&[1.0]);
        let out = apf_step(&e, &m, &[0.5], &mut substream(4, &[])).unwrap();
        assert_eq!(out.particles.len(), 1);
        assert_ne!(out.particles.as_flat()[0], 1.0);
    }

    #[test]
    fn vanished_weights_fall_back_to_uniform() {
        let (wp, degenerate) =
            WeightedParticles::from_log_weights(StateEnsemble::from_scalars(&[0.0, 1.0]), &[f64::NEG_INFINITY; 2]);
        assert!(degenerate);
        assert_eq!(wp.weights, vec![0.5, 0.5]);
    }

    #[test]
    fn output_particles_come_from_propagated_set() {
        let m = make_linear_gaussian();
        let e = StateEnsemble::from_scalars(&[0.0, 1.0, 2.0, 3.0]);
        let init = apf_initial(&e, &m, &[1.2], &mut substream(5, &[])).unwrap();
        for v in init.particles.as_flat() {
            assert!(e.as_flat().contains(v));
        }
    }

    /// Signed APF mean − Kalman mean after one step from `N(0, 1)` samples.
    fn kalman_error(n: usize, seed: u64) -> f64 {
        let m = make_linear_gaussian();
        let spec = m.linear_gaussian().unwrap();
        let mut rng = substream(seed, &[]);
        let mut x = vec![0.0; n];
        fill_standard_normal(&mut rng, &mut x);
        let prior = StateEnsemble::from_scalars(&x);
        let y = 1.3;
        let out = apf_step(&prior, &m, &[y], &mut rng).unwrap();
        let exact = Gaussian {
            mean: DVector::from_element(1, 0.0),
            cov: DMatrix::from_element(1, 1, 1.0),
        };
        let kf = kalman_step(&exact, &spec, &[y]).unwrap();
        out.particles.mean()[0] - kf.mean[0]
    }

    // The look-ahead ignores process noise, so second-stage weights are
    // heavy-tailed and the Monte Carlo error is measured across seeds.
    #[test]
    fn matches_kalman_posterior_at_large_n() {
        let errs: Vec<f64> = (0..20).map(|s| kalman_error(10_000, s)).collect();
        let k = errs.len() as f64;
        let mean = errs.iter().sum::<f64>() / k;
        let sd = (errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
        assert!(mean.abs() < 3.0 * sd / k.sqrt(), "bias {mean}, sd {sd}");
    }

    #[test]
    fn error_shrinks_with_ensemble_size() {
        let avg = |n: usize| (0..10).map(|s| kalman_error(n, 100 + s).abs()).sum::<f64>() / 10.0;
        assert!(avg(10_000) < avg(100));
    }
}
