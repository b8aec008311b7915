//! Denoising score matching.
//!
//! For a smoothing level `σ` the empirical objective is
//! `L(s) = (1/m) Σ_i ‖σ s(x_i + σ ε_i) + ε_i‖²`, minimized by the score of the
//! data law convolved with `N(0, σ² I)`. Everything here runs in the whitened
//! coordinates stored in the network.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::RngCore;

use super::network::{Activation, ScoreNetwork};
use super::whiten::whiten;
use crate::ensemble::StateEnsemble;
use crate::error::{Error, Result};
#[allow(unused_imports)]
use crate::math::Float as _;
use crate::rng::fill_standard_normal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Learning-rate schedule over the whole fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LrSchedule {
    #[default]
    Constant,
    /// Cosine decay from the base rate to zero at the last step.
    Cosine,
}

impl LrSchedule {
    /// Multiplier of the base rate at optimizer step `t` of `total`.
    pub fn factor(self, t: usize, total: usize) -> f64 {
        match self {
            Self::Constant => 1.0,
            Self::Cosine => 0.5 * (1.0 + (core::f64::consts::PI * t as f64 / total.max(1) as f64).cos()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Smoothing level, in whitened units.
    pub sigma: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub schedule: LrSchedule,
    pub adam: AdamConfig,
    /// Start from the supplied network's weights when one is given.
    pub warm_start: bool,
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            sigma: 0.1,
            epochs: 100,
            batch_size: 128,
            learning_rate: 1e-3,
            schedule: LrSchedule::Constant,
            adam: AdamConfig::default(),
            warm_start: true,
            hidden: vec![128, 128],
            activation: Activation::Sigmoid,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma", "smoothing level must be positive"));
        }
        if self.epochs == 0 {
            return Err(Error::invalid("epochs", "must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size", "must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate", "must be positive"));
        }
        if self.hidden.contains(&0) {
            return Err(Error::invalid("hidden", "layer widths must be positive"));
        }
        Ok(())
    }
}

/// Loss and gradient on a batch already in whitened coordinates.
/// `z` and `eps` are flat, row-major `m × d`.
pub(crate) fn whitened_loss_and_grad(
    net: &ScoreNetwork,
    z: &[f64],
    eps: &[f64],
    sigma: f64,
    grad: Option<&mut [f64]>,
) -> f64 {
    let d = net.dim();
    let m = z.len() / d;
    let inv_m = 1.0 / m as f64;
    let mut trace = net.new_trace();
    let mut perturbed = vec![0.0; d];
    let mut d_out = vec![0.0; d];
    let mut scratch = [Vec::new(), Vec::new()];
    let mut grad = grad;
    let mut loss = 0.0;
    for (zi, ei) in z.chunks_exact(d).zip(eps.chunks_exact(d)) {
        for ((p, &a), &e) in perturbed.iter_mut().zip(zi).zip(ei) {
            *p = a + sigma * e;
        }
        net.forward_traced(&perturbed, &mut trace);
        let out = net.output(&trace);
        for ((g, &o), &e) in d_out.iter_mut().zip(out).zip(ei) {
            let r = sigma * o + e;
            loss += r * r;
            *g = 2.0 * sigma * r * inv_m;
        }
        if let Some(g) = grad.as_deref_mut() {
            net.backward(&trace, &d_out, g, &mut scratch);
        }
    }
    loss * inv_m
}

fn check_batch(net: &ScoreNetwork, batch: &StateEnsemble, noise: &StateEnsemble, sigma: f64) -> Result<Vec<f64>> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if batch.dim() != net.dim() || noise.dim() != net.dim() {
        return Err(Error::DimensionMismatch {
            expected: net.dim(),
            found: batch.dim(),
        });
    }
    if noise.len() != batch.len() {
        return Err(Error::DimensionMismatch {
            expected: batch.len(),
            found: noise.len(),
        });
    }
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma", "smoothing level must be positive"));
    }
    let mut z = vec![0.0; batch.as_flat().len()];
    for (o, x) in z.chunks_exact_mut(net.dim()).zip(batch.particles()) {
        net.whitening().apply(x, o);
    }
    Ok(z)
}

/// Empirical DSM loss of `net` on `batch` (original coordinates, whitened with
/// the network's stored transform) for the given standard-normal draws.
pub fn dsm_loss(net: &ScoreNetwork, batch: &StateEnsemble, sigma: f64, noise: &StateEnsemble) -> Result<f64> {
    let z = check_batch(net, batch, noise, sigma)?;
    Ok(whitened_loss_and_grad(net, &z, noise.as_flat(), sigma, None))
}

/// Exact gradient of [`dsm_loss`] with respect to the flat parameter vector.
pub fn loss_gradient(
    net: &ScoreNetwork,
    batch: &StateEnsemble,
    sigma: f64,
    noise: &StateEnsemble,
) -> Result<Vec<f64>> {
    let z = check_batch(net, batch, noise, sigma)?;
    let mut grad = vec![0.0; net.params().len()];
    whitened_loss_and_grad(net, &z, noise.as_flat(), sigma, Some(&mut grad));
    Ok(grad)
}

struct Adam {
    cfg: AdamConfig,
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(len: usize, lr: f64, cfg: AdamConfig) -> Self {
        Self {
            cfg,
            lr,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], factor: f64) {
        self.t += 1;
        let AdamConfig { beta1, beta2, eps } = self.cfg;
        let c1 = 1.0 - beta1.powi(self.t);
        let c2 = 1.0 - beta2.powi(self.t);
        for (((p, &g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            *p -= factor * self.lr * (*m / c1) / ((*v / c2).sqrt() + eps);
        }
    }
}

/// Fits a score network to `ensemble` by denoising score matching.
///
/// The whitening transform is always recomputed from `ensemble`. With
/// `config.warm_start` and an `init` network of matching shape, optimization
/// starts from `init`'s weights; otherwise from a fresh random initialization.
/// Noise draws are resampled every epoch.
pub fn train_score(
    ensemble: &StateEnsemble,
    config: &TrainConfig,
    init: Option<&ScoreNetwork>,
    rng: &mut dyn RngCore,
) -> Result<ScoreNetwork> {
    config.validate()?;
    let (white, whitening) = whiten(ensemble)?;
    let d = ensemble.dim();
    let n = white.len();

    let warm = init.filter(|net| {
        config.warm_start
            && net.dim() == d
            && net.hidden_widths() == config.hidden.as_slice()
            && net.activation() == config.activation
    });
    let mut net = match warm {
        Some(net) => net.clone(),
        None => ScoreNetwork::random(d, &config.hidden, config.activation, rng)?,
    };
    net.set_whitening(whitening)?;

    let mut adam = Adam::new(net.params().len(), config.learning_rate, config.adam);
    let mut order: Vec<usize> = (0..n).collect();
    let batch = config.batch_size.min(n);
    let mut zb = vec![0.0; batch * d];
    let mut eb = vec![0.0; batch * d];
    let mut grad = vec![0.0; net.params().len()];
    let total_steps = config.epochs * n.div_ceil(batch);
    let mut step = 0;

    for epoch in 0..config.epochs {
        order.shuffle(rng);
        let mut total = 0.0;
        let mut count = 0usize;
        for chunk in order.chunks(batch) {
            let m = chunk.len();
            for (r, &i) in chunk.iter().enumerate() {
                zb[r * d..(r + 1) * d].copy_from_slice(white.particle(i));
            }
            fill_standard_normal(rng, &mut eb[..m * d]);
            grad.iter_mut().for_each(|g| *g = 0.0);
            let loss = whitened_loss_and_grad(&net, &zb[..m * d], &eb[..m * d], config.sigma, Some(&mut grad));
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch, loss });
            }
            total += loss * m as f64;
            count += m;
            adam.step(net.params_mut(), &grad, config.schedule.factor(step, total_steps));
            step += 1;
        }
        if !net.is_finite() {
            return Err(Error::TrainingDiverged {
                epoch,
                loss: total / count as f64,
            });
        }
    }
    Ok(net)
}
