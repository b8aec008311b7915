//! The sequential driver: predict with the dynamics, fit the prediction score
//! by denoising score matching, then move the ensemble to the posterior with
//! annealed Langevin Monte Carlo.

use alloc::vec;
use alloc::vec::Vec;

use crate::baselines::Gaussian;
use crate::ensemble::StateEnsemble;
use crate::error::{Error, Result};
#[allow(unused_imports)]
use crate::math::Float as _;
use crate::metrics::MetricRow;
use crate::models::{ReferenceRun, StateSpaceModel};
use crate::rng::{derive_seed, purpose, substream};
use crate::sampler::{almc_update, AnnealPlan};
use crate::score_net::{train_score, ScoreNetwork, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct SslsConfig {
    pub ensemble_size: usize,
    pub train: TrainConfig,
    /// Epochs for warm-started fine-tuning; `train.epochs` when unset.
    pub warm_epochs: Option<usize>,
    pub plan: AnnealPlan,
    pub seed: u64,
    pub keep_snapshots: bool,
}

impl Default for SslsConfig {
    fn default() -> Self {
        Self {
            ensemble_size: 500,
            train: TrainConfig::default(),
            warm_epochs: None,
            plan: AnnealPlan::default(),
            seed: 0,
            keep_snapshots: false,
        }
    }
}

impl SslsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ensemble_size < 2 {
            return Err(Error::EnsembleTooSmall {
                required: 2,
                found: self.ensemble_size,
            });
        }
        if self.warm_epochs == Some(0) {
            return Err(Error::invalid("warm_epochs", "must be at least 1"));
        }
        self.train.validate()
    }
}

/// Per-step output of any assimilation method.
#[derive(Debug, Clone, PartialEq)]
pub struct AssimilationRecord {
    pub k: usize,
    pub ensemble: Option<StateEnsemble>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub reference: Vec<f64>,
    pub observation: Vec<f64>,
    pub metrics: MetricRow,
}

impl AssimilationRecord {
    pub fn from_ensemble(k: usize, ensemble: &StateEnsemble, run: &ReferenceRun, keep: bool) -> Result<Self> {
        let reference = run.states[k - 1].clone();
        Ok(Self {
            k,
            metrics: MetricRow::from_ensemble(k, ensemble, &reference)?,
            ensemble: keep.then(|| ensemble.clone()),
            mean: ensemble.mean(),
            std: ensemble.std(),
            reference,
            observation: run.observations[k - 1].clone(),
        })
    }

    pub fn from_gaussian(k: usize, belief: &Gaussian, run: &ReferenceRun) -> Result<Self> {
        let reference = run.states[k - 1].clone();
        let mean: Vec<f64> = belief.mean.iter().copied().collect();
        let var: Vec<f64> = belief.cov.diagonal().iter().copied().collect();
        Ok(Self {
            k,
            metrics: MetricRow::from_gaussian(k, &mean, &var, &reference)?,
            ensemble: None,
            std: var.iter().map(|v| v.max(0.0).sqrt()).collect(),
            mean,
            reference,
            observation: run.observations[k - 1].clone(),
        })
    }
}

/// `n` draws from the model's guess prior; particle `i` uses substream
/// `(seed, INITIAL, i)`.
pub fn sample_initial_ensemble(model: &dyn StateSpaceModel, n: usize, seed: u64) -> StateEnsemble {
    let mut e = StateEnsemble::zeros(n, model.state_dim());
    for (i, p) in e.particles_mut().enumerate() {
        model.sample_initial_guess(&mut substream(seed, &[purpose::INITIAL, i as u64]), p);
    }
    e
}

/// Pushes every particle through the dynamics with its own noise substream
/// `(seed, PREDICT, i)`.
pub fn predict(posterior: &StateEnsemble, model: &dyn StateSpaceModel, seed: u64) -> StateEnsemble {
    let mut out = StateEnsemble::zeros(posterior.len(), posterior.dim());
    let mut noise = vec![0.0; model.noise_dim()];
    for (i, (o, x)) in out.particles_mut().zip(posterior.particles()).enumerate() {
        model.sample_dynamics_noise(&mut substream(seed, &[purpose::PREDICT, i as u64]), &mut noise);
        model.dynamics(x, &noise, o);
    }
    out
}

/// Stateful SSLS filter. Keeps the last score network for warm starts.
pub struct Ssls<'a> {
    model: &'a dyn StateSpaceModel,
    config: SslsConfig,
    network: Option<ScoreNetwork>,
}

impl<'a> Ssls<'a> {
    pub fn new(model: &'a dyn StateSpaceModel, config: SslsConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            model,
            config,
            network: None,
        })
    }

    pub fn config(&self) -> &SslsConfig {
        &self.config
    }

    pub fn score_network(&self) -> Option<&ScoreNetwork> {
        self.network.as_ref()
    }

    /// Fits the score of `predicted` and runs the annealed Langevin update for
    /// observation `y` at time `k`.
    pub fn update(&mut self, k: usize, predicted: &StateEnsemble, y: &[f64]) -> Result<StateEnsemble> {
        if predicted.len() < 2 {
            return Err(Error::EnsembleTooSmall {
                required: 2,
                found: predicted.len(),
            });
        }
        let seed = self.config.seed;
        let mut train = self.config.train.clone();
        let init = if train.warm_start { self.network.as_ref() } else { None };
        if init.is_some() {
            if let Some(e) = self.config.warm_epochs {
                train.epochs = e;
            }
        }
        let net = train_score(
            predicted,
            &train,
            init,
            &mut substream(seed, &[purpose::TRAIN, k as u64]),
        )?;
        let model = self.model;
        let posterior = almc_update(
            predicted,
            &net,
            |x: &[f64], g: &mut [f64]| model.log_likelihood_grad(x, y, g),
            &self.config.plan,
            derive_seed(seed, &[purpose::LANGEVIN, k as u64]),
        )?;
        self.network = Some(net);
        Ok(posterior)
    }

    /// Posterior for the first observation from guess-prior samples.
    pub fn initial_update(&mut self, prior_samples: &StateEnsemble, y1: &[f64]) -> Result<StateEnsemble> {
        self.network = None;
        self.update(1, prior_samples, y1)
    }

    /// Assimilates every observation of `run` from fresh guess-prior samples.
    /// The network of the last step stays available afterwards.
    pub fn run(&mut self, run: &ReferenceRun) -> Result<Vec<AssimilationRecord>> {
        if run.is_empty() {
            return Err(Error::invalid("run", "no observations"));
        }
        let keep = self.config.keep_snapshots;
        let prior = sample_initial_ensemble(self.model, self.config.ensemble_size, self.config.seed);
        let mut posterior = self
            .initial_update(&prior, &run.observations[0])
            .map_err(|e| e.at_step(1))?;
        let mut records = Vec::with_capacity(run.len());
        records.push(AssimilationRecord::from_ensemble(1, &posterior, run, keep)?);
        for k in 2..=run.len() {
            let predicted = self.predict(k - 1, &posterior);
            posterior = self
                .update(k, &predicted, &run.observations[k - 1])
                .map_err(|e| e.at_step(k))?;
            records.push(AssimilationRecord::from_ensemble(k, &posterior, run, keep)?);
        }
        Ok(records)
    }

    /// Prediction step from the posterior at time `k` to time `k + 1`.
    pub fn predict(&self, k: usize, posterior: &StateEnsemble) -> StateEnsemble {
        predict(
            posterior,
            self.model,
            derive_seed(self.config.seed, &[purpose::PREDICT, k as u64]),
        )
    }
}

/// Runs SSLS over every observation of `run`; one record per time step.
pub fn assimilate(model: &dyn StateSpaceModel, run: &ReferenceRun, config: &SslsConfig) -> Result<Vec<AssimilationRecord>> {
    Ssls::new(model, config.clone())?.run(run)
}
