//! Experiment configuration files (TOML).
//!
//! ```toml
//! experiment = "double_well_linear"
//! method = "ssls"            # `run`
//! methods = ["ssls", "apf"]  # `compare`
//! ensemble_size = 1000
//! steps = 100
//! mutation_period = 20
//! seed = 7
//! output_dir = "out/dw"
//! init_prior_shift = 0.0
//!
//! [model]
//! beta = 0.3
//! dt = 0.1
//! sigma_obs = 0.1
//!
//! [ssls]
//! sigma = 0.1
//! epochs = 100
//! hidden = [128, 128]
//! temperatures = 10
//! inner_steps = 20
//! step_size = 0.01
//! ```
//!
//! Every key is optional except `experiment`. Unknown keys are rejected, and
//! so are model keys that the chosen experiment does not use.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use ssls_core::models::{
    make_double_well, make_linear_gaussian, make_lorenz96, DoubleWell, LinearGaussian, Lorenz96, Measurement,
};
use ssls_core::sampler::AnnealPlan;
use ssls_core::score_net::{Activation, LrSchedule, TrainConfig};
use ssls_core::{SslsConfig, StateSpaceModel};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    LinearGaussian,
    DoubleWellLinear,
    DoubleWellNonlinear,
    Lorenz96,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ssls,
    Enkf,
    Apf,
    Kalman,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Self::Ssls => "ssls",
            Self::Enkf => "enkf",
            Self::Apf => "apf",
            Self::Kalman => "kalman",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub sigma_obs: Option<f64>,
    pub beta: Option<f64>,
    pub dt: Option<f64>,
    pub gamma: Option<f64>,
    pub forcing: Option<f64>,
    pub dim: Option<usize>,
    pub process_noise_std: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationName {
    Sigmoid,
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleName {
    Constant,
    Cosine,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SslsParams {
    pub sigma: Option<f64>,
    pub epochs: Option<usize>,
    /// Epochs for warm-started fits after the first step.
    pub warm_epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub lr_schedule: Option<ScheduleName>,
    pub hidden: Option<Vec<usize>>,
    pub activation: Option<ActivationName>,
    pub warm_start: Option<bool>,
    /// Number of linearly spaced inverse temperatures.
    pub temperatures: Option<usize>,
    pub inner_steps: Option<usize>,
    pub step_size: Option<f64>,
    /// Maximum drift norm; `0` disables clipping.
    pub clip: Option<f64>,
    pub keep_snapshots: Option<bool>,
    /// Write the final score network to `score_net.bin`.
    pub checkpoint: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub method: Option<Method>,
    #[serde(default)]
    pub methods: Vec<Method>,
    pub ensemble_size: Option<usize>,
    pub steps: Option<usize>,
    pub mutation_period: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub init_prior_shift: f64,
    #[serde(default)]
    pub model: ModelParams,
    #[serde(default)]
    pub ssls: SslsParams,
}

/// A built model of one of the testbeds.
#[derive(Debug, Clone)]
pub enum Model {
    LinearGaussian(LinearGaussian),
    DoubleWell(DoubleWell),
    Lorenz96(Lorenz96),
}

impl Model {
    pub fn as_dyn(&self) -> &dyn StateSpaceModel {
        match self {
            Self::LinearGaussian(m) => m,
            Self::DoubleWell(m) => m,
            Self::Lorenz96(m) => m,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|source| CliError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text, path)
    }

    pub fn ensemble_size(&self) -> usize {
        self.ensemble_size.unwrap_or(match self.experiment {
            Experiment::LinearGaussian | Experiment::Lorenz96 => 500,
            Experiment::DoubleWellLinear | Experiment::DoubleWellNonlinear => 1000,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps.unwrap_or(match self.experiment {
            Experiment::LinearGaussian => 10,
            Experiment::DoubleWellLinear | Experiment::DoubleWellNonlinear => 100,
            Experiment::Lorenz96 => 50,
        })
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// The single method of a `run` invocation.
    pub fn single_method(&self) -> Result<Method> {
        match (self.method, self.methods.as_slice()) {
            (Some(m), []) => Ok(m),
            (None, [m]) => Ok(*m),
            (Some(_), _) => Err(CliError::config("methods", "cannot be combined with `method`")),
            (None, []) => Err(CliError::config("method", "is required")),
            (None, _) => Err(CliError::config("methods", "lists several methods; use `compare`")),
        }
    }

    /// The methods of a `compare` invocation, in file order.
    pub fn compared_methods(&self) -> Result<Vec<Method>> {
        if self.method.is_some() {
            return Err(CliError::config("method", "use `methods` with `compare`"));
        }
        let mut out: Vec<Method> = Vec::new();
        for &m in &self.methods {
            if out.contains(&m) {
                return Err(CliError::config("methods", format!("lists `{m}` twice")));
            }
            out.push(m);
        }
        if out.len() < 2 {
            return Err(CliError::config("methods", "must list at least two methods"));
        }
        Ok(out)
    }

    /// Checks constraints that depend on the chosen methods.
    pub fn check_methods(&self, methods: &[Method]) -> Result<()> {
        for &m in methods {
            if m == Method::Kalman && self.experiment != Experiment::LinearGaussian {
                return Err(CliError::config(
                    "method",
                    "`kalman` is only available for experiment `linear_gaussian`",
                ));
            }
            if m != Method::Kalman && self.ensemble_size() < 2 {
                return Err(CliError::config("ensemble_size", "must be at least 2"));
            }
        }
        if self.steps() == 0 {
            return Err(CliError::config("steps", "must be at least 1"));
        }
        if self.mutation_period == Some(0) {
            return Err(CliError::config("mutation_period", "must be at least 1"));
        }
        if !self.init_prior_shift.is_finite() {
            return Err(CliError::config("init_prior_shift", "must be finite"));
        }
        Ok(())
    }

    fn reject_unused(&self, allowed: &[&str]) -> Result<()> {
        let p = &self.model;
        let given = [
            ("sigma_obs", p.sigma_obs.is_some()),
            ("beta", p.beta.is_some()),
            ("dt", p.dt.is_some()),
            ("gamma", p.gamma.is_some()),
            ("forcing", p.forcing.is_some()),
            ("dim", p.dim.is_some()),
            ("process_noise_std", p.process_noise_std.is_some()),
        ];
        for (name, set) in given {
            if set && !allowed.contains(&name) {
                return Err(CliError::config(
                    "model",
                    format!("key `{name}` is not used by this experiment"),
                ));
            }
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<Model> {
        let p = &self.model;
        let shift = self.init_prior_shift;
        let model = match self.experiment {
            Experiment::LinearGaussian => {
                self.reject_unused(&[])?;
                let m = make_linear_gaussian();
                let guess = m.init_mean + shift;
                Model::LinearGaussian(m.with_guess_mean(guess))
            }
            Experiment::DoubleWellLinear | Experiment::DoubleWellNonlinear => {
                let measurement = if self.experiment == Experiment::DoubleWellLinear {
                    self.reject_unused(&["sigma_obs", "beta", "dt"])?;
                    Measurement::Linear {
                        sigma_obs: p.sigma_obs.unwrap_or(0.1),
                    }
                } else {
                    self.reject_unused(&["sigma_obs", "beta", "dt", "gamma"])?;
                    Measurement::Exponential {
                        gamma: p.gamma.unwrap_or(0.6),
                        sigma_obs: p.sigma_obs.unwrap_or(0.2),
                    }
                };
                let mut m = make_double_well(p.beta.unwrap_or(0.3), p.dt.unwrap_or(0.1), measurement).map_err(model_error)?;
                m.guess_mean += shift;
                Model::DoubleWell(m)
            }
            Experiment::Lorenz96 => {
                self.reject_unused(&["sigma_obs", "dt", "forcing", "dim", "process_noise_std"])?;
                let mut m = make_lorenz96(
                    p.dim.unwrap_or(20),
                    p.forcing.unwrap_or(8.0),
                    p.dt.unwrap_or(0.05),
                    p.process_noise_std.unwrap_or(0.1f64.sqrt()),
                    p.sigma_obs.unwrap_or(0.5),
                )
                .map_err(model_error)?;
                m.guess_mean += shift;
                Model::Lorenz96(m)
            }
        };
        Ok(model)
    }

    pub fn ssls_config(&self) -> Result<SslsConfig> {
        let s = &self.ssls;
        let base = TrainConfig::default();
        let train = TrainConfig {
            sigma: s.sigma.unwrap_or(base.sigma),
            epochs: s.epochs.unwrap_or(base.epochs),
            batch_size: s.batch_size.unwrap_or(base.batch_size),
            learning_rate: s.learning_rate.unwrap_or(base.learning_rate),
            schedule: match s.lr_schedule {
                None => base.schedule,
                Some(ScheduleName::Constant) => LrSchedule::Constant,
                Some(ScheduleName::Cosine) => LrSchedule::Cosine,
            },
            adam: base.adam,
            warm_start: s.warm_start.unwrap_or(base.warm_start),
            hidden: s.hidden.clone().unwrap_or(base.hidden),
            activation: match s.activation {
                None => base.activation,
                Some(ActivationName::Sigmoid) => Activation::Sigmoid,
                Some(ActivationName::Relu) => Activation::Relu,
            },
        };
        let default_plan = AnnealPlan::default();
        let clip = match s.clip {
            None => default_plan.clip(),
            Some(c) if c == 0.0 => None,
            Some(c) => Some(c),
        };
        let plan = AnnealPlan::linear(
            s.temperatures.unwrap_or(default_plan.temperatures().len()),
            s.inner_steps.unwrap_or(default_plan.inner_steps()),
            s.step_size.unwrap_or(default_plan.step_size()),
            clip,
        )
        .map_err(ssls_error)?;
        let config = SslsConfig {
            ensemble_size: self.ensemble_size(),
            train,
            warm_epochs: s.warm_epochs,
            plan,
            seed: self.seed,
            keep_snapshots: s.keep_snapshots.unwrap_or(false),
        };
        config.validate().map_err(ssls_error)?;
        Ok(config)
    }
}

fn model_error(e: ssls_core::Error) -> CliError {
    CliError::config("model", e.to_string())
}

fn ssls_error(e: ssls_core::Error) -> CliError {
    CliError::config("ssls", e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml(text, Path::new("t.toml")).unwrap()
    }

    #[test]
    fn defaults_follow_experiment() {
        let c = parse("experiment = \"double_well_nonlinear\"");
        assert_eq!((c.ensemble_size(), c.steps(), c.seed), (1000, 100, 0));
        assert_eq!(c.output_dir(), PathBuf::from("out"));
        let c = parse("experiment = \"lorenz96\"");
        assert_eq!((c.ensemble_size(), c.steps()), (500, 50));
    }

    #[test]
    fn zero_clip_disables_clipping() {
        let c = parse("experiment = \"linear_gaussian\"\n[ssls]\nclip = 0.0\n");
        assert_eq!(c.ssls_config().unwrap().plan.clip(), None);
        let c = parse("experiment = \"linear_gaussian\"\n[ssls]\nclip = 5.0\n");
        assert_eq!(c.ssls_config().unwrap().plan.clip(), Some(5.0));
    }

    #[test]
    fn shift_moves_guess_prior_only() {
        let c = parse("experiment = \"linear_gaussian\"\ninit_prior_shift = -10.0\n");
        let Model::LinearGaussian(m) = c.build_model().unwrap() else {
            panic!("wrong model");
        };
        assert_eq!(m.guess_mean, m.init_mean - 10.0);
    }

    #[test]
    fn method_selection() {
        let c = parse("experiment = \"linear_gaussian\"\nmethods = [\"apf\"]\n");
        assert_eq!(c.single_method().unwrap(), Method::Apf);
        let c = parse("experiment = \"linear_gaussian\"\nmethod = \"apf\"\nmethods = [\"enkf\"]\n");
        assert!(c.single_method().is_err());
        let c = parse("experiment = \"linear_gaussian\"\nmethods = [\"apf\", \"apf\"]\n");
        assert!(c.compared_methods().is_err());
    }
}
