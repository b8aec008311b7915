//! State-space models: dynamics, measurement likelihood and initial laws.
//!
//! All built-in models use additive Gaussian observation noise, so the
//! likelihood is `N(y; h(x), σ_obs² I)` and its log-density is stored up to an
//! additive constant.

use alloc::vec;
use alloc::vec::Vec;

use rand::RngCore;

use crate::baselines::LinearGaussianSpec;
use crate::error::{Error, Result};
#[allow(unused_imports)]
use crate::math::Float as _;
use crate::rng::{fill_standard_normal, standard_normal};

/// A discrete-time state-space model `X_{k+1} = F(X_k, V_k)`, `Y_k ~ g(·|X_k)`.
pub trait StateSpaceModel {
    fn state_dim(&self) -> usize;

    fn obs_dim(&self) -> usize {
        self.state_dim()
    }

    /// Dimension of the dynamics noise draw `V_k`.
    fn noise_dim(&self) -> usize {
        self.state_dim()
    }

    /// One step of the dynamics for an explicit noise draw.
    fn dynamics(&self, state: &[f64], noise: &[f64], out: &mut [f64]);

    fn sample_dynamics_noise(&self, rng: &mut dyn RngCore, out: &mut [f64]) {
        fill_standard_normal(rng, out);
    }

    /// Noise-free measurement `h(x)`.
    fn observation_mean(&self, state: &[f64], out: &mut [f64]);

    /// Standard deviation of the additive observation noise.
    fn obs_noise_std(&self) -> f64;

    /// `∇_x log g(y|x)`.
    fn log_likelihood_grad(&self, state: &[f64], obs: &[f64], out: &mut [f64]);

    /// `log g(y|x)` up to an additive constant.
    fn log_likelihood(&self, state: &[f64], obs: &[f64]) -> f64 {
        let mut h = vec![0.0; self.obs_dim()];
        self.observation_mean(state, &mut h);
        let var = self.obs_noise_std().powi(2);
        -0.5 * h
            .iter()
            .zip(obs)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            / var
    }

    /// Draw from the assimilator's guess of the initial prior.
    fn sample_initial_guess(&self, rng: &mut dyn RngCore, out: &mut [f64]);

    /// Draw from the true initial law used to generate reference runs.
    fn sample_initial_reference(&self, rng: &mut dyn RngCore, out: &mut [f64]);

    fn sample_observation(&self, state: &[f64], rng: &mut dyn RngCore, out: &mut [f64]) {
        self.observation_mean(state, out);
        let s = self.obs_noise_std();
        for v in out.iter_mut() {
            *v += s * standard_normal(rng);
        }
    }

    /// Propagates `state` with a fresh noise draw.
    fn propagate(&self, state: &[f64], rng: &mut dyn RngCore, out: &mut [f64]) {
        let mut noise = vec![0.0; self.noise_dim()];
        self.sample_dynamics_noise(rng, &mut noise);
        self.dynamics(state, &noise, out);
    }

    /// The exact linear-Gaussian form, when the model has one (Kalman oracle).
    fn linear_gaussian(&self) -> Option<LinearGaussianSpec> {
        None
    }
}

fn require_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, "must be positive and finite"))
    }
}

/// 1-D random walk observed in Gaussian noise:
/// `X_{k+1} = X_k + V_k`, `V ~ N(0, 5)`; `Y_k = X_k + W_k`, `W ~ N(0, 0.2)`;
/// `X_1 ~ N(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGaussian {
    pub process_var: f64,
    pub obs_var: f64,
    pub init_mean: f64,
    pub init_var: f64,
    /// Mean of the guess prior; equals `init_mean` for exact initialization.
    pub guess_mean: f64,
}

pub fn make_linear_gaussian() -> LinearGaussian {
    LinearGaussian {
        process_var: 5.0,
        obs_var: 0.2,
        init_mean: 0.0,
        init_var: 1.0,
        guess_mean: 0.0,
    }
}

impl LinearGaussian {
    /// Shifts the guess prior to `N(mean, init_var)`.
    pub fn with_guess_mean(mut self, mean: f64) -> Self {
        self.guess_mean = mean;
        self
    }
}

impl StateSpaceModel for LinearGaussian {
    fn state_dim(&self) -> usize {
        1
    }

    fn dynamics(&self, state: &[f64], noise: &[f64], out: &mut [f64]) {
        out[0] = state[0] + self.process_var.sqrt() * noise[0];
    }

    fn observation_mean(&self, state: &[f64], out: &mut [f64]) {
        out[0] = state[0];
    }

    fn obs_noise_std(&self) -> f64 {
        self.obs_var.sqrt()
    }

    fn log_likelihood_grad(&self, state: &[f64], obs: &[f64], out: &mut [f64]) {
        out[0] = (obs[0] - state[0]) / self.obs_var;
    }

    fn sample_initial_guess(&self, rng: &mut dyn RngCore, out: &mut [f64]) {
        out[0] = self.guess_mean + self.init_var.sqrt() * standard_normal(rng);
    }

    fn sample_initial_reference(&self, rng: &mut dyn RngCore, out: &mut [f64]) {
        out[0] = self.init_mean + self.init_var.sqrt() * standard_normal(rng);
    }

    fn linear_gaussian(&self) -> Option<LinearGaussianSpec> {
        Some(LinearGaussianSpec::scalar(
            1.0,
            self.process_var,
            1.0,
            self.obs_var,
            self.init_mean,
            self.init_var,
        ))
    }
}

/// Measurement operator of the double-well testbed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Measurement {
    /// `Y = X + σ_obs W`.
    Linear { sigma_obs: f64 },
    /// `Y = exp(X - γ) + σ_obs W`, with constant `γ`.
    Exponential { gamma: f64, sigma_obs: f64 },
}

impl Measurement {
    fn sigma_obs(&self) -> f64 {
        match *self {
            Measurement::Linear { sigma_obs } | Measurement::Exponential { sigma_obs, .. } => {
                sigma_obs
            }
        }
    }
}

/// Euler–Maruyama discretization of the overdamped Langevin diffusion in the
/// potential `U(x) = x⁴ − 2x²`:
/// `X_{k+1} = X_k − δt ∇U(X_k) + β √δt V_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleWell {
    pub beta: f64,
    pub dt: f64,
    pub measurement: Measurement,
    pub init_mean: f64,
    pub init_std: f64,
    pub guess_mean: f64,
    pub guess_std: f64,
}

pub fn make_double_well(beta: f64, dt: f64, measurement: Measurement) -> Result<DoubleWell> {
    require_positive("beta", beta)?;
    require_positive("dt", dt)?;
    require_positive("sigma_obs", measurement.sigma_obs())?;
    if let Measurement::Exponential { gamma, .. } = measurement {
        if !gamma.is_finite() {
            return Err(Error::invalid("gamma", "must be finite"));
        }
    }
    Ok(DoubleWell {
        beta,
        dt,
        measurement,
        init_mean: -1.0,
        init_std: 0.15,
        guess_mean: -1.0,
        guess_std: 0.15,
    })
}

impl DoubleWell {
    pub fn grad_potential(x: f64) -> f64 {
        4.0 * x * x * x - 4.0 * x
    }

    /// Sets both the reference and guess initial laws to `N(mean, std²)`.
    pub fn with_initial(mut self, mean: f64, std: f64) -> Self {
        self.init_mean = mean;
        self.init_std = std;
        self.guess_mean = mean;
        self.guess_std = std;
        self
    }
}

impl StateSpaceModel for DoubleWell {
    fn state_dim(&self) -> usize {
        1
    }

    fn dynamics(&self, state: &[f64], noise: &[f64], out: &mut [f64]) {
        let x = state[0];
        out[0] = x - self.dt * Self::grad_potential(x) + self.beta * self.dt.sqrt() * noise[0];
    }

    fn observation_mean(&self, state: &[f64], out: &mut [f64]) {
        out[0] = match self.measurement {
            Measurement::Linear { .. } => state[0],
            Measurement::Exponential { gamma, .. } => (state[0] - gamma).exp(),
        };
    }

    fn obs_noise_std(&self) -> f64 {
        self.measurement.sigma_obs()
    }

    fn log_likelihood_grad(&self, state: &[f64], obs: &[f64], out: &mut [f64]) {
        let x = state[0];
        let y = obs[0];
        out[0] = match self.measurement {
            Measurement::Linear { sigma_obs } => (y - x) / (sigma_obs * sigma_obs),
            Measurement::Exponential { gamma, sigma_obs } => {
                let e = (x - gamma).exp();
                (y - e) * e / (sigma_obs * sigma_obs)
            }
        };
    }

    fn sample_initial_guess(&self, rng: &mut dyn RngCore, out: &mut [f64]) {
        out[0] = self.guess_mean + self.guess_std * standard_normal(rng);
    }

    fn sample_initial_reference(&self, rng: &mut dyn RngCore, out: &mut [f64]) {
        out[0] = self.init_mean + self.init_std * standard_normal(rng);
    }
}

/// Lorenz-96 right-hand side `dZ_i/dt = (Z_{i+1} − Z_{i−2}) Z_{i−1} − Z_i + F`,
/// indices taken modulo the dimension.
pub fn lorenz96_rhs(z: &[f64], forcing: f64, out: &mut [f64]) {
    let d = z.len();
    for i in 0..d {
        let ip1 = (i + 1) % d;
        let im1 = (i + d - 1) % d;
        let im2 = (i + d - 2) % d;
        out[i] = (z[ip1] - z[im2]) * z[im1] - z[i] + forcing;
    }
}

/// One classical fourth-order Runge–Kutta step of `dz/dt = rhs(z)`.
pub fn rk4_step<F>(rhs: F, z: &[f64], dt: f64) -> Vec<f64>
where
    F: Fn(&[f64], &mut [f64]),
{
    let d = z.len();
    let mut k1 = vec![0.0; d];
    let mut k2 = vec![0.0; d];
    let mut k3 = vec![0.0; d];
    let mut k4 = vec![0.0; d];
    let mut tmp = vec![0.0; d];

    rhs(z, &mut k1);
    for i in 0..d {
        tmp[i] = z[i] + 0.5 * dt * k1[i];
    }
    rhs(&tmp, &mut k2);
    for i in 0..d {
        tmp[i] = z[i] + 0.5 * dt * k2[i];
    }
    rhs(&tmp, &mut k3);
    for i in 0..d {
        tmp[i] = z[i] + dt * k3[i];
    }
    rhs(&tmp, &mut k4);
    (0..d)
        .map(|i| z[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Lorenz-96 integrated with RK4, additive process noise once per step and
/// identity observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Lorenz96 {
    pub dim: usize,
    pub forcing: f64,
    pub dt: f64,
    pub process_noise_std: f64,
    pub sigma_obs: f64,
    /// Noise-free RK4 steps applied to an `N(0, I)` draw to place the reference
    /// initial state on the attractor.
    pub spinup_steps: usize,
    pub guess_mean: f64,
    pub guess_std: f64,
}

pub fn make_lorenz96(
    dim: usize,
    forcing: f64,
    dt: f64,
    process_noise_std: f64,
    sigma_obs: f64,
) -> Result<Lorenz96> {
    if dim < 4 {
        return Err(Error::invalid("dim", "Lorenz-96 needs at least 4 coordinates"));
    }
    require_positive("dt", dt)?;
    require_positive("sigma_obs", sigma_obs)?;
    if !(process_noise_std >= 0.0 && process_noise_std.is_finite()) {
        return Err(Error::invalid("process_noise_std", "must be non-negative"));
    }
    if !forcing.is_finite() {
        return Err(Error::invalid("forcing", "must be finite"));
    }
    Ok(Lorenz96 {
        dim,
        forcing,
        dt,
        process_noise_std,
        sigma_obs,
        spinup_steps: 200,
        guess_mean: 0.0,
        guess_std: 1.0,
    })
}

impl Lorenz96 {
    pub fn rhs(&self, z: &[f64], out: &mut [f64]) {
        lorenz96_rhs(z, self.forcing, out);
    }

    pub fn step_deterministic(&self, z: &[f64]) -> Vec<f64> {
        rk4_step(|a, b| self.rhs(a, b), z, self.dt)
    }
}

impl StateSpaceModel for Lorenz96 {
    fn state_dim(&self) -> usize {
        self.dim
    }

    fn dynamics(&self, state: &[f64], noise: &[f64], out: &mut [f64]) {
        let next = self.step_deterministic(state);
        for ((o, z), v) in out.iter_mut().zip(next).zip(noise) {
            *o = z + self.process_noise_std * v;
        }
    }

    fn observation_mean(&self, state: &[f64], out: &mut [f64]) {
        out.copy_from_slice(state);
    }

    fn obs_noise_std(&self) -> f64 {
        self.sigma_obs
    }

    fn log_likelihood_grad(&self, state: &[f64], obs: &[f64], out: &mut [f64]) {
        let var = self.sigma_obs * self.sigma_obs;
        for ((o, x), y) in out.iter_mut().zip(state).zip(obs) {
            *o = (y - x) / var;
        }
    }

    fn sample_initial_guess(&self, rng: &mut dyn RngCore, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.guess_mean + self.guess_std * standard_normal(rng);
        }
    }

    fn sample_initial_reference(&self, rng: &mut dyn RngCore, out: &mut [f64]) {
        fill_standard_normal(rng, out);
        let mut z = out.to_vec();
        for _ in 0..self.spinup_steps {
            z = self.step_deterministic(&z);
        }
        out.copy_from_slice(&z);
    }
}

/// A simulated truth trajectory with its observations. Time indices are
/// 1-based: `states[k - 1]` is `X_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceRun {
    pub states: Vec<Vec<f64>>,
    pub observations: Vec<Vec<f64>>,
    pub mutation_times: Vec<usize>,
}

impl ReferenceRun {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Simulates `steps` states and observations.
///
/// With a mutation period `p`, the state at every time `k` that is a multiple of
/// `p` is replaced by its negation before it is observed and propagated.
pub fn simulate_reference(
    model: &dyn StateSpaceModel,
    steps: usize,
    mutation_period: Option<usize>,
    rng: &mut dyn RngCore,
) -> Result<ReferenceRun> {
    if steps == 0 {
        return Err(Error::invalid("steps", "must be at least 1"));
    }
    if mutation_period == Some(0) {
        return Err(Error::invalid("mutation_period", "must be at least 1"));
    }
    let d = model.state_dim();
    let mut states = Vec::with_capacity(steps);
    let mut observations = Vec::with_capacity(steps);
    let mut mutation_times = Vec::new();

    let mut x = vec![0.0; d];
    model.sample_initial_reference(rng, &mut x);
    let mut noise = vec![0.0; model.noise_dim()];
    for k in 1..=steps {
        if let Some(p) = mutation_period {
            if k % p == 0 {
                x.iter_mut().for_each(|v| *v = -*v);
                mutation_times.push(k);
            }
        }
        let mut y = vec![0.0; model.obs_dim()];
        model.sample_observation(&x, rng, &mut y);
        states.push(x.clone());
        observations.push(y);
        if k < steps {
            model.sample_dynamics_noise(rng, &mut noise);
            let mut next = vec![0.0; d];
            model.dynamics(&x, &noise, &mut next);
            x = next;
        }
    }
    Ok(ReferenceRun {
        states,
        observations,
        mutation_times,
    })
}
