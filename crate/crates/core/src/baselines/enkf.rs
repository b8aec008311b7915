use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::RngCore;

use crate::ensemble::StateEnsemble;
use crate::error::{Error, Result};
#[allow(unused_imports)]
use crate::math::Float as _;
use crate::models::StateSpaceModel;
use crate::rng::standard_normal;

/// Ridge added to the innovation covariance before inversion.
pub const INNOVATION_RIDGE: f64 = 1e-10;

/// Stochastic (perturbed-observation) EnKF analysis.
///
/// Each member is shifted by `K (y + ηᵢ − h(xᵢ))`, `ηᵢ ~ N(0, R)`, with the gain
/// built from ensemble cross-covariances of states and predicted observations.
pub fn enkf_analysis(
    forecast: &StateEnsemble,
    model: &dyn StateSpaceModel,
    y: &[f64],
    rng: &mut dyn RngCore,
) -> Result<StateEnsemble> {
    let n = forecast.len();
    if n < 2 {
        return Err(Error::EnsembleTooSmall { required: 2, found: n });
    }
    let d = forecast.dim();
    let p = model.obs_dim();
    if y.len() != p {
        return Err(Error::DimensionMismatch { expected: p, found: y.len() });
    }

    let mut hx = vec![0.0; n * p];
    for (i, x) in forecast.particles().enumerate() {
        model.observation_mean(x, &mut hx[i * p..(i + 1) * p]);
    }
    let x_mat = DMatrix::from_row_slice(n, d, forecast.as_flat());
    let h_mat = DMatrix::from_row_slice(n, p, &hx);
    let x_mean = x_mat.row_mean();
    let h_mean = h_mat.row_mean();
    let mut xa = x_mat.clone();
    let mut ha = h_mat.clone();
    for mut row in xa.row_iter_mut() {
        row -= &x_mean;
    }
    for mut row in ha.row_iter_mut() {
        row -= &h_mean;
    }
    let scale = 1.0 / (n as f64 - 1.0);
    let p_xh = xa.transpose() * &ha * scale;
    let r = model.obs_noise_std().powi(2);
    let mut s = ha.transpose() * &ha * scale;
    for j in 0..p {
        s[(j, j)] += r + INNOVATION_RIDGE;
    }
    let s_inv = s.try_inverse().ok_or(Error::SingularInnovation)?;
    let gain = p_xh * s_inv;

    let sd = model.obs_noise_std();
    let y = DVector::from_column_slice(y);
    let mut out = forecast.clone();
    let mut innov = DVector::zeros(p);
    for i in 0..n {
        for j in 0..p {
            innov[j] = y[j] + sd * standard_normal(rng) - hx[i * p + j];
        }
        let dx = &gain * &innov;
        for (x, v) in out.particle_mut(i).iter_mut().zip(dx.iter()) {
            *x += v;
        }
    }
    Ok(out)
}

/// Forecast every member through the dynamics, then analyse.
pub fn enkf_step(
    ensemble: &StateEnsemble,
    model: &dyn StateSpaceModel,
    y: &[f64],
    rng: &mut dyn RngCore,
) -> Result<StateEnsemble> {
    let forecast = propagate(ensemble, model, rng);
    enkf_analysis(&forecast, model, y, rng)
}

pub(crate) fn propagate(ensemble: &StateEnsemble, model: &dyn StateSpaceModel, rng: &mut dyn RngCore) -> StateEnsemble {
    let mut out = StateEnsemble::zeros(ensemble.len(), ensemble.dim());
    let mut noise: Vec<f64> = vec![0.0; model.noise_dim()];
    for (o, x) in out.particles_mut().zip(ensemble.particles()) {
        model.sample_dynamics_noise(rng, &mut noise);
        model.dynamics(x, &noise, o);
    }
    out
}
