//! Reference filters: exact Kalman, stochastic EnKF and auxiliary particle
//! filter.

mod apf;
mod enkf;
mod kalman;
mod resample;

use alloc::vec::Vec;

pub use apf::{apf_initial, apf_step, ApfOutput, WeightedParticles};
pub use enkf::{enkf_analysis, enkf_step, INNOVATION_RIDGE};
pub use kalman::{kalman_filter, kalman_predict, kalman_step, kalman_update, Gaussian, LinearGaussianSpec};
pub use resample::systematic_resample;

use crate::assimilator::{sample_initial_ensemble, AssimilationRecord};
use crate::error::{Error, Result};
use crate::models::{ReferenceRun, StateSpaceModel};
use crate::rng::{purpose, substream};

/// Exact filtering distributions as records.
pub fn run_kalman(spec: &LinearGaussianSpec, run: &ReferenceRun) -> Result<Vec<AssimilationRecord>> {
    let beliefs = kalman_filter(spec, &run.observations)?;
    beliefs
        .iter()
        .enumerate()
        .map(|(i, b)| AssimilationRecord::from_gaussian(i + 1, b, run))
        .collect()
}

pub fn run_enkf(
    model: &dyn StateSpaceModel,
    run: &ReferenceRun,
    ensemble_size: usize,
    seed: u64,
    keep_snapshots: bool,
) -> Result<Vec<AssimilationRecord>> {
    if ensemble_size < 2 {
        return Err(Error::EnsembleTooSmall {
            required: 2,
            found: ensemble_size,
        });
    }
    let mut ensemble = sample_initial_ensemble(model, ensemble_size, seed);
    let mut records = Vec::with_capacity(run.len());
    for (idx, y) in run.observations.iter().enumerate() {
        let k = idx + 1;
        let mut rng = substream(seed, &[purpose::ENKF, k as u64]);
        ensemble = if k == 1 {
            enkf_analysis(&ensemble, model, y, &mut rng)
        } else {
            enkf_step(&ensemble, model, y, &mut rng)
        }
        .map_err(|e| e.at_step(k))?;
        records.push(AssimilationRecord::from_ensemble(k, &ensemble, run, keep_snapshots)?);
    }
    Ok(records)
}

pub fn run_apf(
    model: &dyn StateSpaceModel,
    run: &ReferenceRun,
    ensemble_size: usize,
    seed: u64,
    keep_snapshots: bool,
) -> Result<Vec<AssimilationRecord>> {
    if ensemble_size < 2 {
        return Err(Error::EnsembleTooSmall {
            required: 2,
            found: ensemble_size,
        });
    }
    let mut ensemble = sample_initial_ensemble(model, ensemble_size, seed);
    let mut records = Vec::with_capacity(run.len());
    for (idx, y) in run.observations.iter().enumerate() {
        let k = idx + 1;
        let mut rng = substream(seed, &[purpose::APF, k as u64]);
        let out = if k == 1 {
            apf_initial(&ensemble, model, y, &mut rng)
        } else {
            apf_step(&ensemble, model, y, &mut rng)
        }
        .map_err(|e| e.at_step(k))?;
        ensemble = out.particles;
        records.push(AssimilationRecord::from_ensemble(k, &ensemble, run, keep_snapshots)?);
    }
    Ok(records)
}
