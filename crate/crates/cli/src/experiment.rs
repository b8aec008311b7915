//! Running configured experiments and writing their artifacts.

use std::path::Path;

use ssls_core::baselines::{run_apf, run_enkf, run_kalman};
use ssls_core::models::simulate_reference;
use ssls_core::rng::{purpose, substream};
use ssls_core::score_net::ScoreNetwork;
use ssls_core::{AssimilationRecord, ReferenceRun, Ssls};

use crate::config::{ExperimentConfig, Method, Model};
use crate::error::{CliError, Result};
use crate::output;

/// Records of one method on one reference run.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub method: Method,
    pub records: Vec<AssimilationRecord>,
    /// Final score network (SSLS only).
    pub network: Option<ScoreNetwork>,
}

/// The reference trajectory and observations for `config.seed`.
pub fn simulate(config: &ExperimentConfig, model: &Model) -> Result<ReferenceRun> {
    let mut rng = substream(config.seed, &[purpose::REFERENCE]);
    Ok(simulate_reference(
        model.as_dyn(),
        config.steps(),
        config.mutation_period,
        &mut rng,
    )?)
}

pub fn run_method(config: &ExperimentConfig, model: &Model, run: &ReferenceRun, method: Method) -> Result<MethodRun> {
    let m = model.as_dyn();
    let n = config.ensemble_size();
    let keep = config.ssls.keep_snapshots.unwrap_or(false);
    let mut network = None;
    let records = match method {
        Method::Ssls => {
            let mut filter = Ssls::new(m, config.ssls_config()?)?;
            let records = filter.run(run)?;
            network = filter.score_network().cloned();
            records
        }
        Method::Enkf => run_enkf(m, run, n, config.seed, keep)?,
        Method::Apf => run_apf(m, run, n, config.seed, keep)?,
        Method::Kalman => {
            let spec = m
                .linear_gaussian()
                .ok_or_else(|| CliError::config("method", "`kalman` needs a linear-Gaussian model"))?;
            run_kalman(&spec, run)?
        }
    };
    Ok(MethodRun {
        method,
        records,
        network,
    })
}

fn write_checkpoint(config: &ExperimentConfig, dir: &Path, run: &MethodRun) -> Result<()> {
    if config.ssls.checkpoint.unwrap_or(false) {
        if let Some(net) = &run.network {
            output::save_checkpoint(&dir.join("score_net.bin"), net)?;
        }
    }
    Ok(())
}

/// Single-method run writing `trajectory.csv`, `metrics.csv` and
/// `summary.csv` to `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<MethodRun> {
    let method = config.single_method()?;
    config.check_methods(&[method])?;
    let model = config.build_model()?;
    if method == Method::Ssls {
        config.ssls_config()?;
    }
    let run = simulate(config, &model)?;
    let result = run_method(config, &model, &run, method)?;
    output::create_dir(out_dir)?;
    output::write_trajectory(out_dir.join("trajectory.csv"), &result.records)?;
    output::write_metrics(out_dir.join("metrics.csv"), &result.records)?;
    output::write_summary(out_dir.join("summary.csv"), &[(method, &result.records)])?;
    write_checkpoint(config, out_dir, &result)?;
    Ok(result)
}

/// Runs every listed method on one shared reference run and writes
/// `metrics_<method>.csv` per method plus the joined `comparison.csv`.
pub fn compare_methods(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<MethodRun>> {
    let methods = config.compared_methods()?;
    config.check_methods(&methods)?;
    let model = config.build_model()?;
    if methods.contains(&Method::Ssls) {
        config.ssls_config()?;
    }
    let run = simulate(config, &model)?;
    let results = methods
        .iter()
        .map(|&m| run_method(config, &model, &run, m))
        .collect::<Result<Vec<_>>>()?;
    output::create_dir(out_dir)?;
    for r in &results {
        output::write_metrics(out_dir.join(format!("metrics_{}.csv", r.method)), &r.records)?;
        write_checkpoint(config, out_dir, r)?;
    }
    let joined: Vec<(Method, &[AssimilationRecord])> =
        results.iter().map(|r| (r.method, r.records.as_slice())).collect();
    output::write_comparison(out_dir.join("comparison.csv"), &joined)?;
    Ok(results)
}
