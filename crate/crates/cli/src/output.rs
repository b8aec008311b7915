//! CSV artifacts and score-network checkpoints.
//!
//! | file | columns |
//! |------|---------|
//! | `trajectory.csv` | `k`, `ref_0..`, `obs_0..`, `mean_0..`, `std_0..` |
//! | `metrics.csv`, `metrics_<method>.csv` | `k`, `rmse`, `spread`, `coverage`, `crps` |
//! | `summary.csv` | `method`, `rmse`, `spread`, `coverage`, `crps` (time averages) |
//! | `comparison.csv` | `k`, then `<method>_<metric>` for every method and metric |
//!
//! Floats are written in scientific notation with 17 significant digits, so
//! parsing a cell gives back the exact `f64`.

use std::fs;
use std::path::{Path, PathBuf};

use ssls_core::metrics::MetricRow;
use ssls_core::score_net::{decode_checkpoint, encode_checkpoint, ScoreNetwork};
use ssls_core::AssimilationRecord;

use crate::config::Method;
use crate::error::{CliError, Result};

pub const METRIC_NAMES: [&str; 4] = ["rmse", "spread", "coverage", "crps"];

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn metric_values(row: &MetricRow) -> [f64; 4] {
    [row.rmse, row.spread, row.coverage, row.crps]
}

/// Time averages of the per-step metrics.
pub fn time_average(records: &[AssimilationRecord]) -> [f64; 4] {
    let mut acc = [0.0; 4];
    for r in records {
        for (a, v) in acc.iter_mut().zip(metric_values(&r.metrics)) {
            *a += v;
        }
    }
    acc.map(|a| a / records.len().max(1) as f64)
}

struct Table {
    path: PathBuf,
    writer: csv::Writer<fs::File>,
}

impl Table {
    fn create(path: PathBuf) -> Result<Self> {
        let writer = csv::Writer::from_path(&path).map_err(|source| CliError::Csv {
            path: path.clone(),
            source,
        })?;
        Ok(Self { path, writer })
    }

    fn row<I, S>(&mut self, cells: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(cells).map_err(|source| CliError::Csv {
            path: self.path.clone(),
            source,
        })
    }

    fn finish(mut self) -> Result<()> {
        self.writer.flush().map_err(|source| CliError::Io {
            path: self.path.clone(),
            source,
        })
    }
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

pub fn write_trajectory(path: PathBuf, records: &[AssimilationRecord]) -> Result<()> {
    let d = records.first().map_or(0, |r| r.mean.len());
    let dy = records.first().map_or(0, |r| r.observation.len());
    let mut t = Table::create(path)?;
    let mut header = vec!["k".to_string()];
    header.extend((0..d).map(|i| format!("ref_{i}")));
    header.extend((0..dy).map(|i| format!("obs_{i}")));
    header.extend((0..d).map(|i| format!("mean_{i}")));
    header.extend((0..d).map(|i| format!("std_{i}")));
    t.row(&header)?;
    for r in records {
        let mut cells = vec![r.k.to_string()];
        for v in r.reference.iter().chain(&r.observation).chain(&r.mean).chain(&r.std) {
            cells.push(format_float(*v));
        }
        t.row(&cells)?;
    }
    t.finish()
}

pub fn write_metrics(path: PathBuf, records: &[AssimilationRecord]) -> Result<()> {
    let mut t = Table::create(path)?;
    t.row(["k"].iter().chain(&METRIC_NAMES))?;
    for r in records {
        let mut cells = vec![r.k.to_string()];
        cells.extend(metric_values(&r.metrics).map(format_float));
        t.row(&cells)?;
    }
    t.finish()
}

pub fn write_summary(path: PathBuf, runs: &[(Method, &[AssimilationRecord])]) -> Result<()> {
    let mut t = Table::create(path)?;
    t.row(["method"].iter().chain(&METRIC_NAMES))?;
    for (method, records) in runs {
        let mut cells = vec![method.name().to_string()];
        cells.extend(time_average(records).map(format_float));
        t.row(&cells)?;
    }
    t.finish()
}

/// Joins per-method metrics by time step. All runs must cover the same steps.
pub fn write_comparison(path: PathBuf, runs: &[(Method, &[AssimilationRecord])]) -> Result<()> {
    let mut t = Table::create(path)?;
    let mut header = vec!["k".to_string()];
    for (method, _) in runs {
        header.extend(METRIC_NAMES.iter().map(|m| format!("{method}_{m}")));
    }
    t.row(&header)?;
    let steps = runs.first().map_or(0, |(_, r)| r.len());
    for i in 0..steps {
        let mut cells = vec![runs[0].1[i].k.to_string()];
        for (_, records) in runs {
            cells.extend(metric_values(&records[i].metrics).map(format_float));
        }
        t.row(&cells)?;
    }
    t.finish()
}

pub fn save_checkpoint(path: &Path, net: &ScoreNetwork) -> Result<()> {
    fs::write(path, encode_checkpoint(net)).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<ScoreNetwork> {
    let bytes = fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(decode_checkpoint(&bytes)?)
}
