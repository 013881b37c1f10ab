//! CSV and JSON writers.
//!
//! `results.csv` columns: experiment, sweep_variable, sweep_value, trial, seed,
//! metric, value, wall_ms.
//! `summary.csv` columns: experiment, sweep_variable, sweep_value, metric,
//! trials, mean, median, mean_db, median_db.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimator::nmse_db;

use super::config::ExperimentConfig;
use super::runner::ResultRecord;

pub const RESULTS_HEADER: &str = "experiment,sweep_variable,sweep_value,trial,seed,metric,value,wall_ms";
pub const SUMMARY_HEADER: &str = "experiment,sweep_variable,sweep_value,metric,trials,mean,median,mean_db,median_db";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn results_csv(rows: &[ResultRecord]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{:e},{:.3}\n",
            r.experiment, r.sweep_variable, r.sweep_value, r.trial, r.seed, r.metric, r.value, r.wall_ms
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub experiment: String,
    pub sweep_variable: String,
    pub sweep_value: f64,
    pub metric: String,
    pub trials: usize,
    pub mean: f64,
    pub median: f64,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Mean and median per (sweep value, metric), in first-appearance order.
pub fn summarize(rows: &[ResultRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(u64, &str)> = Vec::new();
    let mut groups: std::collections::HashMap<(u64, &str), (usize, Vec<f64>)> = Default::default();
    for (i, r) in rows.iter().enumerate() {
        let key = (r.sweep_value.to_bits(), r.metric.as_str());
        groups
            .entry(key)
            .or_insert_with(|| {
                keys.push(key);
                (i, Vec::new())
            })
            .1
            .push(r.value);
    }
    keys.iter()
        .map(|k| {
            let (first, values) = &groups[k];
            let r = &rows[*first];
            SummaryRow {
                experiment: r.experiment.to_string(),
                sweep_variable: r.sweep_variable.to_string(),
                sweep_value: r.sweep_value,
                metric: r.metric.clone(),
                trials: values.len(),
                mean: values.iter().sum::<f64>() / values.len() as f64,
                median: median(values),
            }
        })
        .collect()
}

pub fn summary_csv(summary: &[SummaryRow]) -> String {
    let mut out = String::new();
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for s in summary {
        out.push_str(&format!(
            "{},{},{},{},{},{:e},{:e},{:.4},{:.4}\n",
            s.experiment,
            s.sweep_variable,
            s.sweep_value,
            s.metric,
            s.trials,
            s.mean,
            s.median,
            nmse_db(s.mean),
            nmse_db(s.median)
        ));
    }
    out
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: &'static str,
    pub master_seed: u64,
    pub trials: usize,
    pub threads: usize,
    pub rows: usize,
    pub started_at: String,
    pub finished_at: String,
    pub config: &'a ExperimentConfig,
}

/// Writes `results.csv`, `summary.csv` and `manifest.json` into `dir`.
pub fn write_outputs(dir: &Path, rows: &[ResultRecord], manifest: &Manifest<'_>) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let write = |name: &str, body: &str| -> Result<()> {
        let path = dir.join(name);
        let mut f = fs::File::create(&path).map_err(io_err(&path))?;
        f.write_all(body.as_bytes()).map_err(io_err(&path))
    };
    write("results.csv", &results_csv(rows))?;
    write("summary.csv", &summary_csv(&summarize(rows)))?;
    let json = serde_json::to_string_pretty(manifest).map_err(|e| Error::Config(e.to_string()))?;
    write("manifest.json", &(json + "\n"))
}
