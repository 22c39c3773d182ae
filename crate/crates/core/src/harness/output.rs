//! CSV files: long-form trajectories, per-(policy, horizon) summary, diagnostics.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::OutputConfig;
use super::stats::{iqr, median};
use super::svg::emit_svg;
use super::ExperimentResult;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongRow {
    pub policy: String,
    pub horizon: usize,
    pub seed: u64,
    pub round: usize,
    pub cum_regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub policy: String,
    pub horizon: usize,
    pub median: f64,
    pub iqr: f64,
}

#[derive(Debug, Clone, Serialize)]
struct DiagnosticRow<'a> {
    policy: &'a str,
    horizon: usize,
    seed: u64,
    key: &'a str,
    value: String,
}

const LONG_HEADER: [&str; 5] = ["policy", "horizon", "seed", "round", "cum_regret"];
const SUMMARY_HEADER: [&str; 4] = ["policy", "horizon", "median", "iqr"];
const DIAGNOSTIC_HEADER: [&str; 5] = ["policy", "horizon", "seed", "key", "value"];

/// Paths written by [`emit_csv`].
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFiles {
    pub long: PathBuf,
    pub summary: PathBuf,
    pub diagnostics: PathBuf,
}

impl OutputFiles {
    /// `x.csv` → `x.csv`, `x_summary.csv`, `x_diagnostics.csv`.
    pub fn for_long(path: &Path) -> Self {
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self {
            long: path.to_path_buf(),
            summary: path.with_file_name(format!("{stem}_summary.csv")),
            diagnostics: path.with_file_name(format!("{stem}_diagnostics.csv")),
        }
    }
}

/// Median and IQR of the final regret for every (policy, horizon), in result order.
pub fn summarize(result: &ExperimentResult) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for policy in &result.policies {
        for &horizon in &result.horizons {
            let finals = result.final_regrets(policy, horizon);
            if finals.is_empty() {
                continue;
            }
            rows.push(SummaryRow {
                policy: policy.clone(),
                horizon,
                median: median(&finals),
                iqr: iqr(&finals),
            });
        }
    }
    rows
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    // headers are written by hand so that empty tables still get one
    Ok(csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(file))
}

fn write_table<T: Serialize>(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = T>,
) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| Error::csv(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes the long-form file at `path` plus its summary and diagnostics companions.
pub fn emit_csv(result: &ExperimentResult, path: &Path) -> Result<OutputFiles> {
    let files = OutputFiles::for_long(path);
    write_table(&files.long, &LONG_HEADER, result.long_rows())?;
    write_table(&files.summary, &SUMMARY_HEADER, summarize(result))?;
    let diagnostics = result.records.iter().flat_map(|rec| {
        let final_regret = (
            "final_regret",
            serde_json::Value::from(rec.final_regret).to_string(),
        );
        std::iter::once(final_regret)
            .chain(
                rec.diagnostics
                    .iter()
                    .map(|(k, v)| (k.as_str(), v.to_string())),
            )
            .map(|(key, value)| DiagnosticRow {
                policy: &rec.policy,
                horizon: rec.horizon,
                seed: rec.seed,
                key,
                value,
            })
    });
    write_table(&files.diagnostics, &DIAGNOSTIC_HEADER, diagnostics)?;
    Ok(files)
}

/// Writes the CSV files (and the SVG plot, if configured) under `output.dir`.
pub fn write_outputs(result: &ExperimentResult, output: &OutputConfig) -> Result<Vec<PathBuf>> {
    let files = emit_csv(result, &output.dir.join(&output.csv))?;
    let mut written = vec![files.long, files.summary, files.diagnostics];
    if let Some(svg) = &output.svg {
        let path = output.dir.join(svg);
        emit_svg(result, &path)?;
        written.push(path);
    }
    Ok(written)
}

fn read_table<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    reader
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| Error::csv(path, e))
}

pub fn read_long_csv(path: &Path) -> Result<Vec<LongRow>> {
    read_table(path)
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    read_table(path)
}

/// Median final regret per horizon for every policy in a summary table.
pub(crate) fn medians_by_policy(rows: &[SummaryRow]) -> BTreeMap<&str, Vec<(usize, f64)>> {
    let mut out: BTreeMap<&str, Vec<(usize, f64)>> = BTreeMap::new();
    for r in rows {
        out.entry(&r.policy)
            .or_default()
            .push((r.horizon, r.median));
    }
    for v in out.values_mut() {
        v.sort_by_key(|p| p.0);
    }
    out
}

/// Log–log slope of the median regret per policy, read from a summary table.
pub fn slopes_from_summary(rows: &[SummaryRow]) -> Vec<(String, Result<f64>)> {
    medians_by_policy(rows)
        .into_iter()
        .map(|(policy, points)| {
            let (n, m): (Vec<f64>, Vec<f64>) = points.iter().map(|&(h, m)| (h as f64, m)).unzip();
            (policy.to_string(), super::loglog_slope(&n, &m))
        })
        .collect()
}
