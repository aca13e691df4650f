//! Rendering and re-loading of result records.
//!
//! Records travel as JSON lines (one record per line, bit-exact
//! round-trip through the loader) or CSV (fixed column order given by
//! the `ResultRecord` field order, `wall_ms` last). The text summary
//! aggregates a record set into run statistics plus a per-property
//! pass/fail table; failures name the offending seeds.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::experiment::ResultRecord;

/// Output format for rendered records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    /// One header row plus one data row per seed.
    Csv,
    /// One JSON object per line; round-trips bit-exactly.
    JsonLines,
    /// Human-readable run statistics and property table.
    TextSummary,
}

/// Loads records from a `.jsonl` or `.csv` file (detected by extension).
pub fn load_records(path: &Path) -> anyhow::Result<Vec<ResultRecord>> {
    let extension = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    let records = match extension.as_str() {
        "jsonl" | "json" => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read records file {}", path.display()))?;
            let mut records = Vec::new();
            for (k, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let record: ResultRecord = serde_json::from_str(line)
                    .with_context(|| format!("{}:{}: malformed record", path.display(), k + 1))?;
                records.push(record);
            }
            records
        }
        "csv" => {
            let mut reader = csv::Reader::from_path(path)
                .with_context(|| format!("cannot read records file {}", path.display()))?;
            let mut records = Vec::new();
            for row in reader.deserialize() {
                let record: ResultRecord =
                    row.with_context(|| format!("{}: malformed record", path.display()))?;
                records.push(record);
            }
            records
        }
        other => bail!(
            "unsupported records extension `.{other}` for {} (expected .jsonl or .csv)",
            path.display()
        ),
    };
    if records.is_empty() {
        bail!("records file {} holds no records", path.display());
    }
    Ok(records)
}

/// Renders records in the requested format.
pub fn render(records: &[ResultRecord], format: ReportFormat) -> anyhow::Result<Vec<u8>> {
    match format {
        ReportFormat::Csv => csv_bytes(records),
        ReportFormat::JsonLines => json_lines_bytes(records),
        ReportFormat::TextSummary => Ok(text_summary(records).into_bytes()),
    }
}

/// CSV with the `ResultRecord` field order as columns; empty cells for
/// metrics a seed did not produce.
pub fn csv_bytes(records: &[ResultRecord]) -> anyhow::Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for record in records {
        writer.serialize(record).context("cannot encode record as CSV")?;
    }
    writer
        .into_inner()
        .context("cannot finish CSV buffer")
        .map_err(Into::into)
}

/// One JSON object per line, in record order.
pub fn json_lines_bytes(records: &[ResultRecord]) -> anyhow::Result<Vec<u8>> {
    let mut out = Vec::new();
    for record in records {
        serde_json::to_writer(&mut out, record).context("cannot encode record as JSON")?;
        out.push(b'\n');
    }
    Ok(out)
}

/// One aggregated metric over the records, with the worst seed named.
struct PropertyRow {
    name: &'static str,
    tolerance: f64,
    values: Vec<(u64, f64)>,
}

impl PropertyRow {
    fn gather(
        name: &'static str,
        tolerance: f64,
        records: &[ResultRecord],
        pick: fn(&ResultRecord) -> Option<f64>,
    ) -> Self {
        let values = records
            .iter()
            .filter_map(|r| pick(r).map(|v| (r.seed, v)))
            .collect();
        PropertyRow { name, tolerance, values }
    }

    fn worst(&self) -> Option<(u64, f64)> {
        self.values
            .iter()
            .copied()
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }

    fn failures(&self) -> usize {
        self.values
            .iter()
            .filter(|(_, v)| !(v.is_finite() && *v <= self.tolerance))
            .count()
    }
}

fn stats(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    };
    Some((median, *sorted.last().unwrap()))
}

/// Human-readable run summary: seed counts, error metrics (ground-truth
/// NMSE and the solver's own `1/η` prediction reported separately, the
/// scalar-channel prediction when present), then a per-property table.
pub fn text_summary(records: &[ResultRecord]) -> String {
    let mut out = String::new();
    let ok: Vec<&ResultRecord> = records.iter().filter(|r| r.is_ok()).collect();
    let failed: Vec<&ResultRecord> = records.iter().filter(|r| !r.is_ok()).collect();

    let _ = writeln!(
        out,
        "records: {} seeds — {} ok, {} failed",
        records.len(),
        ok.len(),
        failed.len()
    );
    for r in failed.iter().take(5) {
        let _ = writeln!(out, "  seed {}: {}", r.seed, r.status);
    }
    if failed.len() > 5 {
        let _ = writeln!(out, "  … and {} more failed seeds", failed.len() - 5);
    }

    let converged = ok.iter().filter(|r| r.converged == Some(true)).count();
    let iters: Vec<f64> = ok.iter().filter_map(|r| r.iterations).map(|v| v as f64).collect();
    if let Some((median, max)) = stats(&iters) {
        let _ = writeln!(
            out,
            "converged: {converged}/{} ok seeds; iterations median {median:.0}, max {max:.0}",
            ok.len()
        );
    }

    let nmse: Vec<f64> = ok.iter().filter_map(|r| r.nmse).collect();
    if let Some((median, max)) = stats(&nmse) {
        let _ = writeln!(out, "signal nmse (vs ground truth): median {median:.6e}, max {max:.6e}");
    }
    let eta_inv: Vec<f64> = ok.iter().filter_map(|r| r.eta_inv_mean).collect();
    if let Some((median, max)) = stats(&eta_inv) {
        let _ = writeln!(out, "predicted mse (mean 1/eta):    median {median:.6e}, max {max:.6e}");
    }
    let replica: Vec<f64> = ok.iter().filter_map(|r| r.replica_mse).collect();
    if let Some((median, max)) = stats(&replica) {
        let _ = writeln!(out, "replica mse prediction:        median {median:.6e}, max {max:.6e}");
        let gaps: Vec<f64> = ok
            .iter()
            .filter_map(|r| match (r.eta_inv_mean, r.replica_mse) {
                (Some(p), Some(q)) if q > 0.0 => Some((p - q).abs() / q),
                _ => None,
            })
            .collect();
        if let Some((median, max)) = stats(&gaps) {
            let _ = writeln!(
                out,
                "|predicted − replica| / replica: median {median:.6e}, max {max:.6e}"
            );
        }
    }

    let rows = [
        PropertyRow::gather("mean-gap", 1e-8, records, |r| r.mean_gap),
        PropertyRow::gather("eta-gap", 1e-8, records, |r| r.eta_gap),
        PropertyRow::gather("precision-sum-gap", 1e-8, records, |r| r.precision_sum_gap),
        PropertyRow::gather("combination-gap", 1e-8, records, |r| r.combination_gap),
        PropertyRow::gather("stationarity", 1e-6, records, |r| r.stationarity),
        PropertyRow::gather("posterior-gap", 1e-8, records, |r| r.posterior_gap),
    ];

    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<19} {:>9} {:>5} {:>12} {:>10}  verdict",
        "property", "tol", "n", "worst", "worst-seed"
    );
    for row in &rows {
        if row.values.is_empty() {
            let _ = writeln!(
                out,
                "{:<19} {:>9.1e} {:>5} {:>12} {:>10}  n/a",
                row.name, row.tolerance, 0, "—", "—"
            );
            continue;
        }
        let (seed, worst) = row.worst().unwrap();
        let failures = row.failures();
        let verdict = if failures == 0 {
            "pass".to_string()
        } else {
            format!("FAIL ({failures} seeds)")
        };
        let _ = writeln!(
            out,
            "{:<19} {:>9.1e} {:>5} {:>12.3e} {:>10}  {}",
            row.name,
            row.tolerance,
            row.values.len(),
            worst,
            seed,
            verdict
        );
    }
    out
}
