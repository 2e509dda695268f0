//! Sweep reports and accuracy-constrained row selection.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orchestrator::WorkloadMetrics;

/// One grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub threshold: f64,
    pub tau: f64,
    pub accuracy: f64,
    pub mean_latency: f64,
    pub p50_latency: f64,
    pub p95_latency: f64,
    pub p99_latency: f64,
    pub mean_l_com: f64,
    pub mean_l_tra: f64,
    /// Per non-final tier.
    pub offload_rate: Vec<f64>,
    pub mean_executed_layers: f64,
    pub mean_depth_fraction: f64,
    pub target_met: Option<bool>,
}

impl SweepRow {
    pub fn new(threshold: f64, tau: f64, m: &WorkloadMetrics) -> Self {
        Self {
            threshold,
            tau,
            accuracy: m.accuracy,
            mean_latency: m.mean_latency,
            p50_latency: m.p50_latency,
            p95_latency: m.p95_latency,
            p99_latency: m.p99_latency,
            mean_l_com: m.mean_l_com,
            mean_l_tra: m.mean_l_tra,
            offload_rate: m.offload_rate.clone(),
            mean_executed_layers: m.mean_executed_layers,
            mean_depth_fraction: m.mean_depth_fraction,
            target_met: m.target_met,
        }
    }
}

/// All grid cells, ordered by threshold then tau, both descending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub seed: u64,
    pub config_hash: String,
    pub tasks: usize,
    pub tiers: usize,
    pub accuracy_target: Option<f64>,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    /// Row for `(threshold, tau)`, if present.
    pub fn row(&self, threshold: f64, tau: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.threshold == threshold && r.tau == tau)
    }

    pub fn csv_header(&self) -> Vec<String> {
        let mut cols: Vec<String> = [
            "threshold",
            "tau",
            "accuracy",
            "mean_latency_ms",
            "p50_latency_ms",
            "p95_latency_ms",
            "p99_latency_ms",
            "mean_l_com_ms",
            "mean_l_tra_ms",
        ]
        .map(String::from)
        .into();
        cols.extend((1..self.tiers).map(|i| format!("offload_rate_tier{i}")));
        cols.extend(["mean_executed_layers", "mean_depth_fraction", "target_met"].map(String::from));
        cols
    }

    /// Comma-separated table followed by `#` metadata lines.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.csv_header()).expect("in-memory write");
        for r in &self.rows {
            let mut rec: Vec<String> = [
                r.threshold,
                r.tau,
                r.accuracy,
                r.mean_latency,
                r.p50_latency,
                r.p95_latency,
                r.p99_latency,
                r.mean_l_com,
                r.mean_l_tra,
            ]
            .iter()
            .map(f64::to_string)
            .collect();
            rec.extend(r.offload_rate.iter().map(f64::to_string));
            rec.push(r.mean_executed_layers.to_string());
            rec.push(r.mean_depth_fraction.to_string());
            rec.push(r.target_met.map(|b| b.to_string()).unwrap_or_default());
            w.write_record(&rec).expect("in-memory write");
        }
        let mut out = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8");
        writeln!(out, "# seed={}", self.seed).unwrap();
        writeln!(out, "# config_hash={}", self.config_hash).unwrap();
        writeln!(out, "# tasks={}", self.tasks).unwrap();
        if let Some(g) = self.accuracy_target {
            writeln!(out, "# accuracy_target={g}").unwrap();
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("report: {e}")))
    }

    /// Write `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (ext, body) in [("csv", self.to_csv()), ("json", self.to_json())] {
            let path = dir.join(format!("{stem}.{ext}"));
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    /// Index into the report rows.
    Row(usize),
    Infeasible,
}

/// Rows meeting an accuracy target and the fastest of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub target: f64,
    pub passes: Vec<bool>,
    pub selection: Selection,
}

/// Flag rows with `accuracy >= target` and pick the passing row with the
/// lowest mean latency (earliest row on ties).
pub fn report_objective(report: &SweepReport, target: f64) -> Objective {
    let passes: Vec<bool> = report.rows.iter().map(|r| r.accuracy >= target).collect();
    let selection = report
        .rows
        .iter()
        .enumerate()
        .filter(|(i, _)| passes[*i])
        .min_by(|(_, a), (_, b)| a.mean_latency.total_cmp(&b.mean_latency))
        .map_or(Selection::Infeasible, |(i, _)| Selection::Row(i));
    Objective { target, passes, selection }
}
