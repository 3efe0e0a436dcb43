//! The JSON result report.
//!
//! A report fully describes one run: the resolved configuration (every
//! default materialized), ingestion counters, the selected summary ids,
//! metrics, the selection trace, and timings. Metric values are rounded
//! to 9 significant digits before serialization, and a fresh
//! recomputation from (log, spec, summary_ids) reproduces them exactly
//! after the same rounding.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use wlc_core::{CompressionResult, MetricsReport, Workload};

use crate::io::IngestStats;
use crate::{CliError, CliResult};

/// Round to 9 significant digits; reports never carry more precision.
pub fn round_sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().expect("scientific round-trip")
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportConfig {
    pub algorithm: String,
    pub budget: f64,
    pub cost: String,
    pub gamma: f64,
    pub beta: f64,
    pub alpha: String,
    pub rho: String,
    pub target: String,
    pub select: String,
    pub partitions: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportMetrics {
    pub alpha_per_feature: BTreeMap<String, f64>,
    pub alpha_min: f64,
    pub alpha_avg: f64,
    pub rho_1: f64,
    pub rho_inf: f64,
    pub beta_score: f64,
    pub eta: f64,
}

impl ReportMetrics {
    pub fn from_metrics(workload: &Workload, m: &MetricsReport) -> ReportMetrics {
        let names = workload.spec().features();
        ReportMetrics {
            alpha_per_feature: m
                .alpha_per_feature
                .iter()
                .enumerate()
                .map(|(i, &a)| (names[i].name.clone(), round_sig9(a)))
                .collect(),
            alpha_min: round_sig9(m.alpha_min),
            alpha_avg: round_sig9(m.alpha_avg),
            rho_1: round_sig9(m.rho_1),
            rho_inf: round_sig9(m.rho_inf),
            beta_score: round_sig9(m.beta_score),
            eta: round_sig9(m.eta),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportTraceStep {
    pub id: String,
    pub gain: f64,
    pub cumulative_cost: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub log_path: String,
    pub spec_path: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub merged_from: Option<Vec<String>>,
    pub config: ReportConfig,
    pub ingest: IngestStats,
    pub summary_ids: Vec<String>,
    pub objective: f64,
    pub metrics: ReportMetrics,
    pub eta: f64,
    pub trace: Vec<ReportTraceStep>,
    pub timings_ms: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(
        log_path: &str,
        spec_path: &str,
        config: ReportConfig,
        ingest: IngestStats,
        workload: &Workload,
        result: &CompressionResult,
        timings_ms: BTreeMap<String, f64>,
    ) -> Report {
        let metrics = ReportMetrics::from_metrics(workload, &result.metrics);
        let eta = metrics.eta;
        Report {
            schema_version: crate::io::SCHEMA_VERSION,
            log_path: log_path.to_string(),
            spec_path: spec_path.to_string(),
            merged_from: None,
            config,
            ingest,
            summary_ids: result.summary_ids.clone(),
            objective: round_sig9(result.objective_value),
            metrics,
            eta,
            trace: result
                .trace
                .iter()
                .map(|t| ReportTraceStep {
                    id: t.id.clone(),
                    gain: round_sig9(t.normalized_gain),
                    cumulative_cost: round_sig9(t.cumulative_cost),
                })
                .collect(),
            timings_ms,
            warnings: result.warnings.clone(),
        }
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self).expect("report serializes");
        fs::write(path, text)
            .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
    }

    pub fn read(path: &Path) -> CliResult<Report> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::data(format!("cannot read report {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::data(format!("{}: bad report: {e}", path.display())))
    }
}
