//! On-disk formats: JSONL query logs, JSON feature specs, and JSON
//! target distributions.
//!
//! Log files hold one object per line:
//! `{"id": "...", "sql": "...", "stats": {"name": value, ...}, "cost": 1.0}`
//! with `sql` and `cost` optional (cost defaults to 1). Spec files
//! declare the feature universe:
//! `{"schema_version": 1, "h": 10, "bucket_mode": "fixed",
//!   "features": [{"name", "kind", "min", "max", "weight"}, ...],
//!   "derived": [{"name", "parents": [...]}, ...]}`.
//! Target files map feature names to token-string masses.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use wlc_core::featurize::{derive_product_feature, featurize_batch};
use wlc_core::model::{BucketMode, TokenDistribution};
use wlc_core::{FeatureDecl, FeatureKind, FeatureSpec, QueryRecord, Workload};

use crate::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct LogLine {
    /// Optional per-line version marker; when present it must be 1.
    #[serde(skip_serializing_if = "Option::is_none")]
    schema_version: Option<u32>,
    id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    sql: Option<String>,
    #[serde(default)]
    stats: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cost: Option<f64>,
}

/// Read a JSONL query log. Ids must be unique; statistics and costs must
/// be finite and non-negative.
pub fn read_log(path: &Path) -> CliResult<Vec<QueryRecord>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read log {}: {e}", path.display())))?;
    let mut records = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: LogLine = serde_json::from_str(line).map_err(|e| {
            CliError::data(format!(
                "{}:{}: bad log line: {e}",
                path.display(),
                lineno + 1
            ))
        })?;
        if let Some(v) = parsed.schema_version {
            if v != SCHEMA_VERSION {
                return Err(CliError::data(format!(
                    "{}:{}: unsupported schema_version {v}",
                    path.display(),
                    lineno + 1
                )));
            }
        }
        if !seen.insert(parsed.id.clone()) {
            return Err(CliError::data(format!(
                "{}:{}: duplicate id {}",
                path.display(),
                lineno + 1,
                parsed.id
            )));
        }
        for (name, value) in &parsed.stats {
            if !value.is_finite() || *value < 0.0 {
                return Err(CliError::data(format!(
                    "{}:{}: stat {name} = {value} must be finite and >= 0",
                    path.display(),
                    lineno + 1
                )));
            }
        }
        let cost = parsed.cost.unwrap_or(1.0);
        if !cost.is_finite() || cost < 0.0 {
            return Err(CliError::data(format!(
                "{}:{}: cost {cost} must be finite and >= 0",
                path.display(),
                lineno + 1
            )));
        }
        records.push(QueryRecord {
            id: parsed.id,
            sql: parsed.sql,
            stats: parsed.stats,
            cost,
        });
    }
    Ok(records)
}

/// Write a query log as JSONL; inverse of [`read_log`].
pub fn write_log(path: &Path, records: &[QueryRecord]) -> CliResult<()> {
    let mut out = String::new();
    for r in records {
        let line = LogLine {
            schema_version: None,
            id: r.id.clone(),
            sql: r.sql.clone(),
            stats: r.stats.clone(),
            cost: if r.cost == 1.0 { None } else { Some(r.cost) },
        };
        out.push_str(&serde_json::to_string(&line).expect("log lines serialize"));
        out.push('\n');
    }
    fs::write(path, out)
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

#[derive(Debug, Serialize, Deserialize)]
struct SpecFeature {
    name: String,
    kind: FeatureKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    weight: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SpecDerived {
    name: String,
    parents: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SpecFile {
    #[serde(default = "default_schema_version")]
    schema_version: u32,
    h: u32,
    #[serde(default)]
    bucket_mode: BucketMode,
    features: Vec<SpecFeature>,
    #[serde(default)]
    derived: Vec<SpecDerived>,
}

fn default_schema_version() -> u32 {
    SCHEMA_VERSION
}

/// Read a feature spec file.
pub fn read_spec(path: &Path) -> CliResult<FeatureSpec> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read spec {}: {e}", path.display())))?;
    let parsed: SpecFile = serde_json::from_str(&text)
        .map_err(|e| CliError::data(format!("{}: bad spec: {e}", path.display())))?;
    if parsed.schema_version != SCHEMA_VERSION {
        return Err(CliError::data(format!(
            "{}: unsupported schema_version {}",
            path.display(),
            parsed.schema_version
        )));
    }
    let mut decls = Vec::with_capacity(parsed.features.len());
    for f in &parsed.features {
        let bounds = match (f.min, f.max) {
            (Some(min), Some(max)) => Some((min, max)),
            (None, None) => None,
            _ => {
                return Err(CliError::data(format!(
                    "{}: feature {} declares only one of min/max",
                    path.display(),
                    f.name
                )))
            }
        };
        decls.push(FeatureDecl {
            name: f.name.clone(),
            kind: f.kind,
            bounds,
            weight: f.weight,
            parents: None,
        });
    }
    let mut spec = FeatureSpec::with_mode(decls, parsed.h, parsed.bucket_mode)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    for d in &parsed.derived {
        spec = derive_product_feature(&spec, &d.name, &d.parents)
            .map_err(|e| CliError::data(format!("{}: derived {}: {e}", path.display(), d.name)))?;
    }
    Ok(spec)
}

/// Write a feature spec file; inverse of [`read_spec`] for specs without
/// derived features.
pub fn write_spec(path: &Path, spec: &FeatureSpec) -> CliResult<()> {
    let features = spec
        .features()
        .iter()
        .filter(|f| !f.is_product())
        .map(|f| SpecFeature {
            name: f.name.clone(),
            kind: f.kind,
            min: f.bounds.map(|b| b.0),
            max: f.bounds.map(|b| b.1),
            weight: f.weight,
        })
        .collect();
    let derived = spec
        .features()
        .iter()
        .filter_map(|f| {
            f.parents.as_ref().map(|p| SpecDerived {
                name: f.name.clone(),
                parents: p.clone(),
            })
        })
        .collect();
    let file = SpecFile {
        schema_version: SCHEMA_VERSION,
        h: spec.h(),
        bucket_mode: spec.bucket_mode(),
        features,
        derived,
    };
    let text = serde_json::to_string_pretty(&file).expect("spec serializes");
    fs::write(path, text)
        .map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display())))
}

/// Ingestion counters surfaced in reports.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct IngestStats {
    pub parsed: usize,
    pub skipped: usize,
    pub clamped: BTreeMap<String, u32>,
}

/// Read a log and featurize it under a spec. Entries whose SQL cannot be
/// tokenized are skipped and counted. Entry order is file order.
pub fn ingest(log_path: &Path, spec_path: &Path) -> CliResult<(Workload, IngestStats)> {
    let spec = read_spec(spec_path)?;
    let records = read_log(log_path)?;
    ingest_records(&spec, records)
}

/// Featurize already-loaded records; shared by ingest and merge.
pub fn ingest_records(
    spec: &FeatureSpec,
    records: Vec<QueryRecord>,
) -> CliResult<(Workload, IngestStats)> {
    let (workload, notes) = featurize_batch(spec, records).map_err(CliError::from)?;
    let stats = IngestStats {
        parsed: notes.parsed,
        skipped: notes.skipped,
        clamped: notes.clamped.into_iter().collect(),
    };
    Ok((workload, stats))
}

/// Read an explicit target distribution: a JSON map from feature name to
/// `{token: mass}`. Tokens are matched against the rendered token strings
/// of the workload's active domain; unknown tokens violate the support
/// precondition. Masses must renormalize within 1e-6.
pub fn read_target(path: &Path, workload: &Workload) -> CliResult<TokenDistribution> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read target {}: {e}", path.display())))?;
    let parsed: BTreeMap<String, BTreeMap<String, f64>> = serde_json::from_str(&text)
        .map_err(|e| CliError::data(format!("{}: bad target: {e}", path.display())))?;

    let mut mass = vec![0.0; workload.table().len()];
    for (feature, tokens) in &parsed {
        let fid = workload
            .spec()
            .feature_id(feature)
            .map_err(|e| CliError::data(e.to_string()))?;
        let mut rendered: BTreeMap<String, wlc_core::TokenId> = BTreeMap::new();
        for t in workload.dom(fid) {
            rendered.insert(workload.table().value_of(*t).to_string(), *t);
        }
        for (token, m) in tokens {
            match rendered.get(token) {
                Some(t) => mass[t.index()] = *m,
                None => {
                    return Err(CliError::from(wlc_core::Error::TargetSupportViolation {
                        feature: feature.clone(),
                        token: token.clone(),
                    }))
                }
            }
        }
    }
    TokenDistribution::renormalized(mass, 1e-6).map_err(CliError::from)
}

/// Render a distribution back to the named form used by target files.
pub fn render_distribution(
    workload: &Workload,
    dist: &TokenDistribution,
) -> BTreeMap<String, BTreeMap<String, f64>> {
    let mut out: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for (i, &m) in dist.mass().iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        let t = wlc_core::TokenId(i as u32);
        let fid = workload.table().feature_of(t);
        let feature = workload.spec().features()[fid].name.clone();
        out.entry(feature)
            .or_default()
            .insert(workload.table().value_of(t).to_string(), m);
    }
    out
}
