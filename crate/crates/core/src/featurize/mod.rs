//! Query featurization: SQL clause extraction plus numeric histogram
//! bucketing.
//!
//! [`QueryRecord`] doubles as the raw log entry: id, SQL text, and the raw
//! statistics map. [`featurize`] turns one record into a [`FeatureVector`]
//! under a spec whose numeric features all carry bounds;
//! [`featurize_batch`] additionally derives missing bounds from the batch
//! itself and downgrades per-entry parse errors to skip-with-count.

pub mod sql;

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::{
    BucketMode, FeatureDecl, FeatureKind, FeatureSpec, FeatureVector, QueryRecord, TokenValue,
    Workload,
};

pub use sql::{SqlFacts, TokenMultiset};

/// Canonical categorical feature names recognized by the SQL extractor.
pub const CATEGORICAL_FEATURES: [&str; 4] =
    ["function_call", "table_reference", "group_by", "order_by"];

/// Statistic whose value is derived from the SQL text when the log entry
/// does not provide it.
pub const NUM_JOINS: &str = "num_joins";

/// Map a raw value to a histogram bucket after min-max scaling to [0, 1].
///
/// Fixed mode clamps into `{0..H}`. Open-range mode never clamps above:
/// values beyond `max` map past `H`, so buckets assigned under the same
/// bounds never change when later data exceeds the historical range.
/// Values below `min` map to bucket 0 in both modes. Equi-width
/// bucketing by a step `eps` is the special case `min = 0`,
/// `max = eps * H`.
pub fn bucketize(value: f64, min: f64, max: f64, h: u32, mode: BucketMode) -> Result<i64> {
    let (bucket, _) = bucketize_counting(value, min, max, h, mode)?;
    Ok(bucket)
}

/// Like [`bucketize`], also reporting whether the value was outside the
/// bounds (fed into per-feature clamp counters).
pub fn bucketize_counting(
    value: f64,
    min: f64,
    max: f64,
    h: u32,
    mode: BucketMode,
) -> Result<(i64, bool)> {
    if !(min < max) {
        return Err(Error::InvalidBounds {
            feature: "<unnamed>".into(),
            min,
            max,
        });
    }
    let scaled = (value - min) / (max - min);
    let clamped = !(0.0..=1.0).contains(&scaled);
    let bucket = match mode {
        BucketMode::Fixed => {
            let v = scaled.clamp(0.0, 1.0);
            ((v * h as f64).floor() as i64).min(h as i64)
        }
        BucketMode::OpenRange => (scaled.max(0.0) * h as f64).floor() as i64,
    };
    Ok((bucket, clamped))
}

/// Bucket id under exponential bucketing: the integer `j` whose power
/// `(1 + eps)^j` is closest to the value, ties to the smaller `j`. Zero
/// has no finite logarithm and gets a reserved bucket of its own.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpBucket {
    Zero,
    Power(i32),
}

pub fn bucketize_exponential(value: f64, epsilon: f64) -> Result<ExpBucket> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    if !(value >= 0.0) {
        return Err(Error::InvalidBounds {
            feature: "<exponential>".into(),
            min: 0.0,
            max: value,
        });
    }
    if value == 0.0 {
        return Ok(ExpBucket::Zero);
    }
    let base = 1.0 + epsilon;
    let guess = value.ln() / base.ln();
    let mut best: Option<(f64, i32)> = None;
    for j in (guess.floor() as i64 - 2)..=(guess.ceil() as i64 + 2) {
        let j = j.clamp(i32::MIN as i64, i32::MAX as i64) as i32;
        let dist = (value - base.powi(j)).abs();
        let better = match best {
            None => true,
            Some((d, bj)) => dist < d || (dist == d && j < bj),
        };
        if better {
            best = Some((dist, j));
        }
    }
    Ok(ExpBucket::Power(
        best.expect("candidate range is non-empty").1,
    ))
}

/// Extract the four categorical token multisets from SQL text.
pub fn extract_categorical(sql: &str) -> Result<SqlFacts> {
    sql::extract(sql).map_err(|detail| Error::ParseError {
        query_id: "<sql>".into(),
        detail,
    })
}

/// Per-entry featurization notes: how many numeric values fell outside
/// their fixed bounds, per feature.
#[derive(Debug, Clone, Default)]
pub struct FeaturizeNotes {
    pub clamped: Vec<(String, u32)>,
}

/// Featurize one log entry under a spec whose numeric features all carry
/// bounds. Categorical features come from the recognized clause grammar;
/// each declared numeric statistic yields exactly one bucket token;
/// product features take the cartesian product of their parents' token
/// sets (set semantics, multiplicity 1 per combination).
pub fn featurize(
    entry: &QueryRecord,
    spec: &FeatureSpec,
) -> Result<(FeatureVector, FeaturizeNotes)> {
    let facts = match entry.sql.as_deref() {
        Some(text) if !text.trim().is_empty() => {
            Some(sql::extract(text).map_err(|detail| Error::ParseError {
                query_id: entry.id.clone(),
                detail,
            })?)
        }
        _ => None,
    };
    featurize_with_facts(entry, facts.as_ref(), spec)
}

fn featurize_with_facts(
    entry: &QueryRecord,
    facts: Option<&SqlFacts>,
    spec: &FeatureSpec,
) -> Result<(FeatureVector, FeaturizeNotes)> {
    let mut per_feature: Vec<Vec<(TokenValue, u32)>> = vec![Vec::new(); spec.len()];
    let mut notes = FeaturizeNotes::default();

    for (fid, decl) in spec.features().iter().enumerate() {
        if decl.is_product() {
            continue; // products need their parents first
        }
        match decl.kind {
            FeatureKind::Categorical => {
                if let Some(facts) = facts {
                    let multiset = match decl.name.as_str() {
                        "function_call" => Some(&facts.function_call),
                        "table_reference" => Some(&facts.table_reference),
                        "group_by" => Some(&facts.group_by),
                        "order_by" => Some(&facts.order_by),
                        _ => None,
                    };
                    if let Some(ms) = multiset {
                        per_feature[fid] = ms
                            .iter()
                            .map(|(tok, count)| (TokenValue::text(tok), *count))
                            .collect();
                    }
                }
            }
            FeatureKind::Numeric => {
                let (min, max) = decl.bounds.ok_or_else(|| {
                    Error::SpecMismatch(format!(
                        "numeric feature {} has no bounds; derive batch bounds before featurizing",
                        decl.name
                    ))
                })?;
                let value = match entry.stats.get(&decl.name) {
                    Some(&v) => v,
                    None if decl.name == NUM_JOINS => match facts {
                        Some(f) => f.derived_num_joins() as f64,
                        None => {
                            return Err(Error::MissingStatistic {
                                query_id: entry.id.clone(),
                                statistic: decl.name.clone(),
                            })
                        }
                    },
                    None => {
                        return Err(Error::MissingStatistic {
                            query_id: entry.id.clone(),
                            statistic: decl.name.clone(),
                        })
                    }
                };
                let (bucket, clamped) =
                    bucketize_counting(value, min, max, spec.h(), spec.bucket_mode()).map_err(
                        |_| Error::InvalidBounds {
                            feature: decl.name.clone(),
                            min,
                            max,
                        },
                    )?;
                if clamped {
                    notes.clamped.push((decl.name.clone(), 1));
                }
                per_feature[fid] = vec![(TokenValue::Bucket(bucket), 1)];
            }
        }
    }

    for (fid, decl) in spec.features().iter().enumerate() {
        let Some(parents) = &decl.parents else {
            continue;
        };
        let parent_sets: Vec<BTreeSet<TokenValue>> = parents
            .iter()
            .map(|p| {
                let pid = spec.feature_id(p)?;
                Ok(per_feature[pid].iter().map(|(v, _)| v.clone()).collect())
            })
            .collect::<Result<_>>()?;
        per_feature[fid] = cartesian(&parent_sets)
            .into_iter()
            .map(|combo| (TokenValue::Tuple(combo), 1))
            .collect();
    }

    Ok((FeatureVector::new(per_feature), notes))
}

/// Cartesian product over parent token sets; empty if any parent is empty.
fn cartesian(sets: &[BTreeSet<TokenValue>]) -> Vec<Vec<TokenValue>> {
    let mut combos: Vec<Vec<TokenValue>> = vec![Vec::new()];
    for set in sets {
        if set.is_empty() {
            return Vec::new();
        }
        let mut next = Vec::with_capacity(combos.len() * set.len());
        for combo in &combos {
            for value in set {
                let mut c = combo.clone();
                c.push(value.clone());
                next.push(c);
            }
        }
        combos = next;
    }
    if sets.is_empty() {
        Vec::new()
    } else {
        combos
    }
}

/// Extend a spec with a product feature over two or more declared parents.
///
/// The new feature starts with weight 0 so existing metric weighting is
/// unchanged: on a uniformly weighted spec the old features are pinned to
/// their current uniform weights explicitly.
pub fn derive_product_feature(
    spec: &FeatureSpec,
    name: &str,
    parents: &[String],
) -> Result<FeatureSpec> {
    for p in parents {
        spec.feature_id(p)?;
    }
    let mut features: Vec<FeatureDecl> = spec.features().to_vec();
    if !spec.has_explicit_weights() {
        let w = 1.0 / features.len() as f64;
        for f in &mut features {
            f.weight = Some(w);
        }
    }
    features.push(FeatureDecl {
        name: name.to_string(),
        kind: FeatureKind::Categorical,
        bounds: None,
        weight: Some(0.0),
        parents: Some(parents.to_vec()),
    });
    FeatureSpec::with_mode(features, spec.h(), spec.bucket_mode())
}

/// Outcome counters for batch featurization.
#[derive(Debug, Clone, Default)]
pub struct BatchNotes {
    pub parsed: usize,
    /// Entries dropped because their SQL failed to tokenize.
    pub skipped: usize,
    /// Per-feature counts of out-of-bounds numeric values.
    pub clamped: Vec<(String, u32)>,
    /// Bounds derived from the batch for numeric features the spec left
    /// open. Batch-derived bounds are incompatible with incremental
    /// merging.
    pub derived_bounds: Vec<(String, (f64, f64))>,
}

/// Featurize a batch of log entries into a workload.
///
/// Numeric features without spec bounds get batch-derived bounds
/// (min/max over the batch; a degenerate range widens to `min + 1`).
/// Entries whose SQL fails to tokenize are skipped and counted, never
/// silently dropped. SQL extraction runs on worker threads; results are
/// reassembled in entry order, so the workload is identical to a
/// sequential pass.
pub fn featurize_batch(
    spec: &FeatureSpec,
    entries: Vec<QueryRecord>,
) -> Result<(Workload, BatchNotes)> {
    let mut notes = BatchNotes::default();

    let facts = extract_all(&entries);
    let mut parsed: Vec<(QueryRecord, Option<SqlFacts>)> = Vec::with_capacity(entries.len());
    for (entry, facts) in entries.into_iter().zip(facts) {
        match facts {
            Ok(f) => parsed.push((entry, f)),
            Err(_) => notes.skipped += 1,
        }
    }

    let resolved = resolve_batch_bounds(spec, &parsed, &mut notes)?;

    let mut items = Vec::with_capacity(parsed.len());
    for (entry, facts) in &parsed {
        let (vector, entry_notes) = featurize_with_facts(entry, facts.as_ref(), &resolved)?;
        for (feature, n) in entry_notes.clamped {
            match notes.clamped.iter_mut().find(|(f, _)| *f == feature) {
                Some((_, total)) => *total += n,
                None => notes.clamped.push((feature, n)),
            }
        }
        items.push((entry.clone(), vector));
    }
    notes.parsed = items.len();
    let workload = Workload::from_featurized(resolved, items)?;
    Ok((workload, notes))
}

/// Extract clause tokens for every entry, chunked across threads when the
/// batch is large. `Ok(None)` marks entries without SQL text.
fn extract_all(entries: &[QueryRecord]) -> Vec<std::result::Result<Option<SqlFacts>, String>> {
    let one = |entry: &QueryRecord| match entry.sql.as_deref() {
        Some(text) if !text.trim().is_empty() => sql::extract(text).map(Some),
        _ => Ok(None),
    };
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    if entries.len() < 4096 || workers < 2 {
        return entries.iter().map(one).collect();
    }
    let chunk = entries.len().div_ceil(workers);
    let mut out = Vec::with_capacity(entries.len());
    std::thread::scope(|scope| {
        let handles: Vec<_> = entries
            .chunks(chunk)
            .map(|c| scope.spawn(move || c.iter().map(one).collect::<Vec<_>>()))
            .collect();
        for h in handles {
            out.extend(h.join().expect("extraction worker panicked"));
        }
    });
    out
}

fn resolve_batch_bounds(
    spec: &FeatureSpec,
    parsed: &[(QueryRecord, Option<SqlFacts>)],
    notes: &mut BatchNotes,
) -> Result<FeatureSpec> {
    if spec.has_fixed_bounds() {
        return Ok(spec.clone());
    }
    let mut features = spec.features().to_vec();
    for decl in &mut features {
        if decl.kind != FeatureKind::Numeric || decl.bounds.is_some() {
            continue;
        }
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for (entry, facts) in parsed {
            let value = match entry.stats.get(&decl.name) {
                Some(&v) => v,
                None if decl.name == NUM_JOINS => match facts {
                    Some(f) => f.derived_num_joins() as f64,
                    None => {
                        return Err(Error::MissingStatistic {
                            query_id: entry.id.clone(),
                            statistic: decl.name.clone(),
                        })
                    }
                },
                None => {
                    return Err(Error::MissingStatistic {
                        query_id: entry.id.clone(),
                        statistic: decl.name.clone(),
                    })
                }
            };
            min = min.min(value);
            max = max.max(value);
        }
        if parsed.is_empty() {
            min = 0.0;
            max = 1.0;
        }
        if !(min < max) {
            max = min + 1.0;
        }
        decl.bounds = Some((min, max));
        notes.derived_bounds.push((decl.name.clone(), (min, max)));
    }
    FeatureSpec::with_mode(features, spec.h(), spec.bucket_mode())
}
