//! Domain model: features, tokens, queries, workloads, and token distributions.
//!
//! A workload is a multiset of featurized queries. Each query carries a
//! multiset of tokens per feature; the workload interns every distinct
//! `(feature, token value)` pair to a dense [`TokenId`] so that frequency
//! tables, distributions, and objective bookkeeping are flat arrays.
//! All types here are immutable after construction and safe to share
//! across threads.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{Error, Result};

/// Tolerance used when validating that explicit feature weights and token
/// distributions sum to one.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// How numeric statistics are mapped to histogram buckets.
///
/// `Fixed` clamps values into `{0..H}`. `OpenRange` keeps the same bucket
/// function but does not clamp above `H`, so previously assigned buckets
/// stay stable when later batches exceed the configured maximum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BucketMode {
    #[default]
    Fixed,
    OpenRange,
}

/// Feature kind: categorical tokens come from SQL syntax, numeric tokens
/// from bucketized execution statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Categorical,
    Numeric,
}

/// Declaration of a single feature.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDecl {
    pub name: String,
    pub kind: FeatureKind,
    /// Fixed normalization bounds for numeric features. Required for
    /// incremental workflows; when absent, bounds are derived per batch.
    pub bounds: Option<(f64, f64)>,
    /// Explicit weight. Either no feature carries a weight (uniform
    /// default) or the explicit weights must sum to 1; features left
    /// unweighted in an explicitly weighted spec get weight 0.
    pub weight: Option<f64>,
    /// Parent feature names for derived product features. A product
    /// feature's tokens are the cartesian product of its parents' token
    /// sets (set semantics, multiplicity 1 per combination).
    pub parents: Option<Vec<String>>,
}

impl FeatureDecl {
    pub fn categorical(name: &str) -> Self {
        FeatureDecl {
            name: name.to_string(),
            kind: FeatureKind::Categorical,
            bounds: None,
            weight: None,
            parents: None,
        }
    }

    pub fn numeric(name: &str, min: f64, max: f64) -> Self {
        FeatureDecl {
            name: name.to_string(),
            kind: FeatureKind::Numeric,
            bounds: Some((min, max)),
            weight: None,
            parents: None,
        }
    }

    /// Numeric feature whose bounds are derived from each batch.
    pub fn numeric_unbounded(name: &str) -> Self {
        FeatureDecl {
            name: name.to_string(),
            kind: FeatureKind::Numeric,
            bounds: None,
            weight: None,
            parents: None,
        }
    }

    pub fn with_weight(mut self, w: f64) -> Self {
        self.weight = Some(w);
        self
    }

    pub fn is_product(&self) -> bool {
        self.parents.is_some()
    }
}

/// The feature universe: an ordered list of declarations plus the histogram
/// division count `H` (bucket ids range over `{0..H}` in fixed mode).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpec {
    features: Vec<FeatureDecl>,
    h: u32,
    bucket_mode: BucketMode,
}

impl FeatureSpec {
    pub fn new(features: Vec<FeatureDecl>, h: u32) -> Result<Self> {
        Self::with_mode(features, h, BucketMode::Fixed)
    }

    pub fn with_mode(features: Vec<FeatureDecl>, h: u32, bucket_mode: BucketMode) -> Result<Self> {
        if h == 0 {
            return Err(Error::InvalidBounds {
                feature: "<spec>".into(),
                min: 0.0,
                max: 0.0,
            });
        }
        let mut names = HashMap::new();
        for (i, f) in features.iter().enumerate() {
            if names.insert(f.name.clone(), i).is_some() {
                return Err(Error::SpecMismatch(format!(
                    "duplicate feature name {}",
                    f.name
                )));
            }
            if let Some((min, max)) = f.bounds {
                if f.kind != FeatureKind::Numeric {
                    return Err(Error::SpecMismatch(format!(
                        "feature {} has bounds but is not numeric",
                        f.name
                    )));
                }
                if !(min < max) {
                    return Err(Error::InvalidBounds {
                        feature: f.name.clone(),
                        min,
                        max,
                    });
                }
            }
            if let Some(w) = f.weight {
                if !(w >= 0.0) {
                    return Err(Error::SpecMismatch(format!(
                        "feature {} has negative weight {w}",
                        f.name
                    )));
                }
            }
        }
        // Product features must reference earlier-declared base features.
        for f in &features {
            if let Some(parents) = &f.parents {
                if parents.len() < 2 {
                    return Err(Error::SpecMismatch(format!(
                        "product feature {} needs at least 2 parents",
                        f.name
                    )));
                }
                for p in parents {
                    match names.get(p) {
                        None => return Err(Error::UnknownFeature(p.clone())),
                        Some(&idx) => {
                            if features[idx].is_product() {
                                return Err(Error::SpecMismatch(format!(
                                    "product feature {} cannot use product parent {p}",
                                    f.name
                                )));
                            }
                        }
                    }
                }
            }
        }
        let spec = FeatureSpec {
            features,
            h,
            bucket_mode,
        };
        if spec.has_explicit_weights() {
            let sum: f64 = spec.weights().iter().sum();
            if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
                return Err(Error::SpecMismatch(format!(
                    "explicit weights sum to {sum}, not 1"
                )));
            }
        }
        Ok(spec)
    }

    pub fn features(&self) -> &[FeatureDecl] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn h(&self) -> u32 {
        self.h
    }

    pub fn bucket_mode(&self) -> BucketMode {
        self.bucket_mode
    }

    pub fn feature_id(&self, name: &str) -> Result<usize> {
        self.features
            .iter()
            .position(|f| f.name == name)
            .ok_or_else(|| Error::UnknownFeature(name.to_string()))
    }

    pub fn has_explicit_weights(&self) -> bool {
        self.features.iter().any(|f| f.weight.is_some())
    }

    /// Per-feature weights: the explicit ones when any are declared
    /// (missing entries get 0), otherwise uniform `1/|F|`.
    pub fn weights(&self) -> Vec<f64> {
        if self.has_explicit_weights() {
            self.features
                .iter()
                .map(|f| f.weight.unwrap_or(0.0))
                .collect()
        } else if self.features.is_empty() {
            Vec::new()
        } else {
            vec![1.0 / self.features.len() as f64; self.features.len()]
        }
    }

    /// True when every numeric feature carries fixed bounds, the
    /// precondition for incremental merging.
    pub fn has_fixed_bounds(&self) -> bool {
        self.features
            .iter()
            .all(|f| f.kind != FeatureKind::Numeric || f.bounds.is_some())
    }

    /// Structural identity check used by merge operations.
    pub fn check_same(&self, other: &FeatureSpec) -> Result<()> {
        if self.h != other.h {
            return Err(Error::SpecMismatch(format!(
                "H differs: {} vs {}",
                self.h, other.h
            )));
        }
        if self.bucket_mode != other.bucket_mode {
            return Err(Error::SpecMismatch("bucket mode differs".into()));
        }
        if self.features.len() != other.features.len() {
            return Err(Error::SpecMismatch(format!(
                "feature count differs: {} vs {}",
                self.features.len(),
                other.features.len()
            )));
        }
        for (a, b) in self.features.iter().zip(&other.features) {
            if a != b {
                return Err(Error::SpecMismatch(format!(
                    "feature {} differs between specs",
                    a.name
                )));
            }
        }
        Ok(())
    }
}

/// A single token value. Numeric buckets may exceed `H` in open-range mode;
/// product-feature tokens are tuples of parent values.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TokenValue {
    Text(String),
    Bucket(i64),
    Tuple(Vec<TokenValue>),
}

impl fmt::Display for TokenValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenValue::Text(s) => f.write_str(s),
            TokenValue::Bucket(b) => write!(f, "{b}"),
            TokenValue::Tuple(parts) => {
                f.write_str("(")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{p}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl TokenValue {
    pub fn text(s: &str) -> Self {
        TokenValue::Text(s.to_string())
    }
}

/// Dense id for a distinct `(feature, token value)` pair within one workload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TokenId(pub u32);

impl TokenId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// One log entry: id, optional SQL text, raw statistics, and cost.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryRecord {
    pub id: String,
    pub sql: Option<String>,
    pub stats: BTreeMap<String, f64>,
    pub cost: f64,
}

impl QueryRecord {
    pub fn new(id: &str) -> Self {
        QueryRecord {
            id: id.to_string(),
            sql: None,
            stats: BTreeMap::new(),
            cost: 1.0,
        }
    }
}

/// A featurized query in value form: one sorted token multiset per feature.
/// Counts are positive; `size` is the total token count `||q||`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    per_feature: Vec<Vec<(TokenValue, u32)>>,
    size: u32,
}

impl FeatureVector {
    pub fn new(per_feature: Vec<Vec<(TokenValue, u32)>>) -> Self {
        let mut per_feature = per_feature;
        for tokens in &mut per_feature {
            tokens.sort();
            debug_assert!(tokens.iter().all(|(_, c)| *c > 0));
        }
        let size = per_feature
            .iter()
            .map(|toks| toks.iter().map(|(_, c)| *c).sum::<u32>())
            .sum();
        FeatureVector { per_feature, size }
    }

    pub fn size(&self) -> u32 {
        self.size
    }

    pub fn tokens(&self, feature: usize) -> &[(TokenValue, u32)] {
        &self.per_feature[feature]
    }

    pub fn feature_count(&self) -> usize {
        self.per_feature.len()
    }
}

/// Interner mapping `(feature, token value)` pairs to dense [`TokenId`]s.
/// Ids are assigned in first-encounter order, so workload construction is
/// deterministic for a fixed entry order.
#[derive(Debug, Clone, Default)]
pub struct TokenTable {
    by_value: Vec<HashMap<TokenValue, TokenId>>,
    meta: Vec<(u32, TokenValue)>,
}

impl TokenTable {
    fn with_features(n: usize) -> Self {
        TokenTable {
            by_value: vec![HashMap::new(); n],
            meta: Vec::new(),
        }
    }

    fn intern(&mut self, feature: usize, value: &TokenValue) -> TokenId {
        if let Some(&id) = self.by_value[feature].get(value) {
            return id;
        }
        let id = TokenId(self.meta.len() as u32);
        self.by_value[feature].insert(value.clone(), id);
        self.meta.push((feature as u32, value.clone()));
        id
    }

    pub fn lookup(&self, feature: usize, value: &TokenValue) -> Option<TokenId> {
        self.by_value[feature].get(value).copied()
    }

    pub fn len(&self) -> usize {
        self.meta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.meta.is_empty()
    }

    pub fn feature_of(&self, token: TokenId) -> usize {
        self.meta[token.index()].0 as usize
    }

    pub fn value_of(&self, token: TokenId) -> &TokenValue {
        &self.meta[token.index()].1
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Entry {
    pub record: QueryRecord,
    /// Sorted by token id; counts positive.
    pub tokens: Vec<(TokenId, u32)>,
    pub size: u32,
}

/// A multiset workload: featurized queries plus the interned token
/// universe and its frequency table.
#[derive(Debug, Clone)]
pub struct Workload {
    spec: FeatureSpec,
    table: TokenTable,
    entries: Vec<Entry>,
    /// `m_W(t, f)` indexed by token id.
    freq: Vec<u64>,
    /// Active domain per feature, in token-id order.
    dom: Vec<Vec<TokenId>>,
    size: u64,
}

impl Workload {
    pub fn from_featurized(
        spec: FeatureSpec,
        items: Vec<(QueryRecord, FeatureVector)>,
    ) -> Result<Self> {
        let mut table = TokenTable::with_features(spec.len());
        let mut entries = Vec::with_capacity(items.len());
        for (record, vector) in items {
            if vector.feature_count() != spec.len() {
                return Err(Error::SpecMismatch(format!(
                    "query {} featurized with {} features, spec has {}",
                    record.id,
                    vector.feature_count(),
                    spec.len()
                )));
            }
            let mut tokens = Vec::new();
            for (fid, toks) in vector.per_feature.iter().enumerate() {
                for (value, count) in toks {
                    tokens.push((table.intern(fid, value), *count));
                }
            }
            tokens.sort_by_key(|(t, _)| *t);
            entries.push(Entry {
                record,
                tokens,
                size: vector.size(),
            });
        }
        let mut freq = vec![0u64; table.len()];
        for e in &entries {
            for &(t, c) in &e.tokens {
                freq[t.index()] += c as u64;
            }
        }
        let mut dom = vec![Vec::new(); spec.len()];
        for (i, &f) in freq.iter().enumerate() {
            if f > 0 {
                let t = TokenId(i as u32);
                dom[table.feature_of(t)].push(t);
            }
        }
        let size = entries.iter().map(|e| e.size as u64).sum();
        Ok(Workload {
            spec,
            table,
            entries,
            freq,
            dom,
            size,
        })
    }

    /// Concatenate two workloads featurized under the same spec (multiset
    /// union). Token ids are re-interned; entries keep their input order,
    /// `a` first.
    pub fn union(a: &Workload, b: &Workload) -> Result<Workload> {
        a.spec.check_same(&b.spec)?;
        let mut items = Vec::with_capacity(a.len() + b.len());
        for w in [a, b] {
            for i in 0..w.len() {
                items.push((w.entries[i].record.clone(), w.feature_vector(i)));
            }
        }
        Workload::from_featurized(a.spec.clone(), items)
    }

    pub fn spec(&self) -> &FeatureSpec {
        &self.spec
    }

    pub fn table(&self) -> &TokenTable {
        &self.table
    }

    /// Number of queries.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `||W||`: total token count over all queries.
    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn record(&self, idx: usize) -> &QueryRecord {
        &self.entries[idx].record
    }

    pub fn query_size(&self, idx: usize) -> u32 {
        self.entries[idx].size
    }

    pub(crate) fn entry_tokens(&self, idx: usize) -> &[(TokenId, u32)] {
        &self.entries[idx].tokens
    }

    /// `m_W(t, f)`; 0 when the token never occurs.
    pub fn token_frequency(&self, feature: &str, value: &TokenValue) -> Result<u64> {
        let fid = self.spec.feature_id(feature)?;
        Ok(self
            .table
            .lookup(fid, value)
            .map(|t| self.freq[t.index()])
            .unwrap_or(0))
    }

    pub fn frequencies(&self) -> &[u64] {
        &self.freq
    }

    /// Active domain `dom(W, f)` for one feature.
    pub fn dom(&self, feature: usize) -> &[TokenId] {
        &self.dom[feature]
    }

    /// Reconstruct the value-form feature vector of one query.
    pub fn feature_vector(&self, idx: usize) -> FeatureVector {
        let mut per_feature = vec![Vec::new(); self.spec.len()];
        for &(t, c) in &self.entries[idx].tokens {
            per_feature[self.table.feature_of(t)].push((self.table.value_of(t).clone(), c));
        }
        FeatureVector::new(per_feature)
    }

    /// Token counts `m_S` for a summary, indexed by token id.
    pub fn summary_counts(&self, summary: &Summary) -> Vec<u64> {
        let mut counts = vec![0u64; self.table.len()];
        for &idx in &summary.indices {
            for &(t, c) in &self.entries[idx].tokens {
                counts[t.index()] += c as u64;
            }
        }
        counts
    }

    /// `||S||` for a summary.
    pub fn summary_size(&self, summary: &Summary) -> u64 {
        summary
            .indices
            .iter()
            .map(|&i| self.entries[i].size as u64)
            .sum()
    }

    pub fn summary_ids(&self, summary: &Summary) -> Vec<String> {
        summary
            .indices
            .iter()
            .map(|&i| self.entries[i].record.id.clone())
            .collect()
    }
}

/// A sub-multiset of a workload, held as entry indices. Each entry may be
/// selected at most once; duplicate queries in the log are distinct entries.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Summary {
    indices: Vec<usize>,
}

impl Summary {
    pub fn empty() -> Self {
        Summary {
            indices: Vec::new(),
        }
    }

    pub fn from_indices(workload: &Workload, indices: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; workload.len()];
        for &i in &indices {
            if i >= workload.len() {
                return Err(Error::NotASubset(format!("entry index {i} out of range")));
            }
            if seen[i] {
                return Err(Error::NotASubset(format!("entry index {i} selected twice")));
            }
            seen[i] = true;
        }
        Ok(Summary { indices })
    }

    /// Resolve query ids against a workload, respecting multiplicity: an id
    /// appearing `k` times in `ids` consumes `k` distinct entries with that
    /// id (in entry order).
    pub fn from_ids(workload: &Workload, ids: &[String]) -> Result<Self> {
        let mut by_id: HashMap<&str, Vec<usize>> = HashMap::new();
        for i in (0..workload.len()).rev() {
            by_id
                .entry(workload.record(i).id.as_str())
                .or_default()
                .push(i);
        }
        let mut indices = Vec::with_capacity(ids.len());
        for id in ids {
            match by_id.get_mut(id.as_str()).and_then(|v| v.pop()) {
                Some(i) => indices.push(i),
                None => {
                    return Err(Error::NotASubset(format!(
                        "id {id} not present (or not often enough) in the workload"
                    )))
                }
            }
        }
        Ok(Summary { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// A probability mass over `(feature, token)` pairs, aligned with one
/// workload's token table.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenDistribution {
    mass: Vec<f64>,
}

impl TokenDistribution {
    /// Build from per-token masses. Masses must be non-negative and sum to
    /// 1 within [`WEIGHT_SUM_TOLERANCE`]; callers that renormalize first
    /// should use [`TokenDistribution::renormalized`].
    pub fn new(mass: Vec<f64>) -> Result<Self> {
        let sum: f64 = mass.iter().sum();
        if mass.iter().any(|&m| m < 0.0) {
            return Err(Error::NotNormalizable(sum));
        }
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::NotNormalizable(sum));
        }
        Ok(TokenDistribution { mass })
    }

    /// Renormalize masses whose sum is within `tolerance` of 1.
    pub fn renormalized(mut mass: Vec<f64>, tolerance: f64) -> Result<Self> {
        let sum: f64 = mass.iter().sum();
        if mass.iter().any(|&m| m < 0.0) || (sum - 1.0).abs() > tolerance || sum <= 0.0 {
            return Err(Error::NotNormalizable(sum));
        }
        for m in &mut mass {
            *m /= sum;
        }
        Ok(TokenDistribution { mass })
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn get(&self, token: TokenId) -> f64 {
        self.mass[token.index()]
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_feature_spec() -> FeatureSpec {
        FeatureSpec::new(
            vec![
                FeatureDecl::categorical("fc"),
                FeatureDecl::categorical("tr"),
            ],
            10,
        )
        .unwrap()
    }

    fn vector(fc: &[(&str, u32)], tr: &[(&str, u32)]) -> FeatureVector {
        FeatureVector::new(vec![
            fc.iter().map(|(s, c)| (TokenValue::text(s), *c)).collect(),
            tr.iter().map(|(s, c)| (TokenValue::text(s), *c)).collect(),
        ])
    }

    fn workload(items: Vec<(&str, FeatureVector)>) -> Workload {
        let spec = two_feature_spec();
        Workload::from_featurized(
            spec,
            items
                .into_iter()
                .map(|(id, v)| (QueryRecord::new(id), v))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn workload_size_sums_query_sizes() {
        let w = workload(vec![
            ("q1", vector(&[("max", 2), ("avg", 1)], &[("t1", 1)])),
            ("q2", vector(&[], &[("t1", 1), ("t2", 1)])),
        ]);
        assert_eq!(w.size(), 6);
        assert_eq!(w.query_size(0), 4);
        assert_eq!(w.query_size(1), 2);
        let empty = workload(vec![]);
        assert_eq!(empty.size(), 0);
    }

    #[test]
    fn token_frequency_counts_multiplicity() {
        let w = workload(vec![
            ("q1", vector(&[("max", 2)], &[("t1", 1)])),
            ("q2", vector(&[("max", 1)], &[("t1", 1)])),
        ]);
        assert_eq!(
            w.token_frequency("fc", &TokenValue::text("max")).unwrap(),
            3
        );
        assert_eq!(w.token_frequency("tr", &TokenValue::text("t1")).unwrap(), 2);
        assert_eq!(
            w.token_frequency("fc", &TokenValue::text("substr"))
                .unwrap(),
            0
        );
        assert!(matches!(
            w.token_frequency("nope", &TokenValue::text("x")),
            Err(Error::UnknownFeature(_))
        ));
    }

    #[test]
    fn union_adds_frequencies() {
        let a = workload(vec![("q1", vector(&[("max", 2)], &[("t1", 1)]))]);
        let b = workload(vec![("q2", vector(&[("max", 1), ("avg", 1)], &[]))]);
        let u = Workload::union(&a, &b).unwrap();
        assert_eq!(u.size(), a.size() + b.size());
        assert_eq!(
            u.token_frequency("fc", &TokenValue::text("max")).unwrap(),
            3
        );
        assert_eq!(
            u.token_frequency("fc", &TokenValue::text("avg")).unwrap(),
            1
        );
    }

    #[test]
    fn union_frequencies_commute_and_associate() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_pcg::Pcg64::seed_from_u64(17);
        let random = |rng: &mut rand_pcg::Pcg64, salt: usize| {
            let n = rng.gen_range(1..6);
            let items = (0..n)
                .map(|q| {
                    let fc: Vec<(&str, u32)> = [("max", 1), ("avg", 2), ("sum", 1)]
                        .into_iter()
                        .filter(|_| rng.gen_bool(0.5))
                        .collect();
                    let tr: Vec<(&str, u32)> = [("t1", 1), ("t2", 1)]
                        .into_iter()
                        .filter(|_| rng.gen_bool(0.5))
                        .collect();
                    (format!("s{salt}q{q}"), vector(&fc, &tr))
                })
                .collect::<Vec<_>>();
            Workload::from_featurized(
                two_feature_spec(),
                items
                    .into_iter()
                    .map(|(id, v)| (QueryRecord::new(&id), v))
                    .collect(),
            )
            .unwrap()
        };
        let freq_map = |w: &Workload| {
            let mut m = std::collections::BTreeMap::new();
            for f in 0..w.spec().len() {
                for t in w.dom(f) {
                    m.insert(
                        (f, w.table().value_of(*t).clone()),
                        w.frequencies()[t.index()],
                    );
                }
            }
            m
        };
        for trial in 0..50 {
            let (a, b, c) = (
                random(&mut rng, trial * 3),
                random(&mut rng, trial * 3 + 1),
                random(&mut rng, trial * 3 + 2),
            );
            let ab = Workload::union(&a, &b).unwrap();
            let ba = Workload::union(&b, &a).unwrap();
            assert_eq!(freq_map(&ab), freq_map(&ba), "commutativity");
            let ab_c = Workload::union(&ab, &c).unwrap();
            let a_bc = Workload::union(&a, &Workload::union(&b, &c).unwrap()).unwrap();
            assert_eq!(freq_map(&ab_c), freq_map(&a_bc), "associativity");
            // Frequencies are the per-part sums.
            for ((f, value), &count) in freq_map(&ab).iter() {
                let name = &a.spec().features()[*f].name;
                let sum = a.token_frequency(name, value).unwrap()
                    + b.token_frequency(name, value).unwrap();
                assert_eq!(count, sum);
            }
        }
    }

    #[test]
    fn dom_is_subset_of_reference_dom() {
        let w = workload(vec![
            ("q1", vector(&[("max", 1)], &[("t1", 1)])),
            ("q2", vector(&[("avg", 1)], &[("t2", 1)])),
        ]);
        let s = Summary::from_indices(&w, vec![0]).unwrap();
        let counts = w.summary_counts(&s);
        for (i, &c) in counts.iter().enumerate() {
            assert!(c <= w.frequencies()[i]);
        }
    }

    #[test]
    fn summary_id_resolution_respects_multiplicity() {
        // Two entries share an id, as happens after a self-union.
        let spec = two_feature_spec();
        let w = Workload::from_featurized(
            spec,
            vec![
                (QueryRecord::new("q1"), vector(&[("max", 1)], &[])),
                (QueryRecord::new("q1"), vector(&[("max", 1)], &[])),
            ],
        )
        .unwrap();
        let s = Summary::from_ids(&w, &["q1".into(), "q1".into()]).unwrap();
        assert_eq!(s.len(), 2);
        let err = Summary::from_ids(&w, &["q1".into(), "q1".into(), "q1".into()]);
        assert!(matches!(err, Err(Error::NotASubset(_))));
    }

    #[test]
    fn explicit_weights_must_sum_to_one() {
        let bad = FeatureSpec::new(
            vec![
                FeatureDecl::categorical("a").with_weight(0.9),
                FeatureDecl::categorical("b").with_weight(0.2),
            ],
            10,
        );
        assert!(bad.is_err());
        let ok = FeatureSpec::new(
            vec![
                FeatureDecl::categorical("a").with_weight(0.75),
                FeatureDecl::categorical("b").with_weight(0.25),
            ],
            10,
        )
        .unwrap();
        assert_eq!(ok.weights(), vec![0.75, 0.25]);
        // One explicit weight makes the others default to zero.
        let partial = FeatureSpec::new(
            vec![
                FeatureDecl::categorical("a").with_weight(1.0),
                FeatureDecl::categorical("b"),
            ],
            10,
        )
        .unwrap();
        assert_eq!(partial.weights(), vec![1.0, 0.0]);
    }

    #[test]
    fn distribution_must_sum_to_one() {
        assert!(TokenDistribution::new(vec![0.5, 0.5]).is_ok());
        assert!(TokenDistribution::new(vec![0.5, 0.45]).is_err());
        assert!(TokenDistribution::renormalized(vec![0.5, 0.55], 1e-6).is_err());
        let d = TokenDistribution::renormalized(vec![0.5, 0.5 + 5e-7], 1e-6).unwrap();
        assert!((d.mass().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
