//! Shared fixtures for the integration suites.

// Each test binary compiles its own copy and uses a subset.
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;

use wlc_core::model::{FeatureDecl, FeatureSpec, FeatureVector, QueryRecord, TokenValue, Workload};

/// Scratch directory for one test, recreated on each run.
pub fn scratch_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir()
        .join(format!("wlc-tests-{}", std::process::id()))
        .join(name);
    fs::create_dir_all(&dir).expect("create scratch dir");
    dir
}

/// The three-query worked example as JSONL + spec files: an aggregate
/// query, a two-table count, and a three-table ordered scan, with six
/// statistics bounded by their column ranges and H = 10.
pub fn write_trio_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let log = dir.join("trio.jsonl");
    let spec = dir.join("trio-spec.json");
    fs::write(
        &log,
        concat!(
            r#"{"id":"q1","sql":"SELECT a, AVG(b), MAX(c), MAX(d) FROM T1 GROUP BY a","stats":{"execution_time_ms":5,"planning_time_ms":4,"input_bytes":5,"output_rows":100,"cpu_time_ms":2,"num_joins":0}}"#,
            "\n",
            r#"{"id":"q2","sql":"SELECT COUNT(*) FROM T1, T2 WHERE T1.a = T2.a","stats":{"execution_time_ms":10,"planning_time_ms":2,"input_bytes":10,"output_rows":1000,"cpu_time_ms":3,"num_joins":1}}"#,
            "\n",
            r#"{"id":"q3","sql":"SELECT * FROM T1, T2, T3 ORDER BY T1.a, T2.b, T3.c","stats":{"execution_time_ms":8,"planning_time_ms":5,"input_bytes":20,"output_rows":500,"cpu_time_ms":4,"num_joins":2}}"#,
            "\n",
        ),
    )
    .expect("write trio log");
    fs::write(&spec, trio_spec_json()).expect("write trio spec");
    (log, spec)
}

pub fn trio_spec_json() -> &'static str {
    r#"{
  "schema_version": 1,
  "h": 10,
  "features": [
    {"name": "function_call", "kind": "categorical"},
    {"name": "table_reference", "kind": "categorical"},
    {"name": "group_by", "kind": "categorical"},
    {"name": "order_by", "kind": "categorical"},
    {"name": "execution_time_ms", "kind": "numeric", "min": 5, "max": 10},
    {"name": "planning_time_ms", "kind": "numeric", "min": 2, "max": 5},
    {"name": "input_bytes", "kind": "numeric", "min": 5, "max": 20},
    {"name": "output_rows", "kind": "numeric", "min": 100, "max": 1000},
    {"name": "cpu_time_ms", "kind": "numeric", "min": 2, "max": 4},
    {"name": "num_joins", "kind": "numeric", "min": 0, "max": 2}
  ]
}"#
}

/// Random categorical workload used by the property criteria: `n` queries
/// over `features` features, token pool `tokens` per feature,
/// multiplicities up to `max_mult`, unit costs.
pub fn rand_workload<R: Rng>(
    rng: &mut R,
    n: usize,
    features: usize,
    tokens: usize,
    max_mult: u32,
) -> Workload {
    let decls = (0..features)
        .map(|f| FeatureDecl::categorical(&format!("f{f}")))
        .collect();
    let spec = FeatureSpec::new(decls, 10).unwrap();
    let mut items = Vec::with_capacity(n);
    for q in 0..n {
        let mut per_feature = vec![Vec::new(); features];
        let mut total = 0;
        for (f, bucket) in per_feature.iter_mut().enumerate() {
            for t in 0..tokens {
                if rng.gen_bool(0.3) {
                    bucket.push((
                        TokenValue::Text(format!("f{f}t{t}")),
                        rng.gen_range(1..=max_mult),
                    ));
                    total += 1;
                }
            }
        }
        if total == 0 {
            let f = rng.gen_range(0..features);
            per_feature[f].push((TokenValue::Text(format!("f{f}t0")), 1));
        }
        items.push((
            QueryRecord::new(&format!("q{q:04}")),
            FeatureVector::new(per_feature),
        ));
    }
    Workload::from_featurized(spec, items).unwrap()
}

/// One-feature pathology workload: q1 = {v1}, q2 = {v2}, q3 = {v1, v2}.
pub fn pathology_workload() -> Workload {
    let spec = FeatureSpec::new(vec![FeatureDecl::categorical("f")], 10).unwrap();
    let v = |names: &[&str]| {
        FeatureVector::new(vec![names
            .iter()
            .map(|n| (TokenValue::text(n), 1))
            .collect()])
    };
    Workload::from_featurized(
        spec,
        vec![
            (QueryRecord::new("q1"), v(&["v1"])),
            (QueryRecord::new("q2"), v(&["v2"])),
            (QueryRecord::new("q3"), v(&["v1", "v2"])),
        ],
    )
    .unwrap()
}

/// Exhaustive objective maximum over all unit-cost-feasible subsets.
pub fn brute_force_best(
    w: &Workload,
    target: &wlc_core::TokenDistribution,
    gamma: f64,
    budget: f64,
) -> f64 {
    let n = w.len();
    assert!(n <= 20, "exhaustive search needs a small instance");
    let mut best = 0.0f64;
    for mask in 0u32..(1u32 << n) {
        if (mask.count_ones() as f64) > budget {
            continue;
        }
        let idx: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let s = wlc_core::Summary::from_indices(w, idx).unwrap();
        let g = wlc_core::objective::objective(w, &s, target, gamma).unwrap();
        best = best.max(g);
    }
    best
}
