//! Shared fixtures for the unit and property tests.

use rand::Rng;

use crate::featurize::featurize;
use crate::model::{FeatureDecl, FeatureSpec, FeatureVector, QueryRecord, TokenValue, Workload};

/// Spec for the three-query worked example: four categorical clause
/// features plus six numeric statistics with column-derived bounds, H=10.
pub fn trio_spec() -> FeatureSpec {
    FeatureSpec::new(
        vec![
            FeatureDecl::categorical("function_call"),
            FeatureDecl::categorical("table_reference"),
            FeatureDecl::categorical("group_by"),
            FeatureDecl::categorical("order_by"),
            FeatureDecl::numeric("execution_time_ms", 5.0, 10.0),
            FeatureDecl::numeric("planning_time_ms", 2.0, 5.0),
            FeatureDecl::numeric("input_bytes", 5.0, 20.0),
            FeatureDecl::numeric("output_rows", 100.0, 1000.0),
            FeatureDecl::numeric("cpu_time_ms", 2.0, 4.0),
            FeatureDecl::numeric("num_joins", 0.0, 2.0),
        ],
        10,
    )
    .unwrap()
}

pub fn trio_records() -> Vec<QueryRecord> {
    let names = [
        "execution_time_ms",
        "planning_time_ms",
        "input_bytes",
        "output_rows",
        "cpu_time_ms",
        "num_joins",
    ];
    let record = |id: &str, sql: &str, stats: [f64; 6]| QueryRecord {
        id: id.into(),
        sql: Some(sql.into()),
        stats: names.iter().map(|s| s.to_string()).zip(stats).collect(),
        cost: 1.0,
    };
    vec![
        record(
            "q1",
            "SELECT a, AVG(b), MAX(c), MAX(d) FROM T1 GROUP BY a",
            [5.0, 4.0, 5.0, 100.0, 2.0, 0.0],
        ),
        record(
            "q2",
            "SELECT COUNT(*) FROM T1, T2 WHERE T1.a = T2.a",
            [10.0, 2.0, 10.0, 1000.0, 3.0, 1.0],
        ),
        record(
            "q3",
            "SELECT * FROM T1, T2, T3 ORDER BY T1.a, T2.b, T3.c",
            [8.0, 5.0, 20.0, 500.0, 4.0, 2.0],
        ),
    ]
}

/// The three-query workload used throughout the tests.
pub fn trio_workload() -> Workload {
    let spec = trio_spec();
    let items = trio_records()
        .into_iter()
        .map(|r| {
            let (v, _) = featurize(&r, &spec).unwrap();
            (r, v)
        })
        .collect();
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

/// Random categorical workload: `n` queries over `features` features with
/// a token pool of `tokens` values per feature and multiplicities up to
/// `max_mult`. Every query gets at least one token.
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
                    let mult = rng.gen_range(1..=max_mult);
                    bucket.push((TokenValue::Text(format!("f{f}t{t}")), mult));
                    total += 1;
                }
            }
        }
        if total == 0 {
            let f = rng.gen_range(0..features);
            let t = rng.gen_range(0..tokens);
            per_feature[f].push((TokenValue::Text(format!("f{f}t{t}")), 1));
        }
        let mut record = QueryRecord::new(&format!("q{q}"));
        record.cost = 1.0;
        items.push((record, FeatureVector::new(per_feature)));
    }
    Workload::from_featurized(spec, items).unwrap()
}

/// Random workload with non-unit costs drawn from `1..=max_cost`.
pub fn rand_workload_with_costs<R: Rng>(
    rng: &mut R,
    n: usize,
    features: usize,
    tokens: usize,
    max_mult: u32,
    max_cost: u32,
) -> Workload {
    let w = rand_workload(rng, n, features, tokens, max_mult);
    let spec = w.spec().clone();
    let items = (0..w.len())
        .map(|i| {
            let mut record = w.record(i).clone();
            record.cost = rng.gen_range(1..=max_cost) as f64;
            (record, w.feature_vector(i))
        })
        .collect();
    Workload::from_featurized(spec, items).unwrap()
}
