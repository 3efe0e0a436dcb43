//! Synthetic workload generation for tests and benchmarks.
//!
//! Queries are instantiated from templates. Each template has a distinct
//! categorical signature (its own tables and grouping column, a small
//! function-call set) and a fixed numeric profile: every statistic is
//! jittered log-normally around the center of a template-specific
//! histogram bucket and clamped to stay inside it, so instances of one
//! template always featurize to the same numeric tokens while the raw
//! values still vary. All randomness is drawn from PCG-64 keyed by the
//! seed, in generation order.

use rand::{Rng, SeedableRng};
use rand_pcg::Pcg64;

use crate::model::{FeatureDecl, FeatureSpec, QueryRecord};

/// How many instances each template gets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceCounts {
    /// Every template appears `n` times.
    Uniform(u32),
    /// Template `i` (0-based) appears `floor(base / (i + 1))` times.
    Harmonic(u32),
}

/// Per-template instance counts under a counting scheme.
pub fn instance_counts(templates: u32, counts: InstanceCounts) -> Vec<u32> {
    (0..templates)
        .map(|i| match counts {
            InstanceCounts::Uniform(n) => n,
            InstanceCounts::Harmonic(base) => base / (i + 1),
        })
        .collect()
}

/// The feature spec matching generated logs: the four clause features
/// plus six statistics with fixed bounds, ten histogram divisions.
pub fn synth_spec() -> FeatureSpec {
    FeatureSpec::new(
        vec![
            FeatureDecl::categorical("function_call"),
            FeatureDecl::categorical("table_reference"),
            FeatureDecl::categorical("group_by"),
            FeatureDecl::categorical("order_by"),
            FeatureDecl::numeric("execution_time_ms", 0.0, 1000.0),
            FeatureDecl::numeric("planning_time_ms", 0.0, 100.0),
            FeatureDecl::numeric("input_bytes", 0.0, 1e9),
            FeatureDecl::numeric("output_rows", 0.0, 1e6),
            FeatureDecl::numeric("cpu_time_ms", 0.0, 500.0),
            FeatureDecl::numeric("num_joins", 0.0, 10.0),
        ],
        10,
    )
    .expect("static spec is valid")
}

const JITTERED_STATS: [(&str, f64); 5] = [
    ("execution_time_ms", 1000.0),
    ("planning_time_ms", 100.0),
    ("input_bytes", 1e9),
    ("output_rows", 1e6),
    ("cpu_time_ms", 500.0),
];

/// Multipliers and offsets that spread template buckets across the
/// histogram; multipliers are coprime to the division count.
const BUCKET_MUL: [u32; 5] = [3, 7, 9, 1, 3];
const BUCKET_OFF: [u32; 5] = [0, 2, 4, 1, 3];
const DIVISIONS: u32 = 10;

fn function_calls(template: u32, templates: u32) -> Vec<&'static str> {
    const ROTATION: [&str; 3] = ["SUM", "MAX", "COUNT"];
    if template == 0 {
        return vec!["SUM", "MAX", "COUNT"];
    }
    if templates >= 5 {
        if template == templates - 4 {
            return vec!["ARRAY_AGG"];
        }
        if template == templates - 1 {
            return vec!["SUBSTR"];
        }
    }
    vec![ROTATION[template as usize % 3]]
}

fn template_sql(template: u32, templates: u32) -> String {
    let i = template;
    let calls: Vec<String> = function_calls(template, templates)
        .iter()
        .map(|c| match *c {
            "COUNT" => "COUNT(*)".to_string(),
            "SUBSTR" => format!("SUBSTR(s{i}, 1, 3)"),
            other => format!("{other}(v{i})"),
        })
        .collect();
    let mut sql = format!(
        "SELECT g{i}, {} FROM t{i}a, t{i}b WHERE t{i}a.k = t{i}b.k GROUP BY g{i}",
        calls.join(", ")
    );
    if i % 2 == 1 {
        sql.push_str(&format!(" ORDER BY g{i}"));
    }
    sql
}

/// Standard normal via Box-Muller.
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Log-normal jitter around the center of bucket `b`, clamped so the
/// value never leaves the bucket.
fn jitter_in_bucket<R: Rng>(rng: &mut R, b: u32, range: f64) -> f64 {
    let width = range / DIVISIONS as f64;
    let lo = b as f64 * width;
    let center = lo + width / 2.0;
    let v = center * (0.05 * standard_normal(rng)).exp();
    v.clamp(lo + 0.02 * width, lo + 0.98 * width)
}

/// Generate a synthetic query log. Instances are emitted template-major
/// (all of template 0 first), deterministically for a fixed seed.
pub fn generate(templates: u32, counts: InstanceCounts, seed: u64) -> Vec<QueryRecord> {
    let mut rng = Pcg64::seed_from_u64(seed);
    let per_template = instance_counts(templates, counts);
    let mut out = Vec::with_capacity(per_template.iter().map(|&c| c as usize).sum());
    for i in 0..templates {
        let sql = template_sql(i, templates);
        for j in 0..per_template[i as usize] {
            let mut record = QueryRecord::new(&format!("t{i:03}q{j:05}"));
            record.sql = Some(sql.clone());
            for (s, (name, range)) in JITTERED_STATS.iter().enumerate() {
                let bucket = (i * BUCKET_MUL[s] + BUCKET_OFF[s]) % DIVISIONS;
                record
                    .stats
                    .insert(name.to_string(), jitter_in_bucket(&mut rng, bucket, *range));
            }
            record.stats.insert("num_joins".to_string(), (i % 4) as f64);
            record.cost = 1.0;
            out.push(record);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featurize::featurize;

    #[test]
    fn uniform_counts_multiply_out() {
        let records = generate(22, InstanceCounts::Uniform(19), 7);
        assert_eq!(records.len(), 418);
    }

    #[test]
    fn harmonic_counts_follow_the_formula() {
        let counts = instance_counts(22, InstanceCounts::Harmonic(66));
        for (i, &c) in counts.iter().enumerate() {
            assert_eq!(c, 66 / (i as u32 + 1));
        }
        assert_eq!(counts[0], 66);
        assert_eq!(counts[21], 3);
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let a = generate(6, InstanceCounts::Uniform(4), 99);
        let b = generate(6, InstanceCounts::Uniform(4), 99);
        assert_eq!(a, b);
        let c = generate(6, InstanceCounts::Uniform(4), 100);
        assert_ne!(a, c);
    }

    #[test]
    fn instances_of_a_template_share_numeric_tokens() {
        let spec = synth_spec();
        let records = generate(8, InstanceCounts::Uniform(6), 3);
        for chunk in records.chunks(6) {
            let (first, _) = featurize(&chunk[0], &spec).unwrap();
            for r in &chunk[1..] {
                let (v, _) = featurize(r, &spec).unwrap();
                for f in 4..10 {
                    assert_eq!(first.tokens(f), v.tokens(f), "template drifted buckets");
                }
            }
        }
    }

    #[test]
    fn rare_function_calls_sit_in_dedicated_templates() {
        let records = generate(22, InstanceCounts::Uniform(1), 1);
        let sql: Vec<&str> = records.iter().map(|r| r.sql.as_deref().unwrap()).collect();
        assert!(
            sql[0].contains("SUM(v0)") && sql[0].contains("MAX(v0)") && sql[0].contains("COUNT(*)")
        );
        assert!(sql[18].contains("ARRAY_AGG"));
        assert!(sql[21].contains("SUBSTR"));
        let agg_count = sql.iter().filter(|s| s.contains("ARRAY_AGG")).count();
        assert_eq!(agg_count, 1);
    }
}
