//! Coverage and representativity metrics, induced and target
//! distributions, the blended score, and the compression ratio.
//!
//! The default probability form is global: a token's mass is its frequency
//! over the total token count. When the spec declares explicit feature
//! weights, distributions switch to the weighted per-feature form
//! `p(t, f) = w_f * m(t, f) / |f(S)|` (features with no tokens are skipped
//! and the weights renormalized over the rest). Average coverage always
//! uses the feature weights, uniform by default.

use crate::config::{summary_cost, total_cost, CompressionConfig, CostMode, TargetSpec};
use crate::error::{Error, Result};
use crate::model::{Summary, TokenDistribution, Workload};

/// Which coverage aggregate enters the blended score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaKind {
    Min,
    Avg,
}

/// Which representativity metric enters the blended score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhoKind {
    L1,
    LInf,
}

/// All summary-quality numbers for one (summary, reference) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// Per-feature coverage, indexed like the spec's feature list.
    pub alpha_per_feature: Vec<f64>,
    pub alpha_min: f64,
    pub alpha_avg: f64,
    pub rho_1: f64,
    pub rho_inf: f64,
    /// `beta * alpha + (1 - beta) * rho` for the configured metric pair.
    pub beta_score: f64,
    /// Compression ratio `1 - c(S)/c(W)`.
    pub eta: f64,
}

impl MetricsReport {
    pub fn alpha(&self, kind: AlphaKind) -> f64 {
        match kind {
            AlphaKind::Min => self.alpha_min,
            AlphaKind::Avg => self.alpha_avg,
        }
    }

    pub fn rho(&self, kind: RhoKind) -> f64 {
        match kind {
            RhoKind::L1 => self.rho_1,
            RhoKind::LInf => self.rho_inf,
        }
    }

    /// Full report for a summary under one configuration.
    pub fn compute(
        workload: &Workload,
        summary: &Summary,
        target: &TokenDistribution,
        config: &CompressionConfig,
    ) -> Result<MetricsReport> {
        let (alpha_per_feature, alpha_min, alpha_avg) = coverage(workload, summary);
        let (rho_1, rho_inf) = representativity(workload, summary, target)?;
        let alpha = match config.alpha_kind {
            AlphaKind::Min => alpha_min,
            AlphaKind::Avg => alpha_avg,
        };
        let rho = match config.rho_kind {
            RhoKind::L1 => rho_1,
            RhoKind::LInf => rho_inf,
        };
        let eta = compression_ratio(workload, summary, &config.cost_mode)?;
        Ok(MetricsReport {
            alpha_per_feature,
            alpha_min,
            alpha_avg,
            rho_1,
            rho_inf,
            beta_score: beta_score(alpha, rho, config.beta),
            eta,
        })
    }
}

/// Distribution induced by the whole workload (`summary = None`) or by a
/// summary within it. Fails with [`Error::EmptyWorkload`] when there are
/// no tokens to normalize over.
pub fn induced_distribution(
    workload: &Workload,
    summary: Option<&Summary>,
) -> Result<TokenDistribution> {
    let counts: Vec<u64> = match summary {
        None => workload.frequencies().to_vec(),
        Some(s) => workload.summary_counts(s),
    };
    let mass = distribution_from_counts(workload, &counts).ok_or(Error::EmptyWorkload)?;
    TokenDistribution::renormalized(mass, 1e-9)
}

/// `p` over token ids for arbitrary counts; `None` when every mass would
/// be zero. The all-zero case is meaningful for representativity (an
/// empty summary has `p_S = 0` everywhere), so callers choose.
fn distribution_from_counts(workload: &Workload, counts: &[u64]) -> Option<Vec<f64>> {
    let spec = workload.spec();
    if !spec.has_explicit_weights() {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return None;
        }
        return Some(counts.iter().map(|&c| c as f64 / total as f64).collect());
    }
    // Weighted form: per-feature normalization scaled by renormalized
    // weights over the features that have tokens.
    let weights = spec.weights();
    let mut feature_totals = vec![0u64; spec.len()];
    for (i, &c) in counts.iter().enumerate() {
        feature_totals[workload.table().feature_of(crate::model::TokenId(i as u32))] += c;
    }
    let active_weight: f64 = (0..spec.len())
        .filter(|&f| feature_totals[f] > 0)
        .map(|f| weights[f])
        .sum();
    if active_weight <= 0.0 {
        return None;
    }
    let mass = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let f = workload.table().feature_of(crate::model::TokenId(i as u32));
            if feature_totals[f] == 0 {
                0.0
            } else {
                (weights[f] / active_weight) * (c as f64 / feature_totals[f] as f64)
            }
        })
        .collect();
    Some(mass)
}

/// Per-feature coverage factors plus their min and weighted average.
/// Features with an empty active domain in the reference are vacuously
/// covered (`alpha_f = 1`).
pub fn coverage(workload: &Workload, summary: &Summary) -> (Vec<f64>, f64, f64) {
    let counts = workload.summary_counts(summary);
    coverage_from_counts(workload, &counts)
}

pub(crate) fn coverage_from_counts(workload: &Workload, counts: &[u64]) -> (Vec<f64>, f64, f64) {
    let spec = workload.spec();
    let weights = spec.weights();
    let mut per_feature = Vec::with_capacity(spec.len());
    for f in 0..spec.len() {
        let dom = workload.dom(f);
        if dom.is_empty() {
            per_feature.push(1.0);
        } else {
            let covered = dom.iter().filter(|t| counts[t.index()] > 0).count();
            per_feature.push(covered as f64 / dom.len() as f64);
        }
    }
    let alpha_min = per_feature.iter().copied().fold(f64::INFINITY, f64::min);
    let alpha_min = if alpha_min.is_finite() {
        alpha_min
    } else {
        1.0
    };
    let alpha_avg = per_feature.iter().zip(&weights).map(|(a, w)| a * w).sum();
    (per_feature, alpha_min, alpha_avg)
}

/// Representativity of a summary against a target distribution:
/// `rho_1` is one minus the total variation distance, `rho_inf` one minus
/// the largest per-token deviation. Sums range over the reference
/// workload's active domain; an empty summary contributes `p_S = 0`.
pub fn representativity(
    workload: &Workload,
    summary: &Summary,
    target: &TokenDistribution,
) -> Result<(f64, f64)> {
    let counts = workload.summary_counts(summary);
    representativity_from_counts(workload, &counts, target)
}

pub(crate) fn representativity_from_counts(
    workload: &Workload,
    counts: &[u64],
    target: &TokenDistribution,
) -> Result<(f64, f64)> {
    if target.len() != workload.table().len() {
        return Err(Error::TargetSupportViolation {
            feature: "<alignment>".into(),
            token: format!(
                "{} masses for {} tokens",
                target.len(),
                workload.table().len()
            ),
        });
    }
    let p = distribution_from_counts(workload, counts)
        .unwrap_or_else(|| vec![0.0; workload.table().len()]);
    let mut tv = 0.0;
    let mut max_dev: f64 = 0.0;
    for (i, &d) in target.mass().iter().enumerate() {
        let dev = (p[i] - d).abs();
        tv += dev;
        max_dev = max_dev.max(dev);
    }
    Ok((1.0 - 0.5 * tv, 1.0 - max_dev))
}

/// The blended selection score `beta * alpha + (1 - beta) * rho`.
pub fn beta_score(alpha: f64, rho: f64, beta: f64) -> f64 {
    beta * alpha + (1.0 - beta) * rho
}

/// Compression ratio `eta = 1 - c(S)/c(W)`, the fraction of workload cost
/// pruned.
pub fn compression_ratio(workload: &Workload, summary: &Summary, mode: &CostMode) -> Result<f64> {
    let w_cost = total_cost(workload, mode)?;
    if !(w_cost > 0.0) {
        return Err(Error::ZeroCostWorkload);
    }
    let s_cost = summary_cost(workload, summary, mode)?;
    Ok(1.0 - s_cost / w_cost)
}

/// Resolve a target specification against a workload.
pub fn target_distribution(workload: &Workload, spec: &TargetSpec) -> Result<TokenDistribution> {
    match spec {
        TargetSpec::Input => induced_distribution(workload, None),
        TargetSpec::Uniform => uniform_target(workload),
        TargetSpec::Explicit(d) => {
            if d.len() != workload.table().len() {
                return Err(Error::TargetSupportViolation {
                    feature: "<alignment>".into(),
                    token: format!("{} masses for {} tokens", d.len(), workload.table().len()),
                });
            }
            TokenDistribution::renormalized(d.mass().to_vec(), 1e-6)
        }
    }
}

fn uniform_target(workload: &Workload) -> Result<TokenDistribution> {
    let spec = workload.spec();
    let n_tokens = workload.table().len();
    if n_tokens == 0 {
        return Err(Error::EmptyWorkload);
    }
    if !spec.has_explicit_weights() {
        return TokenDistribution::renormalized(vec![1.0 / n_tokens as f64; n_tokens], 1e-9);
    }
    let weights = spec.weights();
    let active_weight: f64 = (0..spec.len())
        .filter(|&f| !workload.dom(f).is_empty())
        .map(|f| weights[f])
        .sum();
    if active_weight <= 0.0 {
        return Err(Error::EmptyWorkload);
    }
    let mut mass = vec![0.0; n_tokens];
    for f in 0..spec.len() {
        let dom = workload.dom(f);
        if dom.is_empty() {
            continue;
        }
        let per_token = (weights[f] / active_weight) / dom.len() as f64;
        for t in dom {
            mass[t.index()] = per_token;
        }
    }
    TokenDistribution::renormalized(mass, 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::featurize::featurize;
    use crate::model::{FeatureDecl, FeatureSpec, FeatureVector, QueryRecord, TokenValue};

    fn trio_spec() -> FeatureSpec {
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

    fn record(id: &str, sql: &str, stats: &[f64]) -> QueryRecord {
        let names = [
            "execution_time_ms",
            "planning_time_ms",
            "input_bytes",
            "output_rows",
            "cpu_time_ms",
            "num_joins",
        ];
        QueryRecord {
            id: id.into(),
            sql: Some(sql.into()),
            stats: names
                .iter()
                .map(|s| s.to_string())
                .zip(stats.iter().copied())
                .collect(),
            cost: 1.0,
        }
    }

    /// The three-query workload used throughout: an aggregate query, a
    /// two-table count, and a three-table ordered scan.
    pub(crate) fn trio_workload() -> Workload {
        let spec = trio_spec();
        let records = vec![
            record(
                "q1",
                "SELECT a, AVG(b), MAX(c), MAX(d) FROM T1 GROUP BY a",
                &[5.0, 4.0, 5.0, 100.0, 2.0, 0.0],
            ),
            record(
                "q2",
                "SELECT COUNT(*) FROM T1, T2 WHERE T1.a = T2.a",
                &[10.0, 2.0, 10.0, 1000.0, 3.0, 1.0],
            ),
            record(
                "q3",
                "SELECT * FROM T1, T2, T3 ORDER BY T1.a, T2.b, T3.c",
                &[8.0, 5.0, 20.0, 500.0, 4.0, 2.0],
            ),
        ];
        let items = records
            .into_iter()
            .map(|r| {
                let (v, _) = featurize(&r, &spec).unwrap();
                (r, v)
            })
            .collect();
        Workload::from_featurized(spec, items).unwrap()
    }

    fn s13(w: &Workload) -> Summary {
        Summary::from_ids(w, &["q1".into(), "q3".into()]).unwrap()
    }

    #[test]
    fn induced_distribution_matches_hand_computation() {
        let w = trio_workload();
        assert_eq!(w.size(), 32);
        let p = induced_distribution(&w, None).unwrap();
        let avg = w.table().lookup(0, &TokenValue::text("AVG")).unwrap();
        assert!((p.get(avg) - 1.0 / 32.0).abs() < 1e-12);

        let s = s13(&w);
        let ps = induced_distribution(&w, Some(&s)).unwrap();
        let max = w.table().lookup(0, &TokenValue::text("MAX")).unwrap();
        assert!((ps.get(max) - 2.0 / 23.0).abs() < 1e-12);

        // Singleton: all mass on its only token.
        let spec = FeatureSpec::new(vec![FeatureDecl::categorical("f")], 10).unwrap();
        let v = FeatureVector::new(vec![vec![(TokenValue::text("x"), 1)]]);
        let w1 = Workload::from_featurized(spec, vec![(QueryRecord::new("q"), v)]).unwrap();
        let p1 = induced_distribution(&w1, None).unwrap();
        assert_eq!(p1.mass(), &[1.0]);
    }

    #[test]
    fn empty_workload_has_no_distribution() {
        let spec = FeatureSpec::new(vec![FeatureDecl::categorical("f")], 10).unwrap();
        let w = Workload::from_featurized(spec, vec![]).unwrap();
        assert!(matches!(
            induced_distribution(&w, None),
            Err(Error::EmptyWorkload)
        ));
    }

    #[test]
    fn coverage_matches_hand_computation() {
        let w = trio_workload();
        let s = s13(&w);
        let (per_feature, alpha_min, alpha_avg) = coverage(&w, &s);
        // function_call misses COUNT; every numeric feature misses q2's
        // bucket; the other categorical features are fully covered.
        let expect = [
            2.0 / 3.0,
            1.0,
            1.0,
            1.0,
            2.0 / 3.0,
            2.0 / 3.0,
            2.0 / 3.0,
            2.0 / 3.0,
            2.0 / 3.0,
            2.0 / 3.0,
        ];
        for (got, want) in per_feature.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((alpha_min - 2.0 / 3.0).abs() < 1e-12);
        assert!((alpha_avg - 23.0 / 30.0).abs() < 1e-12);

        // Full summary and empty summary extremes.
        let all = Summary::from_indices(&w, vec![0, 1, 2]).unwrap();
        let (_, min_all, avg_all) = coverage(&w, &all);
        assert_eq!(min_all, 1.0);
        assert!((avg_all - 1.0).abs() < 1e-12);
        let (_, min_none, _) = coverage(&w, &Summary::empty());
        assert_eq!(min_none, 0.0);
    }

    #[test]
    fn representativity_matches_direct_deviation_sum() {
        let w = trio_workload();
        let s = s13(&w);
        let d = induced_distribution(&w, None).unwrap();
        let (rho_1, rho_inf) = representativity(&w, &s, &d).unwrap();

        // Independent oracle: enumerate every token's deviation from the
        // frequency tables. With ||W|| = 32 and ||S|| = 23, tokens present
        // in both with equal multiplicity m deviate by m * (1/23 - 1/32) =
        // m * 9/736; q2-only tokens deviate by their mass in W.
        //   equal-multiplicity side: AVG 1, MAX 2, T3 1, group 1, order 3,
        //   12 covered numeric buckets => 20 * 9/736
        //   missing side: COUNT 23/736, T1 |2/23-3/32| = 5/736,
        //   T2 |1/23-2/32| = 14/736, 6 numeric buckets 6 * 23/736
        // Total variation = (180 + 180)/736 / 2 = 180/736.
        let expected_rho1 = 1.0 - 180.0 / 736.0;
        assert!((rho_1 - expected_rho1).abs() < 1e-12, "rho_1 = {rho_1}");
        assert!((rho_inf - (1.0 - 1.0 / 32.0)).abs() < 1e-12);

        // Identical distributions are perfectly representative.
        let all = Summary::from_indices(&w, vec![0, 1, 2]).unwrap();
        let (r1, rinf) = representativity(&w, &all, &d).unwrap();
        assert!((r1 - 1.0).abs() < 1e-12);
        assert!((rinf - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_summary_uses_zero_distribution() {
        let w = trio_workload();
        let d = induced_distribution(&w, None).unwrap();
        let (rho_1, rho_inf) = representativity(&w, &Summary::empty(), &d).unwrap();
        assert!((rho_1 - 0.5).abs() < 1e-12); // 1 - sum(d)/2
        let max_mass = d.mass().iter().cloned().fold(0.0, f64::max);
        assert!((rho_inf - (1.0 - max_mass)).abs() < 1e-12);
    }

    /// The one-feature pathology workload: q1 = {v1}, q2 = {v2},
    /// q3 = {v1, v2}.
    pub(crate) fn pathology_workload() -> Workload {
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

    #[test]
    fn rho_is_not_monotone_or_submodular() {
        let w = pathology_workload();
        let d = induced_distribution(&w, None).unwrap();
        let rho = |idx: Vec<usize>| {
            let s = Summary::from_indices(&w, idx).unwrap();
            representativity(&w, &s, &d).unwrap()
        };
        let (r3, ri3) = rho(vec![2]);
        assert_eq!((r3, ri3), (1.0, 1.0));
        let (r13, ri13) = rho(vec![0, 2]);
        assert!((r13 - 5.0 / 6.0).abs() < 1e-12);
        assert!((ri13 - 5.0 / 6.0).abs() < 1e-12);
        // Submodularity violation: 5/6 + 5/6 < 1 + 1.
        let (r23, _) = rho(vec![1, 2]);
        let (r123, _) = rho(vec![0, 1, 2]);
        assert!(r13 + r23 < r123 + r3);
        assert!((r123 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn beta_score_blends_endpoints() {
        let alpha = 2.0 / 3.0;
        let rho = 0.779;
        let blended = beta_score(alpha, rho, 0.5);
        assert!((blended - 0.7228333333333333).abs() < 1e-12);
        assert_eq!(beta_score(alpha, rho, 1.0), alpha);
        assert_eq!(beta_score(alpha, rho, 0.0), rho);
    }

    #[test]
    fn compression_ratio_examples() {
        let w = trio_workload();
        let all = Summary::from_indices(&w, vec![0, 1, 2]).unwrap();
        assert_eq!(compression_ratio(&w, &all, &CostMode::Unit).unwrap(), 0.0);
        assert_eq!(
            compression_ratio(&w, &Summary::empty(), &CostMode::Unit).unwrap(),
            1.0
        );
        // 22 of 2200 unit-cost queries prune 99% of the cost.
        assert!((1.0_f64 - 22.0 / 2200.0 - 0.99).abs() < 1e-12);
    }

    #[test]
    fn uniform_target_weighted_by_feature() {
        // A spec that puts all weight on one feature spreads the mass
        // uniformly over that feature's tokens.
        let spec = FeatureSpec::new(
            vec![
                FeatureDecl::categorical("fc").with_weight(1.0),
                FeatureDecl::categorical("other").with_weight(0.0),
            ],
            10,
        )
        .unwrap();
        let v = |fc: &[&str], other: &[&str]| {
            FeatureVector::new(vec![
                fc.iter().map(|n| (TokenValue::text(n), 1)).collect(),
                other.iter().map(|n| (TokenValue::text(n), 1)).collect(),
            ])
        };
        let w = Workload::from_featurized(
            spec,
            vec![
                (QueryRecord::new("a"), v(&["sum", "max", "count"], &["x"])),
                (QueryRecord::new("b"), v(&["substr"], &["y"])),
                (QueryRecord::new("c"), v(&["array_agg"], &["z"])),
            ],
        )
        .unwrap();
        let d = target_distribution(&w, &TargetSpec::Uniform).unwrap();
        let fc_tokens = w.dom(0);
        assert_eq!(fc_tokens.len(), 5);
        for t in fc_tokens {
            assert!((d.get(*t) - 0.2).abs() < 1e-12);
        }
        for t in w.dom(1) {
            assert_eq!(d.get(*t), 0.0);
        }
    }

    #[test]
    fn explicit_target_tolerance() {
        // Raw masses enter through the renormalizing constructor with a
        // 1e-6 tolerance; a 5% excess is rejected.
        let w = trio_workload();
        let n = w.table().len();
        let mut mass = vec![1.05 / n as f64; n];
        mass[0] += 0.0; // sum = 1.05
        let raw = crate::model::TokenDistribution::renormalized(mass, 1e-6);
        assert!(matches!(raw, Err(Error::NotNormalizable(_))));
        let ok =
            crate::model::TokenDistribution::renormalized(vec![(1.0 + 5e-7) / n as f64; n], 1e-6)
                .unwrap();
        assert!(target_distribution(&w, &TargetSpec::Explicit(ok)).is_ok());
    }

    #[test]
    fn alpha_min_never_exceeds_alpha_avg_under_uniform_weights() {
        use crate::testutil::rand_workload;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_pcg::Pcg64::seed_from_u64(7);
        for _ in 0..100 {
            let n = rng.gen_range(1..12);
            let w = rand_workload(&mut rng, n, 3, 5, 2);
            let d = induced_distribution(&w, None).unwrap();
            let idx: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
            let s = Summary::from_indices(&w, idx).unwrap();
            let (_, min, avg) = coverage(&w, &s);
            assert!(min >= 0.0);
            assert!(min <= avg + 1e-12);
            assert!(avg <= 1.0 + 1e-12);
            // Against the input distribution both metrics stay in [0, 1].
            let (rho_1, rho_inf) = representativity(&w, &s, &d).unwrap();
            assert!((0.0..=1.0).contains(&rho_1));
            assert!((0.0..=1.0).contains(&rho_inf));
        }
    }
}
