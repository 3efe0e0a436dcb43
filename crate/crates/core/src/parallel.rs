//! Partitioned compression and incremental summary merging.
//!
//! Partitioned runs split the workload round-robin, compress every part
//! with the full budget against the global target distribution, pool the
//! per-part summaries, and compress the pool. Incremental merging
//! combines summaries of separately featurized batches, either as a plain
//! multiset union or by re-running greedy over the pooled picks; both
//! require the batches to share a spec with fixed numeric bounds so token
//! identities line up.

use std::thread;

use crate::config::CompressionConfig;
use crate::error::{Error, Result};
use crate::greedy::{greedy_over_pool, CompressionResult, GreedyMode};
use crate::metrics::{target_distribution, MetricsReport};
use crate::model::{Summary, Workload};
use crate::objective::objective;

/// Compress by partitioning into `config.partitions` parts. Every part
/// sees the same global target, so per-part gains agree with a
/// sequential run over the same candidates; the final pass enforces the
/// budget globally.
pub fn parallel_compress(
    workload: &Workload,
    config: &CompressionConfig,
) -> Result<CompressionResult> {
    config.validate()?;
    crate::config::check_positive_costs(workload, &config.cost_mode)?;
    let parts = config.partitions;
    let target = target_distribution(workload, &config.target)?;
    if parts == 1 {
        let pool: Vec<usize> = (0..workload.len()).collect();
        return greedy_over_pool(workload, config, &target, &pool, GreedyMode::Lazy);
    }

    let mut pools: Vec<Vec<usize>> = vec![Vec::new(); parts];
    for i in 0..workload.len() {
        pools[i % parts].push(i);
    }

    let mut partial: Vec<Result<CompressionResult>> = Vec::with_capacity(parts);
    thread::scope(|scope| {
        let handles: Vec<_> = pools
            .iter()
            .map(|pool| {
                let target = &target;
                scope.spawn(move || {
                    greedy_over_pool(workload, config, target, pool, GreedyMode::Lazy)
                })
            })
            .collect();
        for h in handles {
            partial.push(h.join().expect("partition worker panicked"));
        }
    });

    let mut merged_pool = Vec::new();
    for res in partial {
        merged_pool.extend(res?.summary.indices().iter().copied());
    }
    greedy_over_pool(workload, config, &target, &merged_pool, GreedyMode::Lazy)
}

/// How two summaries are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergeMode {
    /// Multiset union; cost is the sum of the parts.
    Union,
    /// Greedy re-selection over the pooled picks under `config.budget`.
    Regreedy,
}

/// Merge summaries of two batches into a summary of their union.
///
/// Returns the combined workload together with the merged result so
/// callers can recompute or extend metrics against it. Both batches must
/// have been featurized under the same spec with fixed numeric bounds.
pub fn merge_summaries(
    w1: &Workload,
    s1: &Summary,
    w2: &Workload,
    s2: &Summary,
    mode: MergeMode,
    config: &CompressionConfig,
) -> Result<(Workload, CompressionResult)> {
    w1.spec().check_same(w2.spec())?;
    if !w1.spec().has_fixed_bounds() {
        return Err(Error::SpecMismatch(
            "incremental merging requires fixed bounds on every numeric feature".into(),
        ));
    }
    config.validate()?;
    let combined = Workload::union(w1, w2)?;
    let offset = w1.len();
    let pooled: Vec<usize> = s1
        .indices()
        .iter()
        .copied()
        .chain(s2.indices().iter().map(|&i| i + offset))
        .collect();

    let target = target_distribution(&combined, &config.target)?;
    let result = match mode {
        MergeMode::Regreedy => {
            greedy_over_pool(&combined, config, &target, &pooled, GreedyMode::Lazy)?
        }
        MergeMode::Union => {
            let summary = Summary::from_indices(&combined, pooled)?;
            let metrics = MetricsReport::compute(&combined, &summary, &target, config)?;
            let objective_value = objective(&combined, &summary, &target, config.gamma)?;
            let summary_ids = combined.summary_ids(&summary);
            CompressionResult {
                summary,
                summary_ids,
                objective_value,
                metrics,
                trace: Vec::new(),
                warnings: Vec::new(),
            }
        }
    };
    Ok((combined, result))
}
