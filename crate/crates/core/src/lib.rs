// Negated float comparisons reject NaN on the validation paths; the
// index loops walk several parallel arrays at once.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

//! Workload compression for analytical query logs.
//!
//! Given a log of queries with SQL text and execution statistics, this
//! crate featurizes each query into token multisets (clause tokens plus
//! bucketized statistics), defines coverage and representativity metrics
//! over the induced token distributions, and selects a budget-constrained
//! summary that maximizes a smoothed submodular objective via lazy greedy
//! selection. Clustering and sampling baselines, parallel partition/merge
//! execution, and incremental summary merging round out the toolkit.

pub mod baselines;
pub mod config;
pub mod error;
pub mod featurize;
pub mod greedy;
pub mod metrics;
pub mod model;
pub mod objective;
pub mod parallel;
pub mod synth;

#[cfg(test)]
pub(crate) mod testutil;

pub use config::{CompressionConfig, CostMode, SelectionMode, TargetSpec};
pub use error::{Error, Result};
pub use greedy::{
    greedy_compress, greedy_compress_with_mode, CompressionResult, GreedyMode, TraceStep,
};
pub use metrics::{AlphaKind, MetricsReport, RhoKind};
pub use model::{
    BucketMode, FeatureDecl, FeatureKind, FeatureSpec, FeatureVector, QueryRecord, Summary,
    TokenDistribution, TokenId, TokenValue, Workload,
};
pub use parallel::{merge_summaries, parallel_compress, MergeMode};
