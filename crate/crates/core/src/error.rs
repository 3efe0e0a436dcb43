//! Error type shared by all library modules.

use std::fmt;

/// Errors produced by featurization, metric computation, and summary selection.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A feature name was referenced that the spec does not declare.
    UnknownFeature(String),
    /// SQL text could not be tokenized (unbalanced parentheses, unterminated
    /// literal). Recognizable-but-uninteresting SQL is not an error.
    ParseError { query_id: String, detail: String },
    /// Numeric bucketing bounds with `min >= max`.
    InvalidBounds { feature: String, min: f64, max: f64 },
    /// Exponential bucketing requires `epsilon > 0`.
    InvalidEpsilon(f64),
    /// A declared numeric feature has no value in a log entry.
    MissingStatistic { query_id: String, statistic: String },
    /// An operation that needs `||W|| > 0` was given an empty workload.
    EmptyWorkload,
    /// A summary references queries that are not in the reference workload
    /// (by id, respecting multiplicity).
    NotASubset(String),
    /// A target distribution puts mass on a token outside the reference
    /// workload's active domain.
    TargetSupportViolation { feature: String, token: String },
    /// An explicit target distribution's total mass is too far from 1 to
    /// renormalize (|sum - 1| > 1e-6).
    NotNormalizable(f64),
    /// The smoothing parameter must lie in (0, 1].
    InvalidGamma(f64),
    /// Normalized gains divide by cost; a query with cost <= 0 was seen
    /// under a field cost mode.
    NonPositiveCost { query_id: String, cost: f64 },
    /// Clustering requires 1 <= k <= n.
    InvalidK { k: usize, n: usize },
    /// Two workloads being merged were featurized under different specs
    /// (feature set, bounds, bucket count, or bucketing mode differ).
    SpecMismatch(String),
    /// KL divergence against a summary that misses a positive-mass target
    /// token is infinite.
    IncompleteCoverage { feature: String, token: String },
    /// Compression ratio is undefined for a zero-cost reference workload.
    ZeroCostWorkload,
    /// Distance computation across vectors from different specs.
    DistanceSpecMismatch,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UnknownFeature(name) => write!(f, "unknown feature: {name}"),
            Error::ParseError { query_id, detail } => {
                write!(f, "cannot parse SQL for query {query_id}: {detail}")
            }
            Error::InvalidBounds { feature, min, max } => {
                write!(
                    f,
                    "feature {feature}: invalid bounds min={min} max={max} (need min < max)"
                )
            }
            Error::InvalidEpsilon(e) => write!(f, "invalid epsilon {e} (need epsilon > 0)"),
            Error::MissingStatistic {
                query_id,
                statistic,
            } => {
                write!(f, "query {query_id}: missing statistic {statistic}")
            }
            Error::EmptyWorkload => write!(f, "workload has no tokens"),
            Error::NotASubset(detail) => {
                write!(f, "summary is not a sub-multiset of the workload: {detail}")
            }
            Error::TargetSupportViolation { feature, token } => {
                write!(f, "target distribution puts mass on ({feature}, {token}) which is outside the workload domain")
            }
            Error::NotNormalizable(sum) => {
                write!(
                    f,
                    "explicit target distribution sums to {sum}, too far from 1 to renormalize"
                )
            }
            Error::InvalidGamma(g) => write!(f, "invalid gamma {g} (need 0 < gamma <= 1)"),
            Error::NonPositiveCost { query_id, cost } => {
                write!(f, "query {query_id} has non-positive cost {cost}")
            }
            Error::InvalidK { k, n } => write!(f, "invalid k={k} for {n} queries"),
            Error::SpecMismatch(detail) => write!(f, "feature spec mismatch: {detail}"),
            Error::IncompleteCoverage { feature, token } => {
                write!(
                    f,
                    "summary does not cover ({feature}, {token}) which has positive target mass"
                )
            }
            Error::ZeroCostWorkload => write!(f, "reference workload has zero total cost"),
            Error::DistanceSpecMismatch => {
                write!(f, "distance between vectors from different feature specs")
            }
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
