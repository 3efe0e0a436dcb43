//! Compression configuration: cost model, target distribution selection,
//! and knobs for the selection algorithms.

use crate::error::{Error, Result};
use crate::metrics::{AlphaKind, RhoKind};
use crate::model::{Summary, TokenDistribution, Workload};

/// How the cost `c(q)` of a query is resolved.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum CostMode {
    /// Every query costs 1.
    #[default]
    Unit,
    /// Cost from a named statistic; the pseudo-statistic `cost` reads the
    /// log entry's own cost column.
    Field(String),
}

/// Which distribution the summary should approximate.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum TargetSpec {
    /// The workload's own induced distribution.
    #[default]
    Input,
    /// Uniform mass: global over all tokens by default, per-feature scaled
    /// by the weights when the spec declares explicit weights.
    Uniform,
    /// A user-supplied distribution, already aligned to the workload.
    Explicit(TokenDistribution),
}

/// What the greedy loop ultimately returns.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum SelectionMode {
    /// The budget-feasible set maximizing the smoothed objective.
    #[default]
    Objective,
    /// The accepted-prefix maximizing the blended score
    /// `beta * alpha + (1 - beta) * rho` (ties go to the shorter prefix).
    BetaScore,
}

/// Knobs for one compression run.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressionConfig {
    /// Smoothing parameter in (0, 1]; small values emphasize coverage.
    pub gamma: f64,
    /// Blend between coverage and representativity in [0, 1].
    pub beta: f64,
    /// Budget `B >= 0` on the summed cost of the summary.
    pub budget: f64,
    pub cost_mode: CostMode,
    pub target: TargetSpec,
    pub selection: SelectionMode,
    pub alpha_kind: AlphaKind,
    pub rho_kind: RhoKind,
    /// Partition count for parallel compression; 1 means sequential.
    pub partitions: usize,
    /// Seed for randomized baselines and synthetic generation (PCG-64).
    pub seed: u64,
}

impl Default for CompressionConfig {
    fn default() -> Self {
        CompressionConfig {
            gamma: 1e-25,
            beta: 0.5,
            budget: 0.0,
            cost_mode: CostMode::Unit,
            target: TargetSpec::Input,
            selection: SelectionMode::Objective,
            alpha_kind: AlphaKind::Min,
            rho_kind: RhoKind::L1,
            partitions: 1,
            seed: 0,
        }
    }
}

impl CompressionConfig {
    pub fn with_budget(budget: f64) -> Self {
        CompressionConfig {
            budget,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidGamma(self.gamma));
        }
        if !(0.0..=1.0).contains(&self.beta) || self.beta.is_nan() {
            return Err(Error::SpecMismatch(format!(
                "beta {} outside [0, 1]",
                self.beta
            )));
        }
        if !(self.budget >= 0.0) {
            return Err(Error::SpecMismatch(format!(
                "budget {} is negative",
                self.budget
            )));
        }
        if self.partitions == 0 {
            return Err(Error::SpecMismatch("partitions must be >= 1".into()));
        }
        Ok(())
    }
}

/// Resolve the cost of one entry under a cost mode.
pub fn entry_cost(workload: &Workload, idx: usize, mode: &CostMode) -> Result<f64> {
    let record = workload.record(idx);
    match mode {
        CostMode::Unit => Ok(1.0),
        CostMode::Field(name) if name == "cost" => Ok(record.cost),
        CostMode::Field(name) => {
            record
                .stats
                .get(name)
                .copied()
                .ok_or_else(|| Error::MissingStatistic {
                    query_id: record.id.clone(),
                    statistic: name.clone(),
                })
        }
    }
}

/// Total cost `c(W)`.
pub fn total_cost(workload: &Workload, mode: &CostMode) -> Result<f64> {
    let mut sum = 0.0;
    for i in 0..workload.len() {
        sum += entry_cost(workload, i, mode)?;
    }
    Ok(sum)
}

/// Summed cost `c(S)` of a summary.
pub fn summary_cost(workload: &Workload, summary: &Summary, mode: &CostMode) -> Result<f64> {
    let mut sum = 0.0;
    for &i in summary.indices() {
        sum += entry_cost(workload, i, mode)?;
    }
    Ok(sum)
}

/// Reject entries with cost <= 0 under field modes; normalized gains and
/// budget accounting both divide by or accumulate costs.
pub fn check_positive_costs(workload: &Workload, mode: &CostMode) -> Result<()> {
    if matches!(mode, CostMode::Unit) {
        return Ok(());
    }
    for i in 0..workload.len() {
        let c = entry_cost(workload, i, mode)?;
        if !(c > 0.0) {
            return Err(Error::NonPositiveCost {
                query_id: workload.record(i).id.clone(),
                cost: c,
            });
        }
    }
    Ok(())
}
