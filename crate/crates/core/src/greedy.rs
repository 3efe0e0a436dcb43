//! Budgeted greedy summary selection over the smoothed objective.
//!
//! Each round selects the candidate with the highest normalized marginal
//! gain, adds it if it fits the remaining budget, and removes it from the
//! pool either way; the pool drains completely. The best budget-feasible
//! single query is kept as a fallback and the better of the two (by
//! objective value) wins. This scheme carries a `(1 - 1/e)/2`
//! approximation guarantee for monotone submodular objectives under a
//! knapsack constraint.
//!
//! Lazy evaluation keeps stale gains in a max-heap: submodularity makes
//! any stale gain an upper bound on the current one, so an entry that is
//! still on top after refreshing is the true argmax. Ties (within 1e-12)
//! break toward the smallest query id, which makes lazy and eager
//! evaluation return identical selection sequences.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use crate::config::{check_positive_costs, entry_cost, CompressionConfig, SelectionMode};
use crate::error::Result;
use crate::metrics::{
    beta_score, coverage_from_counts, representativity_from_counts, target_distribution,
    MetricsReport,
};
use crate::model::{Summary, TokenDistribution, Workload};
use crate::objective::{objective_from_counts, ObjectiveState};

/// Gains closer than this are ties and resolve by query id.
const TIE_EPS: f64 = 1e-12;

/// Evaluation strategy; both return bit-identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreedyMode {
    /// Heap of stale upper bounds, refreshed on demand.
    Lazy,
    /// Recompute every candidate's gain each round.
    Eager,
}

/// One accepted pick.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub id: String,
    pub entry: usize,
    pub normalized_gain: f64,
    pub cumulative_cost: f64,
}

/// Outcome of a compression run.
#[derive(Debug, Clone)]
pub struct CompressionResult {
    /// Selected entries in pick order.
    pub summary: Summary,
    pub summary_ids: Vec<String>,
    pub objective_value: f64,
    pub metrics: MetricsReport,
    pub trace: Vec<TraceStep>,
    pub warnings: Vec<String>,
}

/// Compress a workload under a budget with lazy greedy selection.
pub fn greedy_compress(
    workload: &Workload,
    config: &CompressionConfig,
) -> Result<CompressionResult> {
    greedy_compress_with_mode(workload, config, GreedyMode::Lazy)
}

pub fn greedy_compress_with_mode(
    workload: &Workload,
    config: &CompressionConfig,
    mode: GreedyMode,
) -> Result<CompressionResult> {
    config.validate()?;
    check_positive_costs(workload, &config.cost_mode)?;
    let target = target_distribution(workload, &config.target)?;
    let pool: Vec<usize> = (0..workload.len()).collect();
    greedy_over_pool(workload, config, &target, &pool, mode)
}

/// Greedy selection restricted to a candidate pool. The target and all
/// metrics refer to the full workload; partitioned and merge-based
/// callers rely on that.
pub(crate) fn greedy_over_pool(
    workload: &Workload,
    config: &CompressionConfig,
    target: &TokenDistribution,
    pool: &[usize],
    mode: GreedyMode,
) -> Result<CompressionResult> {
    config.validate()?;
    let budget = config.budget;
    let costs: Vec<f64> = pool
        .iter()
        .map(|&e| entry_cost(workload, e, &config.cost_mode))
        .collect::<Result<_>>()?;

    // Tie rank: position under (query id, entry index) ordering.
    let rank = tie_ranks(workload, pool);

    let mut state = ObjectiveState::new(workload, target, config.gamma)?;
    let mut picks: Vec<(usize, f64)> = Vec::new(); // (pool slot, normalized gain)
    let mut spent = 0.0;

    let mut tracker = match config.selection {
        SelectionMode::BetaScore => Some(BetaTracker::new(workload, target, config)?),
        SelectionMode::Objective => None,
    };

    match mode {
        GreedyMode::Eager => {
            let mut alive: Vec<bool> = vec![true; pool.len()];
            let mut remaining = pool.len();
            while remaining > 0 {
                if !any_fits(&alive, &costs, budget - spent) {
                    break;
                }
                // Max gain first, then the smallest rank among gains
                // within TIE_EPS of it.
                let mut gains = vec![0.0; pool.len()];
                let mut g_star = f64::NEG_INFINITY;
                for slot in 0..pool.len() {
                    if !alive[slot] {
                        continue;
                    }
                    gains[slot] = state.normalized_gain(workload, pool[slot], costs[slot])?;
                    g_star = g_star.max(gains[slot]);
                }
                let mut winner: Option<usize> = None;
                for slot in 0..pool.len() {
                    if alive[slot]
                        && gains[slot] >= g_star - TIE_EPS
                        && winner.map(|w| rank[slot] < rank[w]).unwrap_or(true)
                    {
                        winner = Some(slot);
                    }
                }
                let slot = winner.expect("a maximum exists");
                let gain = gains[slot];
                alive[slot] = false;
                remaining -= 1;
                if spent + costs[slot] <= budget {
                    spent += costs[slot];
                    state.add(workload, pool[slot]);
                    picks.push((slot, gain));
                    if let Some(t) = tracker.as_mut() {
                        t.record(state.counts(), picks.len())?;
                    }
                }
            }
        }
        GreedyMode::Lazy => {
            // Candidates with identical token multisets and identical cost
            // have equal normalized gains against every state, so they
            // share one heap entry; members are consumed in rank order.
            // Template-heavy logs collapse by orders of magnitude this way.
            let mut group_of: HashMap<(Vec<(u32, u32)>, u64), usize> = HashMap::new();
            let mut groups: Vec<GainGroup> = Vec::new();
            for slot in 0..pool.len() {
                let key = (
                    workload
                        .entry_tokens(pool[slot])
                        .iter()
                        .map(|&(t, c)| (t.0, c))
                        .collect::<Vec<_>>(),
                    costs[slot].to_bits(),
                );
                let gid = *group_of.entry(key).or_insert_with(|| {
                    groups.push(GainGroup {
                        members: Vec::new(),
                        cursor: 0,
                        cost: costs[slot],
                    });
                    groups.len() - 1
                });
                groups[gid].members.push(slot);
            }
            for g in &mut groups {
                g.members.sort_by_key(|&slot| rank[slot]);
            }

            let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::with_capacity(groups.len());
            for (gid, g) in groups.iter().enumerate() {
                let gain = state.normalized_gain(workload, pool[g.members[0]], g.cost)?;
                heap.push(HeapEntry {
                    gain,
                    rank: rank[g.members[0]],
                    group: gid,
                    stamp: 0,
                });
            }
            let mut version: u64 = 0;
            // Remaining pool member count per cost (bit patterns of
            // positive floats order like the floats themselves).
            let mut cost_counts: std::collections::BTreeMap<u64, usize> = BTreeMap::new();
            for g in &groups {
                *cost_counts.entry(g.cost.to_bits()).or_insert(0) += g.members.len();
            }

            loop {
                // Stop once nothing left can ever fit; draining the rest
                // of the pool could only discard, which changes nothing.
                match cost_counts.keys().next() {
                    None => break,
                    Some(&bits) if spent + f64::from_bits(bits) > budget => break,
                    Some(_) => {}
                }
                if heap.is_empty() {
                    break;
                }

                // Pop until the top is fresh; it is then the true argmax.
                let mut top = loop {
                    let mut e = heap.pop().expect("checked non-empty");
                    if e.stamp == version {
                        break e;
                    }
                    let g = &groups[e.group];
                    e.gain = state.normalized_gain(workload, pool[g.members[g.cursor]], g.cost)?;
                    e.stamp = version;
                    heap.push(e);
                };
                // Gather everything that could tie with it, refreshing
                // stale bounds, and keep the smallest member rank.
                let g_star = top.gain;
                let mut losers = Vec::new();
                while let Some(peek) = heap.peek() {
                    if peek.gain < g_star - TIE_EPS {
                        break;
                    }
                    let mut e = heap.pop().unwrap();
                    if e.stamp != version {
                        let g = &groups[e.group];
                        e.gain =
                            state.normalized_gain(workload, pool[g.members[g.cursor]], g.cost)?;
                        e.stamp = version;
                    }
                    if e.gain >= g_star - TIE_EPS && e.rank < top.rank {
                        std::mem::swap(&mut top, &mut e);
                    }
                    losers.push(e);
                }
                for e in losers {
                    heap.push(e);
                }

                let group = &mut groups[top.group];
                let slot = group.members[group.cursor];
                group.cursor += 1;
                let accepted = spent + group.cost <= budget;
                if accepted {
                    spent += group.cost;
                }
                // One member leaves the pool per round either way.
                if let Some(count) = cost_counts.get_mut(&group.cost.to_bits()) {
                    *count -= 1;
                    if *count == 0 {
                        cost_counts.remove(&group.cost.to_bits());
                    }
                }
                if group.cursor < group.members.len() {
                    heap.push(HeapEntry {
                        gain: top.gain,
                        rank: rank[group.members[group.cursor]],
                        group: top.group,
                        stamp: top.stamp,
                    });
                }
                if accepted {
                    state.add(workload, pool[slot]);
                    version += 1;
                    picks.push((slot, top.gain));
                    if let Some(t) = tracker.as_mut() {
                        t.record(state.counts(), picks.len())?;
                    }
                }
            }
        }
    }

    // Assemble the result for the configured selection mode.
    let mut warnings = Vec::new();
    if picks.is_empty() && !pool.is_empty() {
        warnings.push("budget is below the cost of every candidate; summary is empty".into());
    }

    let chosen: Vec<(usize, f64, f64)> = {
        let mut cum = 0.0;
        picks
            .iter()
            .map(|&(slot, gain)| {
                cum += costs[slot];
                (slot, gain, cum)
            })
            .collect()
    };

    let final_slots: Vec<(usize, f64, f64)> = match config.selection {
        SelectionMode::BetaScore => {
            let best_len = tracker.as_ref().map(|t| t.best_len()).unwrap_or(0);
            chosen[..best_len].to_vec()
        }
        SelectionMode::Objective => {
            // Single-element fallback: the best feasible singleton by G.
            let empty = ObjectiveState::new(workload, target, config.gamma)?;
            let mut best_single: Option<(f64, usize)> = None; // (G, slot)
            for slot in 0..pool.len() {
                if costs[slot] > budget {
                    continue;
                }
                let g = empty.gain(workload, pool[slot]);
                let better = match best_single {
                    None => true,
                    Some((bg, bs)) => g > bg || (g == bg && rank[slot] < rank[bs]),
                };
                if better {
                    best_single = Some((g, slot));
                }
            }
            match best_single {
                Some((g_single, slot)) if g_single > state.value() => {
                    vec![(slot, g_single / costs[slot], costs[slot])]
                }
                _ => chosen,
            }
        }
    };

    let indices: Vec<usize> = final_slots.iter().map(|&(slot, _, _)| pool[slot]).collect();
    let summary = Summary::from_indices(workload, indices)?;
    let counts = workload.summary_counts(&summary);
    let objective_value = objective_from_counts(&counts, target, config.gamma)?;
    let metrics = MetricsReport::compute(workload, &summary, target, config)?;
    let trace = final_slots
        .iter()
        .map(|&(slot, gain, cum)| TraceStep {
            id: workload.record(pool[slot]).id.clone(),
            entry: pool[slot],
            normalized_gain: gain,
            cumulative_cost: cum,
        })
        .collect();
    let summary_ids = workload.summary_ids(&summary);
    Ok(CompressionResult {
        summary,
        summary_ids,
        objective_value,
        metrics,
        trace,
        warnings,
    })
}

fn any_fits(alive: &[bool], costs: &[f64], remaining: f64) -> bool {
    alive.iter().zip(costs).any(|(&a, &c)| a && c <= remaining)
}

/// Rank of each pool slot under (query id, entry index) ordering; the
/// deterministic tie-break key.
fn tie_ranks(workload: &Workload, pool: &[usize]) -> Vec<u32> {
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| {
        workload
            .record(pool[a])
            .id
            .cmp(&workload.record(pool[b]).id)
            .then(pool[a].cmp(&pool[b]))
    });
    let mut rank = vec![0u32; pool.len()];
    for (r, &slot) in order.iter().enumerate() {
        rank[slot] = r as u32;
    }
    rank
}

/// Pool slots sharing one token multiset and cost, in tie-rank order;
/// `cursor` points at the lowest-rank member still in the pool.
#[derive(Debug, Clone)]
struct GainGroup {
    members: Vec<usize>,
    cursor: usize,
    cost: f64,
}

#[derive(Debug, Clone, Copy)]
struct HeapEntry {
    gain: f64,
    /// Rank of the group's current member.
    rank: u32,
    group: usize,
    stamp: u64,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.gain == other.gain && self.rank == other.rank
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap: larger gain first, then smaller rank.
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.rank.cmp(&self.rank))
    }
}

/// Tracks the blended score after every accepted addition and remembers
/// the best prefix (ties go to the shorter one). The empty prefix is a
/// candidate too: if every addition lowers the score, nothing is kept.
struct BetaTracker<'a> {
    workload: &'a Workload,
    target: &'a TokenDistribution,
    config: &'a CompressionConfig,
    best_score: f64,
    best_len: usize,
}

impl<'a> BetaTracker<'a> {
    fn new(
        workload: &'a Workload,
        target: &'a TokenDistribution,
        config: &'a CompressionConfig,
    ) -> Result<Self> {
        let mut t = BetaTracker {
            workload,
            target,
            config,
            best_score: f64::NEG_INFINITY,
            best_len: 0,
        };
        let zero = vec![0u64; workload.table().len()];
        let score = t.score_of(&zero)?;
        t.best_score = score;
        Ok(t)
    }

    fn score_of(&self, counts: &[u64]) -> Result<f64> {
        let (_, alpha_min, alpha_avg) = coverage_from_counts(self.workload, counts);
        let (rho_1, rho_inf) = representativity_from_counts(self.workload, counts, self.target)?;
        let alpha = match self.config.alpha_kind {
            crate::metrics::AlphaKind::Min => alpha_min,
            crate::metrics::AlphaKind::Avg => alpha_avg,
        };
        let rho = match self.config.rho_kind {
            crate::metrics::RhoKind::L1 => rho_1,
            crate::metrics::RhoKind::LInf => rho_inf,
        };
        Ok(beta_score(alpha, rho, self.config.beta))
    }

    fn record(&mut self, counts: &[u64], len: usize) -> Result<()> {
        let score = self.score_of(counts)?;
        if score > self.best_score {
            self.best_score = score;
            self.best_len = len;
        }
        Ok(())
    }

    fn best_len(&self) -> usize {
        self.best_len
    }
}
