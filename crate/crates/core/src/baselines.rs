//! Comparison algorithms: uniform random sampling, k-medoids, and
//! agglomerative average-linkage clustering, all over a mixed
//! Jaccard/Euclidean query distance.
//!
//! The distance treats categorical features as token sets (mean Jaccard
//! distance) and numeric features as coordinates `bucket / H` (Euclidean,
//! scaled by the square root of the numeric feature count), blended with
//! configurable weights. Clustering summaries consist of medoids: the
//! cluster member minimizing summed distance to the rest.
//!
//! All baselines emit the same [`CompressionResult`] as the greedy
//! algorithm so comparisons line up, with an empty selection trace.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_pcg::Pcg64;

use crate::config::{entry_cost, CompressionConfig};
use crate::error::{Error, Result};
use crate::greedy::CompressionResult;
use crate::metrics::{target_distribution, MetricsReport};
use crate::model::{FeatureKind, Summary, TokenId, Workload};
use crate::objective::objective;

/// Blend weights for the mixed distance. `numeric_scale_h` overrides the
/// bucket count used to map buckets into [0, 1]; by default the spec's H.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceConfig {
    pub categorical_weight: f64,
    pub numeric_weight: f64,
    pub numeric_scale_h: Option<u32>,
    /// Materialize the full pairwise matrix up front. Hierarchical
    /// clustering always does, regardless of this flag.
    pub precompute_matrix: bool,
}

impl Default for DistanceConfig {
    fn default() -> Self {
        DistanceConfig {
            categorical_weight: 0.5,
            numeric_weight: 0.5,
            numeric_scale_h: None,
            precompute_matrix: false,
        }
    }
}

impl DistanceConfig {
    fn validate(&self) -> Result<()> {
        if self.categorical_weight < 0.0
            || self.numeric_weight < 0.0
            || (self.categorical_weight + self.numeric_weight - 1.0).abs() > 1e-9
        {
            return Err(Error::SpecMismatch(format!(
                "distance weights {} + {} must be non-negative and sum to 1",
                self.categorical_weight, self.numeric_weight
            )));
        }
        Ok(())
    }
}

/// Compact per-query view for distance evaluation: sorted token-id sets
/// per categorical feature plus one [0, 1] coordinate per numeric
/// feature (buckets beyond H clamp to 1).
struct DistanceView {
    cat: Vec<Vec<TokenId>>,
    num: Vec<f64>,
}

struct DistanceSpace {
    views: Vec<DistanceView>,
    cat_weight: f64,
    num_weight: f64,
    n_cat: usize,
    n_num: usize,
}

impl DistanceSpace {
    fn build(workload: &Workload, cfg: &DistanceConfig) -> Result<DistanceSpace> {
        cfg.validate()?;
        let spec = workload.spec();
        let h = cfg.numeric_scale_h.unwrap_or(spec.h()) as f64;
        let cat_features: Vec<usize> = (0..spec.len())
            .filter(|&f| spec.features()[f].kind == FeatureKind::Categorical)
            .collect();
        let num_features: Vec<usize> = (0..spec.len())
            .filter(|&f| spec.features()[f].kind == FeatureKind::Numeric)
            .collect();
        let feature_slot: Vec<Option<(bool, usize)>> = {
            let mut slots = vec![None; spec.len()];
            for (i, &f) in cat_features.iter().enumerate() {
                slots[f] = Some((true, i));
            }
            for (i, &f) in num_features.iter().enumerate() {
                slots[f] = Some((false, i));
            }
            slots
        };
        let mut views = Vec::with_capacity(workload.len());
        for q in 0..workload.len() {
            let mut cat = vec![Vec::new(); cat_features.len()];
            let mut num = vec![0.0; num_features.len()];
            for &(t, _) in workload.entry_tokens(q) {
                let f = workload.table().feature_of(t);
                match feature_slot[f] {
                    Some((true, slot)) => cat[slot].push(t),
                    Some((false, slot)) => {
                        if let crate::model::TokenValue::Bucket(b) = workload.table().value_of(t) {
                            num[slot] = (*b as f64 / h).clamp(0.0, 1.0);
                        }
                    }
                    None => {}
                }
            }
            for set in &mut cat {
                set.sort();
                set.dedup();
            }
            views.push(DistanceView { cat, num });
        }
        Ok(DistanceSpace {
            views,
            cat_weight: cfg.categorical_weight,
            num_weight: cfg.numeric_weight,
            n_cat: cat_features.len(),
            n_num: num_features.len(),
        })
    }

    fn distance(&self, a: usize, b: usize) -> f64 {
        let (va, vb) = (&self.views[a], &self.views[b]);
        let cat_part = if self.n_cat == 0 {
            0.0
        } else {
            let mut sum = 0.0;
            for f in 0..self.n_cat {
                sum += jaccard_distance(&va.cat[f], &vb.cat[f]);
            }
            sum / self.n_cat as f64
        };
        let num_part = if self.n_num == 0 {
            0.0
        } else {
            let mut sq = 0.0;
            for f in 0..self.n_num {
                let d = va.num[f] - vb.num[f];
                sq += d * d;
            }
            sq.sqrt() / (self.n_num as f64).sqrt()
        };
        self.cat_weight * cat_part + self.num_weight * num_part
    }
}

/// Jaccard distance between two sorted, deduplicated token sets; zero
/// when both are empty.
fn jaccard_distance(a: &[TokenId], b: &[TokenId]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let mut inter = 0usize;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    1.0 - inter as f64 / union as f64
}

/// Mixed Jaccard/Euclidean distance between two queries of one workload.
pub fn query_distance(
    workload: &Workload,
    a: usize,
    b: usize,
    cfg: &DistanceConfig,
) -> Result<f64> {
    if a >= workload.len() || b >= workload.len() {
        return Err(Error::DistanceSpecMismatch);
    }
    let space = DistanceSpace::build(workload, cfg)?;
    Ok(space.distance(a, b))
}

fn finish(
    workload: &Workload,
    indices: Vec<usize>,
    config: &CompressionConfig,
) -> Result<CompressionResult> {
    let target = target_distribution(workload, &config.target)?;
    let summary = Summary::from_indices(workload, indices)?;
    let metrics = MetricsReport::compute(workload, &summary, &target, config)?;
    let objective_value = objective(workload, &summary, &target, config.gamma)?;
    let summary_ids = workload.summary_ids(&summary);
    Ok(CompressionResult {
        summary,
        summary_ids,
        objective_value,
        metrics,
        trace: Vec::new(),
        warnings: Vec::new(),
    })
}

/// Uniform sampling without replacement: walk a seeded shuffle and keep
/// whatever still fits the budget. Deterministic for a fixed seed
/// (PCG-64 keyed directly by `config.seed`).
pub fn random_sample(workload: &Workload, config: &CompressionConfig) -> Result<CompressionResult> {
    config.validate()?;
    crate::config::check_positive_costs(workload, &config.cost_mode)?;
    let mut order: Vec<usize> = (0..workload.len()).collect();
    let mut rng = Pcg64::seed_from_u64(config.seed);
    order.shuffle(&mut rng);
    let mut spent = 0.0;
    let mut picked = Vec::new();
    for idx in order {
        let c = entry_cost(workload, idx, &config.cost_mode)?;
        if spent + c <= config.budget {
            spent += c;
            picked.push(idx);
        }
    }
    finish(workload, picked, config)
}

/// Tie rank by (query id, entry index); all clustering tie-breaks use it.
fn id_ranks(workload: &Workload) -> Vec<u32> {
    let mut order: Vec<usize> = (0..workload.len()).collect();
    order.sort_by(|&a, &b| {
        workload
            .record(a)
            .id
            .cmp(&workload.record(b).id)
            .then(a.cmp(&b))
    });
    let mut rank = vec![0u32; workload.len()];
    for (r, &idx) in order.iter().enumerate() {
        rank[idx] = r as u32;
    }
    rank
}

/// k-medoids with farthest-first initialization.
///
/// The first center is the query with the largest total distance to all
/// others (smallest id on ties); each next center maximizes the minimum
/// distance to the chosen ones. Assignment and medoid-update rounds then
/// alternate until assignments stabilize or `max_iters` passes.
pub fn kmedoids(
    workload: &Workload,
    k: usize,
    dist_cfg: &DistanceConfig,
    max_iters: usize,
    config: &CompressionConfig,
) -> Result<CompressionResult> {
    let (indices, _) = kmedoids_with_history(workload, k, dist_cfg, max_iters)?;
    finish(workload, indices, config)
}

/// Exposes the per-iteration clustering objective (summed distance to
/// assigned medoids) for the refinement-monotonicity tests.
pub(crate) fn kmedoids_with_history(
    workload: &Workload,
    k: usize,
    dist_cfg: &DistanceConfig,
    max_iters: usize,
) -> Result<(Vec<usize>, Vec<f64>)> {
    let n = workload.len();
    if k == 0 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    let space = DistanceSpace::build(workload, dist_cfg)?;
    let matrix = if dist_cfg.precompute_matrix {
        Some(CondensedMatrix::build(&space, n))
    } else {
        None
    };
    let dist = |a: usize, b: usize| match &matrix {
        Some(m) => m.get(a, b),
        None => space.distance(a, b),
    };
    let rank = id_ranks(workload);

    // Farthest-first seeding.
    let mut centers: Vec<usize> = Vec::with_capacity(k);
    {
        let mut best: Option<(f64, usize)> = None;
        for i in 0..n {
            let total: f64 = (0..n).map(|j| dist(i, j)).sum();
            let better = match best {
                None => true,
                Some((t, b)) => total > t || (total == t && rank[i] < rank[b]),
            };
            if better {
                best = Some((total, i));
            }
        }
        centers.push(best.expect("n >= 1").1);
    }
    let mut min_dist: Vec<f64> = (0..n).map(|i| dist(i, centers[0])).collect();
    while centers.len() < k {
        let mut best: Option<(f64, usize)> = None;
        for i in 0..n {
            if centers.contains(&i) {
                continue;
            }
            let better = match best {
                None => true,
                Some((d, b)) => min_dist[i] > d || (min_dist[i] == d && rank[i] < rank[b]),
            };
            if better {
                best = Some((min_dist[i], i));
            }
        }
        let next = best.expect("k <= n").1;
        centers.push(next);
        for i in 0..n {
            min_dist[i] = min_dist[i].min(dist(i, next));
        }
    }

    // Alternate assignment and medoid update.
    let mut assignment = vec![0usize; n];
    let mut history = Vec::new();
    for _ in 0..max_iters.max(1) {
        let mut changed = false;
        let mut objective = 0.0;
        for i in 0..n {
            let mut best = assignment[i].min(centers.len() - 1);
            let mut best_d = dist(i, centers[best]);
            for (c, &center) in centers.iter().enumerate() {
                let d = dist(i, center);
                if d < best_d || (d == best_d && rank[center] < rank[centers[best]]) {
                    best = c;
                    best_d = d;
                }
            }
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
            objective += best_d;
        }
        history.push(objective);
        if !changed && history.len() > 1 {
            break;
        }
        let mut moved = false;
        for c in 0..centers.len() {
            let members: Vec<usize> = (0..n).filter(|&i| assignment[i] == c).collect();
            if members.is_empty() {
                continue;
            }
            let mut best = centers[c];
            let mut best_sum = members.iter().map(|&j| dist(best, j)).sum::<f64>();
            for &m in &members {
                let sum: f64 = members.iter().map(|&j| dist(m, j)).sum();
                if sum < best_sum || (sum == best_sum && rank[m] < rank[best]) {
                    best = m;
                    best_sum = sum;
                }
            }
            if best != centers[c] {
                centers[c] = best;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    Ok((centers, history))
}

/// Condensed upper-triangle pairwise matrix.
struct CondensedMatrix {
    n: usize,
    data: Vec<f64>,
}

impl CondensedMatrix {
    fn build(space: &DistanceSpace, n: usize) -> CondensedMatrix {
        let mut data = vec![0.0; n * (n - 1) / 2];
        let mut idx = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                data[idx] = space.distance(i, j);
                idx += 1;
            }
        }
        CondensedMatrix { n, data }
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j);
        i * self.n - i * (i + 1) / 2 + (j - i - 1)
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            Ordering::Equal => 0.0,
            Ordering::Less => self.data[self.offset(i, j)],
            Ordering::Greater => self.data[self.offset(j, i)],
        }
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        if i < j {
            let o = self.offset(i, j);
            self.data[o] = v;
        } else if j < i {
            let o = self.offset(j, i);
            self.data[o] = v;
        }
    }
}

/// Agglomerative average-linkage clustering cut at `k` clusters; the
/// summary holds each cluster's medoid.
///
/// Merges the pair with the smallest mean inter-cluster distance; exact
/// ties resolve toward the lexicographically smallest pair of cluster
/// representative ids. Cluster-to-cluster distances update via the
/// size-weighted average rule, which keeps them exact for average
/// linkage.
pub fn hierarchical(
    workload: &Workload,
    k: usize,
    dist_cfg: &DistanceConfig,
    config: &CompressionConfig,
) -> Result<CompressionResult> {
    let n = workload.len();
    if k == 0 || k > n {
        return Err(Error::InvalidK { k, n });
    }
    let space = DistanceSpace::build(workload, dist_cfg)?;
    let mut matrix = CondensedMatrix::build(&space, n);
    let rank = id_ranks(workload);

    #[derive(Clone)]
    struct Cluster {
        members: Vec<usize>,
        /// Smallest id-rank among members; the tie-break identity.
        rep: u32,
    }
    let mut clusters: Vec<Option<Cluster>> = (0..n)
        .map(|i| {
            Some(Cluster {
                members: vec![i],
                rep: rank[i],
            })
        })
        .collect();
    let mut active = n;

    // Nearest neighbor per active cluster under (distance, pair-rep) order.
    let pair_key = |a: u32, b: u32| (a.min(b), a.max(b));
    let nn_of = |i: usize,
                 clusters: &[Option<Cluster>],
                 matrix: &CondensedMatrix|
     -> Option<(f64, usize)> {
        let ri = clusters[i].as_ref()?.rep;
        let mut best: Option<(f64, usize)> = None;
        for (j, c) in clusters.iter().enumerate() {
            if j == i {
                continue;
            }
            let Some(c) = c else { continue };
            let d = matrix.get(i, j);
            let better = match best {
                None => true,
                Some((bd, bj)) => {
                    let bkey = pair_key(ri, clusters[bj].as_ref().unwrap().rep);
                    d < bd || (d == bd && pair_key(ri, c.rep) < bkey)
                }
            };
            if better {
                best = Some((d, j));
            }
        }
        best
    };
    let mut nn: Vec<Option<(f64, usize)>> = (0..n).map(|i| nn_of(i, &clusters, &matrix)).collect();

    while active > k {
        // Global minimum over nearest-neighbor candidates.
        let mut pick: Option<(f64, (u32, u32), usize, usize)> = None;
        for i in 0..n {
            if clusters[i].is_none() {
                continue;
            }
            let Some((d, j)) = nn[i] else { continue };
            let key = pair_key(
                clusters[i].as_ref().unwrap().rep,
                clusters[j].as_ref().unwrap().rep,
            );
            let better = match &pick {
                None => true,
                Some((bd, bkey, _, _)) => d < *bd || (d == *bd && key < *bkey),
            };
            if better {
                pick = Some((d, key, i, j));
            }
        }
        let (_, _, i, j) = pick.expect("more clusters than k remain");
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };

        // Average-linkage update into the lower slot.
        let (sz_lo, sz_hi) = (
            clusters[lo].as_ref().unwrap().members.len() as f64,
            clusters[hi].as_ref().unwrap().members.len() as f64,
        );
        for x in 0..n {
            if x == lo || x == hi || clusters[x].is_none() {
                continue;
            }
            let d = (sz_lo * matrix.get(lo, x) + sz_hi * matrix.get(hi, x)) / (sz_lo + sz_hi);
            matrix.set(lo, x, d);
        }
        let moved = clusters[hi].take().unwrap();
        {
            let target = clusters[lo].as_mut().unwrap();
            target.members.extend(moved.members);
            target.rep = target.rep.min(moved.rep);
        }
        active -= 1;
        nn[hi] = None;

        // Refresh invalidated neighbor entries.
        nn[lo] = nn_of(lo, &clusters, &matrix);
        for x in 0..n {
            if x == lo || clusters[x].is_none() {
                continue;
            }
            let refresh = match nn[x] {
                None => true,
                // Stale target, or the merged cluster moved within tie
                // range of the stored neighbor.
                Some((d, t)) => t == lo || t == hi || matrix.get(x, lo) <= d,
            };
            if refresh {
                nn[x] = nn_of(x, &clusters, &matrix);
            }
        }
    }

    // Medoid per surviving cluster, emitted in entry order.
    let mut medoids = Vec::with_capacity(k);
    for c in clusters.iter().flatten() {
        let mut best = c.members[0];
        let mut best_sum = f64::INFINITY;
        for &m in &c.members {
            let sum: f64 = c
                .members
                .iter()
                .map(|&x| matrix_distance(&space, m, x))
                .sum();
            if sum < best_sum || (sum == best_sum && rank[m] < rank[best]) {
                best = m;
                best_sum = sum;
            }
        }
        medoids.push(best);
    }
    medoids.sort_unstable();
    finish(workload, medoids, config)
}

fn matrix_distance(space: &DistanceSpace, a: usize, b: usize) -> f64 {
    if a == b {
        0.0
    } else {
        space.distance(a, b)
    }
}
