//! Partition-based initial-graph builders and random initialization.

mod division;
mod lsh;
mod rpforest;

pub use division::{multiple_division, principal_direction, DivisionParams};
pub use lsh::{lsh_partition_groups, lsh_partition_knng, LshParams};
pub use rpforest::{build_rp_tree, rp_forest_knng, RpForestParams, RpTree};

use rand::seq::index;
use rayon::prelude::*;

use crate::counters::Counters;
use crate::data::Dataset;
use crate::error::Result;
use crate::graph::{check_k, KnnGraph};
use crate::pool::{Neighbor, NeighborPool};
use crate::rng::{rng_for, streams};

/// Pools of `capacity` random distinct neighbors per node (fewer when
/// `n - 1 < capacity`), with distances evaluated.
pub fn random_pools(
    data: &Dataset,
    capacity: usize,
    seed: u64,
    counters: &mut Counters,
) -> Vec<NeighborPool> {
    let n = data.len();
    let take = capacity.min(n - 1);
    let (pools, dist): (Vec<NeighborPool>, Vec<u64>) = (0..n as u32)
        .into_par_iter()
        .map(|u| {
            let mut rng = rng_for(seed, streams::INIT_RANDOM, u as u64);
            let mut local = Counters::new();
            let mut entries = Vec::with_capacity(take);
            for idx in index::sample(&mut rng, n - 1, take).iter() {
                let v = if idx as u32 >= u { idx as u32 + 1 } else { idx as u32 };
                entries.push(Neighbor::new(v, data.distance(u, v, &mut local)));
            }
            (NeighborPool::from_entries(u, capacity, entries), local.total_dist)
        })
        .unzip();
    counters.add_dist(dist.iter().sum());
    pools
}

/// Random KNN graph: each row holds `k` uniformly drawn distinct ids.
pub fn random_knng(data: &Dataset, k: usize, seed: u64, counters: &mut Counters) -> Result<KnnGraph> {
    check_k(data.len(), k)?;
    let pools = random_pools(data, k, seed, counters);
    KnnGraph::from_pools(data, k, pools, seed, counters)
}

/// Brute-force KNN inside one group: every pair once, both directions.
/// Returns `(id, up to k nearest group members)` for each member.
pub(crate) fn brute_force_group(
    data: &Dataset,
    group: &[u32],
    k: usize,
    counters: &mut Counters,
) -> Vec<NeighborPool> {
    let mut pools: Vec<NeighborPool> = group.iter().map(|&u| NeighborPool::new(u, k)).collect();
    for i in 0..group.len() {
        for j in (i + 1)..group.len() {
            let d = data.distance(group[i], group[j], counters);
            pools[i].update(group[j], d);
            pools[j].update(group[i], d);
        }
    }
    pools
}

/// Brute-forces every group in parallel and merges the results into
/// `pools`. The groups of one division must be disjoint.
pub(crate) fn merge_groups(
    data: &Dataset,
    groups: &[Vec<u32>],
    k: usize,
    pools: &mut [NeighborPool],
    counters: &mut Counters,
) {
    let results: Vec<(Vec<NeighborPool>, u64)> = groups
        .par_iter()
        .map(|g| {
            let mut local = Counters::new();
            let p = brute_force_group(data, g, k, &mut local);
            (p, local.total_dist)
        })
        .collect();
    for (group_pools, dist) in results {
        counters.add_dist(dist);
        for p in group_pools {
            let target = &mut pools[p.owner() as usize];
            for e in p.entries() {
                target.update(e.id, e.dist);
            }
        }
    }
}

/// Checks that `groups` partition `0..n`: every id exactly once.
pub fn is_partition(groups: &[Vec<u32>], n: usize) -> bool {
    let mut seen = vec![false; n];
    for g in groups {
        for &id in g {
            if id as usize >= n || seen[id as usize] {
                return false;
            }
            seen[id as usize] = true;
        }
    }
    seen.into_iter().all(|s| s)
}
