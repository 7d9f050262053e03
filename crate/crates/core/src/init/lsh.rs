//! Hash-partition initial graph.
//!
//! Points are hashed to `b`-bit sign codes by random hyperplanes through the
//! data mean, each code is projected to one dimension by a random vector,
//! and the points sorted by that score are cut into equal-size consecutive
//! groups that are solved by brute force.

use rand_distr::{Distribution, StandardNormal};

use crate::counters::Counters;
use crate::data::{dot, Dataset};
use crate::error::{arg_err, Result};
use crate::graph::{check_k, KnnGraph};
use crate::pool::{Neighbor, NeighborPool};
use crate::rng::{rng_for, streams};

use super::merge_groups;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LshParams {
    /// Code length in bits.
    pub b: usize,
    /// Target group size.
    pub t_hash: usize,
    /// Number of independent divisions.
    pub l_hash: usize,
    pub seed: u64,
}

impl Default for LshParams {
    fn default() -> Self {
        Self {
            b: 16,
            t_hash: 200,
            l_hash: 10,
            seed: 0,
        }
    }
}

impl LshParams {
    pub fn validate(&self, k: usize) -> Result<()> {
        if self.b == 0 {
            return arg_err("code length b must be at least 1");
        }
        if self.t_hash < k + 1 {
            return arg_err(format!("t_hash = {} must be at least k + 1 = {}", self.t_hash, k + 1));
        }
        if self.l_hash == 0 {
            return arg_err("l_hash must be at least 1");
        }
        Ok(())
    }
}

fn mean(data: &Dataset) -> Vec<f32> {
    let mut acc = vec![0.0f64; data.dim()];
    for u in 0..data.len() as u32 {
        for (a, &x) in acc.iter_mut().zip(data.point(u)) {
            *a += x as f64;
        }
    }
    acc.into_iter().map(|a| (a / data.len() as f64) as f32).collect()
}

/// Groups of one hash division, in ascending score order.
pub fn lsh_partition_groups(data: &Dataset, params: &LshParams, division: usize) -> Vec<Vec<u32>> {
    let mu = mean(data);
    groups_with_mean(data, params, division, &mu)
}

fn groups_with_mean(data: &Dataset, params: &LshParams, division: usize, mu: &[f32]) -> Vec<Vec<u32>> {
    let n = data.len();
    let d = data.dim();
    let mut rng = rng_for(params.seed, streams::LSH, division as u64);
    let planes: Vec<Vec<f32>> = (0..params.b)
        .map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let offsets: Vec<f32> = planes.iter().map(|h| dot(h, mu)).collect();
    let weights: Vec<f32> = (0..params.b).map(|_| StandardNormal.sample(&mut rng)).collect();

    let mut keyed: Vec<(f32, u32)> = (0..n as u32)
        .map(|u| {
            let x = data.point(u);
            let score: f32 = planes
                .iter()
                .zip(&offsets)
                .zip(&weights)
                .map(|((h, off), w)| if dot(h, x) >= *off { *w } else { -*w })
                .sum();
            (score, u)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let groups = n.div_ceil(params.t_hash);
    let (base, extra) = (n / groups, n % groups);
    let mut out = Vec::with_capacity(groups);
    let mut at = 0;
    for g in 0..groups {
        let size = base + usize::from(g < extra);
        out.push(keyed[at..at + size].iter().map(|p| p.1).collect());
        at += size;
    }
    out
}

pub fn lsh_partition_knng(
    data: &Dataset,
    k: usize,
    params: LshParams,
    counters: &mut Counters,
) -> Result<KnnGraph> {
    check_k(data.len(), k)?;
    params.validate(k)?;
    let n = data.len();
    let mu = mean(data);
    let mut pools: Vec<NeighborPool> = (0..n as u32).map(|u| NeighborPool::new(u, k)).collect();
    for div in 0..params.l_hash {
        let groups = groups_with_mean(data, &params, div, &mu);
        merge_groups(data, &groups, k, &mut pools, counters);
        let bytes = n * (8 + k * std::mem::size_of::<Neighbor>());
        counters.note_aux_bytes(bytes as u64);
    }
    KnnGraph::from_pools(data, k, pools, params.seed, counters)
}
