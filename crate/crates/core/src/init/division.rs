//! Multiple random divide-and-conquer.
//!
//! Each division recursively splits the data at the median projection onto
//! an approximate principal direction of a random sample, until groups hold
//! at most `t_div` points. Groups are solved by brute force and the `l_div`
//! divisions are merged per node. Divisions are generated one at a time.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::counters::Counters;
use crate::data::{dot, Dataset};
use crate::error::{arg_err, Result};
use crate::graph::{check_k, KnnGraph};
use crate::pool::{Neighbor, NeighborPool};
use crate::rng::{rng_for, streams};

use super::merge_groups;

const POWER_ITERATIONS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DivisionParams {
    /// Largest group solved by brute force.
    pub t_div: usize,
    /// Number of independent divisions.
    pub l_div: usize,
    /// Points sampled to estimate each split direction.
    pub sample_size: usize,
    pub seed: u64,
}

impl Default for DivisionParams {
    fn default() -> Self {
        Self {
            t_div: 500,
            l_div: 10,
            sample_size: 100,
            seed: 0,
        }
    }
}

impl DivisionParams {
    pub fn validate(&self, k: usize) -> Result<()> {
        if self.t_div < k + 1 {
            return arg_err(format!("t_div = {} must be at least k + 1 = {}", self.t_div, k + 1));
        }
        if self.l_div == 0 {
            return arg_err("l_div must be at least 1");
        }
        if self.sample_size < 2 {
            return arg_err("sample_size must be at least 2");
        }
        Ok(())
    }
}

fn random_unit(d: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Dominant eigenvector of the sample covariance, approximated by ten power
/// iterations on the mean-centered sample. Returns a random unit vector when
/// the sample has no spread.
pub fn principal_direction(sample: &[&[f32]], rng: &mut impl Rng) -> Result<Vec<f32>> {
    if sample.len() < 2 {
        return arg_err(format!("principal direction needs >= 2 samples, got {}", sample.len()));
    }
    let d = sample[0].len();
    if d == 0 || sample.iter().any(|s| s.len() != d) {
        return arg_err("samples must share a positive dimensionality");
    }
    let m = sample.len() as f64;
    let mut mean = vec![0.0f64; d];
    for s in sample {
        for (acc, &x) in mean.iter_mut().zip(*s) {
            *acc += x as f64;
        }
    }
    mean.iter_mut().for_each(|x| *x /= m);
    let centered: Vec<Vec<f64>> = sample
        .iter()
        .map(|s| s.iter().zip(&mean).map(|(&x, mu)| x as f64 - mu).collect())
        .collect();

    let mut v = random_unit(d, rng);
    for _ in 0..POWER_ITERATIONS {
        let mut w = vec![0.0f64; d];
        for x in &centered {
            let p: f64 = x.iter().zip(&v).map(|(a, b)| a * b).sum();
            for (wi, xi) in w.iter_mut().zip(x) {
                *wi += p * xi;
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= 1e-12 {
            // degenerate covariance, or a start orthogonal to all spread
            if centered.iter().all(|x| x.iter().all(|c| c.abs() <= 1e-12)) {
                return Ok(random_unit(d, rng).into_iter().map(|x| x as f32).collect());
            }
            v = random_unit(d, rng);
            continue;
        }
        v = w.into_iter().map(|x| x / norm).collect();
    }
    Ok(v.into_iter().map(|x| x as f32).collect())
}

/// Leaves of one division: groups of at most `t_div` ids covering `0..n`.
pub fn division_leaves(data: &Dataset, params: &DivisionParams, index: usize) -> Result<Vec<Vec<u32>>> {
    let mut rng = rng_for(params.seed, streams::DIVISION, index as u64);
    let mut leaves = Vec::new();
    let mut stack: Vec<Vec<u32>> = vec![(0..data.len() as u32).collect()];
    while let Some(ids) = stack.pop() {
        if ids.len() <= params.t_div {
            leaves.push(ids);
            continue;
        }
        let take = params.sample_size.min(ids.len());
        let sample: Vec<&[f32]> = index::sample(&mut rng, ids.len(), take)
            .iter()
            .map(|i| data.point(ids[i]))
            .collect();
        let dir = principal_direction(&sample, &mut rng)?;
        let mut keyed: Vec<(f32, u32)> = ids.iter().map(|&i| (dot(data.point(i), &dir), i)).collect();
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let half = keyed.len() / 2;
        let right: Vec<u32> = keyed[half..].iter().map(|p| p.1).collect();
        let left: Vec<u32> = keyed[..half].iter().map(|p| p.1).collect();
        stack.push(right);
        stack.push(left);
    }
    Ok(leaves)
}

/// Builds an initial KNN graph from `l_div` random divisions.
pub fn multiple_division(
    data: &Dataset,
    k: usize,
    params: DivisionParams,
    counters: &mut Counters,
) -> Result<KnnGraph> {
    check_k(data.len(), k)?;
    params.validate(k)?;
    let n = data.len();
    let mut pools: Vec<NeighborPool> = (0..n as u32).map(|u| NeighborPool::new(u, k)).collect();
    for div in 0..params.l_div {
        let leaves = division_leaves(data, &params, div)?;
        merge_groups(data, &leaves, k, &mut pools, counters);
        let leaf_bytes = n * (4 + k * std::mem::size_of::<Neighbor>());
        counters.note_aux_bytes(leaf_bytes as u64);
    }
    KnnGraph::from_pools(data, k, pools, params.seed, counters)
}
