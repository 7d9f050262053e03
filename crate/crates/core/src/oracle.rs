//! Brute-force exact KNN graphs, the reference for every accuracy metric.

use std::sync::Mutex;

use rand::seq::index;
use rayon::prelude::*;

use crate::counters::Counters;
use crate::data::Dataset;
use crate::error::{arg_err, Result};
use crate::graph::{check_k, KnnGraph};
use crate::pool::{Neighbor, NeighborPool};
use crate::rng::{rng_for, streams};

/// Exact KNN graph together with every node's exact reverse-neighbor set.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactKnng {
    graph: KnnGraph,
    reverse: Vec<Vec<u32>>,
}

impl ExactKnng {
    /// Wraps a graph already known to be exact (e.g. loaded from disk).
    pub fn from_graph(graph: KnnGraph) -> Self {
        let mut reverse = vec![Vec::new(); graph.len()];
        for (u, row) in graph.rows().iter().enumerate() {
            for e in row {
                reverse[e.id as usize].push(u as u32);
            }
        }
        Self { graph, reverse }
    }

    pub fn graph(&self) -> &KnnGraph {
        &self.graph
    }

    pub fn k(&self) -> usize {
        self.graph.k()
    }

    pub fn len(&self) -> usize {
        self.graph.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graph.is_empty()
    }

    /// `R*_k(v)`, ascending by id.
    pub fn reverse(&self, v: u32) -> &[u32] {
        &self.reverse[v as usize]
    }

    pub fn into_graph(self) -> KnnGraph {
        self.graph
    }
}

const TILE: usize = 256;

/// Exact KNN graph by blocked pairwise scanning.
///
/// Each unordered pair is evaluated once and offered to both endpoints, so
/// `counters.total_dist` grows by exactly `n (n - 1) / 2`.
pub fn exact_knng(data: &Dataset, k: usize, counters: &mut Counters) -> Result<ExactKnng> {
    let n = data.len();
    check_k(n, k)?;
    let pools: Vec<Mutex<NeighborPool>> = (0..n as u32)
        .map(|u| Mutex::new(NeighborPool::new(u, k)))
        .collect();
    let blocks = n.div_ceil(TILE);
    let tiles: Vec<(usize, usize)> = (0..blocks)
        .flat_map(|bi| (bi..blocks).map(move |bj| (bi, bj)))
        .collect();

    let total = tiles
        .par_iter()
        .map(|&(bi, bj)| {
            let (r0, r1) = (bi * TILE, ((bi + 1) * TILE).min(n));
            let (c0, c1) = (bj * TILE, ((bj + 1) * TILE).min(n));
            let mut local = Counters::new();
            let mut rows: Vec<NeighborPool> =
                (r0..r1).map(|u| NeighborPool::new(u as u32, k)).collect();
            let mut cols: Vec<NeighborPool> =
                (c0..c1).map(|u| NeighborPool::new(u as u32, k)).collect();
            for i in r0..r1 {
                let start = if bi == bj { i + 1 } else { c0 };
                for j in start..c1 {
                    let d = data.distance(i as u32, j as u32, &mut local);
                    rows[i - r0].update(j as u32, d);
                    if bi == bj {
                        rows[j - r0].update(i as u32, d);
                    } else {
                        cols[j - c0].update(i as u32, d);
                    }
                }
            }
            let merge = |local_pools: Vec<NeighborPool>| {
                for p in local_pools {
                    let mut g = pools[p.owner() as usize].lock().unwrap();
                    for e in p.entries() {
                        g.update(e.id, e.dist);
                    }
                }
            };
            merge(rows);
            if bi != bj {
                merge(cols);
            }
            local.total_dist
        })
        .sum::<u64>();
    counters.add_dist(total);
    counters.note_aux_bytes((n * k * std::mem::size_of::<Neighbor>()) as u64);

    let rows = pools
        .into_iter()
        .map(|m| m.into_inner().unwrap().into_entries())
        .collect();
    Ok(ExactKnng::from_graph(KnnGraph::from_rows(k, rows)?))
}

/// Exact neighbors for a sample of query nodes only; used when `n` is too
/// large for the full oracle.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledOracle {
    k: usize,
    queries: Vec<u32>,
    rows: Vec<Vec<Neighbor>>,
}

impl SampledOracle {
    pub fn build(data: &Dataset, k: usize, samples: usize, seed: u64) -> Result<Self> {
        let n = data.len();
        check_k(n, k)?;
        if samples == 0 {
            return arg_err("sampled oracle needs at least one query");
        }
        let mut rng = rng_for(seed, streams::SAMPLED_QUERIES, 0);
        let mut queries: Vec<u32> = index::sample(&mut rng, n, samples.min(n))
            .into_iter()
            .map(|i| i as u32)
            .collect();
        queries.sort_unstable();
        let rows = queries
            .par_iter()
            .map(|&q| {
                let mut scratch = Counters::new();
                let mut pool = NeighborPool::new(q, k);
                for v in 0..n as u32 {
                    if v != q {
                        pool.update(v, data.distance(q, v, &mut scratch));
                    }
                }
                pool.into_entries()
            })
            .collect();
        Ok(Self { k, queries, rows })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn queries(&self) -> &[u32] {
        &self.queries
    }

    pub fn row(&self, i: usize) -> &[Neighbor] {
        &self.rows[i]
    }
}
