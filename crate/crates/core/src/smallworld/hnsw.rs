//! HNSW construction with KNN tracing.
//!
//! Layer caps are `m` on upper layers and `2 m` on layer 0. When a node's
//! adjacency overflows, it is re-selected with the diversity rule and the
//! dropped edges are removed from both endpoints, so every layer stays
//! undirected.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::counters::Counters;
use crate::data::Dataset;
use crate::error::{arg_err, Result};
use crate::graph::{check_k, KnnGraph};
use crate::pool::{Neighbor, NeighborPool};
use crate::rng::{rng_for, streams};

use super::layered::{Edge, LayeredGraph};
use super::search::Searcher;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HnswParams {
    pub m: usize,
    pub ef_construction: usize,
    pub seed: u64,
}

impl Default for HnswParams {
    fn default() -> Self {
        Self {
            m: 20,
            ef_construction: 80,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HnswGraph {
    pub graph: LayeredGraph,
    pub m: usize,
    /// Level normalizer `1 / ln(m)`.
    pub level_mult: f64,
}

impl HnswGraph {
    pub fn degree_cap(&self, layer: usize) -> usize {
        degree_cap(self.m, layer)
    }

    /// No node exceeds its per-layer cap.
    pub fn within_caps(&self) -> bool {
        (0..self.graph.num_layers()).all(|l| self.graph.max_degree(l) <= self.degree_cap(l))
    }
}

fn degree_cap(m: usize, layer: usize) -> usize {
    if layer == 0 {
        2 * m
    } else {
        m
    }
}

/// Draws a node's top layer: `floor(-ln(U) * level_mult)` with `U` uniform on
/// `(0, 1]`.
pub fn hnsw_assign_layer(rng: &mut impl Rng, level_mult: f64) -> u32 {
    let u: f64 = 1.0 - rng.random::<f64>();
    level_for_uniform(u, level_mult)
}

pub(crate) fn level_for_uniform(u: f64, level_mult: f64) -> u32 {
    let l = (-u.ln() * level_mult).floor();
    if l <= 0.0 {
        0
    } else {
        l.min(u32::MAX as f64) as u32
    }
}

/// Diversity-based neighbor selection.
///
/// Scans `candidates` (ascending by distance to the query) and keeps `c` iff
/// `c` is strictly closer to the query than to every already-kept entry.
/// Stops after `m` kept. Distances between candidates are computed on demand
/// and passed to `trace`.
pub fn select_neighbors_diverse(
    data: &Dataset,
    candidates: &[Neighbor],
    m: usize,
    counters: &mut Counters,
    trace: &mut impl FnMut(u32, u32, f32),
) -> Vec<Neighbor> {
    let mut kept: Vec<Neighbor> = Vec::with_capacity(m);
    for c in candidates {
        if kept.len() >= m {
            break;
        }
        let mut diverse = true;
        for s in &kept {
            let d = data.distance(c.id, s.id, counters);
            trace(c.id, s.id, d);
            if d <= c.dist {
                diverse = false;
                break;
            }
        }
        if diverse {
            kept.push(*c);
        }
    }
    kept
}

fn trace_pair(pools: &mut [NeighborPool], a: u32, b: u32, d: f32) {
    pools[a as usize].update(b, d);
    pools[b as usize].update(a, d);
}

/// Builds an HNSW graph over `data` in a seeded random insertion order and
/// returns it with the KNN graph traced from every distance evaluation.
pub fn build_hnsw_knng(
    data: &Dataset,
    k: usize,
    params: HnswParams,
    counters: &mut Counters,
) -> Result<(HnswGraph, KnnGraph)> {
    let n = data.len();
    check_k(n, k)?;
    if params.m < 2 {
        return arg_err(format!("HNSW needs m >= 2, got {}", params.m));
    }
    if params.ef_construction == 0 {
        return arg_err("HNSW needs ef_construction >= 1");
    }
    let level_mult = 1.0 / (params.m as f64).ln();
    let mut rng = rng_for(params.seed, streams::HNSW, 0);
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.shuffle(&mut rng);

    let mut graph = LayeredGraph::new(n);
    let mut pools: Vec<NeighborPool> = (0..n as u32).map(|u| NeighborPool::new(u, k)).collect();
    let mut searcher = Searcher::new(n);
    let mut top = 0usize;

    for (i, &u) in order.iter().enumerate() {
        let level = hnsw_assign_layer(&mut rng, level_mult);
        graph.set_level(u, level);
        if i == 0 {
            graph.set_entry(u);
            top = level as usize;
            continue;
        }
        let query = data.point(u);
        let mut cur = graph.entry().expect("entry set after first insertion");
        let mut expands = 0u64;

        for layer in ((level as usize + 1)..=top).rev() {
            let mut trace = |v: u32, d: f32| trace_pair(&mut pools, u, v, d);
            let (best, e) = searcher.search(
                &graph.layer(layer),
                data,
                query,
                Some(u),
                1,
                1,
                &[cur],
                counters,
                &mut trace,
            )?;
            expands += e;
            cur = best[0].id;
        }

        for layer in (0..=(level as usize).min(top)).rev() {
            let mut trace = |v: u32, d: f32| trace_pair(&mut pools, u, v, d);
            let (found, e) = searcher.search(
                &graph.layer(layer),
                data,
                query,
                Some(u),
                params.ef_construction,
                params.ef_construction,
                &[cur],
                counters,
                &mut trace,
            )?;
            expands += e;
            let mut trace2 = |a: u32, b: u32, d: f32| trace_pair(&mut pools, a, b, d);
            let selected =
                select_neighbors_diverse(data, &found, params.m, counters, &mut trace2);
            let cap = degree_cap(params.m, layer);
            for s in &selected {
                graph.link(layer, u, s.id, s.dist);
                if graph.adjacency(layer, s.id).len() > cap {
                    prune(&mut graph, layer, s.id, cap, data, counters, &mut pools);
                }
            }
            cur = found[0].id;
        }
        counters.record_query(expands);

        if level as usize > top {
            top = level as usize;
            graph.set_entry(u);
        }
    }
    counters.note_aux_bytes(graph.approx_bytes());
    let hnsw = HnswGraph {
        graph,
        m: params.m,
        level_mult,
    };
    let knng = KnnGraph::from_pools(data, k, pools, params.seed, counters)?;
    Ok((hnsw, knng))
}

fn prune(
    graph: &mut LayeredGraph,
    layer: usize,
    node: u32,
    cap: usize,
    data: &Dataset,
    counters: &mut Counters,
    pools: &mut [NeighborPool],
) {
    counters.prune_count += 1;
    let mut cands: Vec<Neighbor> = graph
        .adjacency(layer, node)
        .iter()
        .map(|e| Neighbor::new(e.id, e.dist))
        .collect();
    cands.sort_by(Neighbor::key_cmp);
    let mut trace = |a: u32, b: u32, d: f32| trace_pair(pools, a, b, d);
    let kept = select_neighbors_diverse(data, &cands, cap, counters, &mut trace);
    let kept_edges: Vec<Edge> = kept.iter().map(|e| Edge { id: e.id, dist: e.dist }).collect();
    for c in &cands {
        if !kept_edges.iter().any(|e| e.id == c.id) {
            graph.adjacency_mut(layer, c.id).retain(|e| e.id != node);
        }
    }
    *graph.adjacency_mut(layer, node) = kept_edges;
}
