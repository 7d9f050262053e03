//! Navigable small-world graph construction with KNN tracing.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::counters::Counters;
use crate::data::Dataset;
use crate::error::{arg_err, Result};
use crate::graph::{check_k, KnnGraph};
use crate::pool::NeighborPool;
use crate::rng::{rng_for, streams};

use super::layered::LayeredGraph;
use super::search::Searcher;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SwParams {
    /// Links created per insertion.
    pub m: usize,
    pub ef_construction: usize,
    pub seed: u64,
}

/// Single-layer undirected graph with unbounded degree.
#[derive(Clone, Debug, PartialEq)]
pub struct SwGraph {
    pub graph: LayeredGraph,
    /// Largest degree reached during construction.
    pub max_degree: usize,
}

/// Inserts every point in a seeded random order. Each insertion searches the
/// current graph from a random existing node, links the new point to the
/// best `m` results, and offers every distance it computed to the KNN pools
/// of both endpoints. Those pools become the returned KNN graph.
pub fn build_sw_knng(
    data: &Dataset,
    k: usize,
    params: SwParams,
    counters: &mut Counters,
) -> Result<(SwGraph, KnnGraph)> {
    let n = data.len();
    check_k(n, k)?;
    if params.m == 0 || params.ef_construction == 0 {
        return arg_err("SW construction needs m >= 1 and ef_construction >= 1");
    }
    let mut rng = rng_for(params.seed, streams::SW, 0);
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.shuffle(&mut rng);

    let mut graph = LayeredGraph::new(n);
    let mut pools: Vec<NeighborPool> = (0..n as u32).map(|u| NeighborPool::new(u, k)).collect();
    let mut searcher = Searcher::new(n);
    graph.set_entry(order[0]);

    for i in 1..n {
        let u = order[i];
        let ep = order[rng.random_range(0..i)];
        let mut trace = |v: u32, d: f32| {
            pools[u as usize].update(v, d);
            pools[v as usize].update(u, d);
        };
        let (found, expands) = searcher.search(
            &graph.layer(0),
            data,
            data.point(u),
            Some(u),
            params.m,
            params.ef_construction,
            &[ep],
            counters,
            &mut trace,
        )?;
        counters.record_query(expands);
        for e in found {
            graph.link(0, u, e.id, e.dist);
        }
    }
    counters.note_aux_bytes(graph.approx_bytes());
    let max_degree = graph.max_degree(0);
    let knng = KnnGraph::from_pools(data, k, pools, params.seed, counters)?;
    Ok((SwGraph { graph, max_degree }, knng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::exact_knng;
    use crate::synth;

    #[test]
    fn complete_information_when_n_is_k_plus_one() {
        let data = synth::gaussian(11, 4, 3).unwrap();
        let exact = exact_knng(&data, 10, &mut Counters::new()).unwrap();
        let mut c = Counters::new();
        let (sw, g) = build_sw_knng(
            &data,
            10,
            SwParams { m: 10, ef_construction: 1, seed: 1 },
            &mut c,
        )
        .unwrap();
        assert_eq!(&g, exact.graph());
        assert!(sw.graph.is_symmetric());
    }

    #[test]
    fn symmetric_and_traced_rows_sound() {
        let data = synth::gaussian(400, 8, 2).unwrap();
        let mut c = Counters::new();
        let (sw, g) = build_sw_knng(
            &data,
            10,
            SwParams { m: 10, ef_construction: 20, seed: 4 },
            &mut c,
        )
        .unwrap();
        assert!(sw.graph.is_symmetric());
        assert_eq!(sw.max_degree, sw.graph.max_degree(0));
        g.validate(&data).unwrap();
        assert_eq!(c.queries, 399);
        assert!(c.expand_hist[0] == 0);
    }
}
