use rayon::prelude::*;

use crate::counters::Counters;
use crate::data::Dataset;
use crate::error::{arg_err, Result};
use crate::graph::{KnnGraph, ProximityGraph};
use crate::init::{multiple_division, DivisionParams};
use crate::pool::NeighborPool;
use crate::smallworld::{build_hnsw_knng, HnswParams, Searcher};

use super::Filters;

/// One search per node over the proximity graph `h`, starting from the
/// node's row in `g0` (distances reused). The node itself never enters its
/// own pool. The local filter has nothing to skip in a single pass; the
/// global filter is the search's visited set.
pub fn deep_search<G: ProximityGraph + Sync + ?Sized>(
    data: &Dataset,
    g0: &KnnGraph,
    h: &G,
    ef_search: usize,
    filters: Filters,
    counters: &mut Counters,
) -> Result<KnnGraph> {
    let n = data.len();
    let k = g0.k();
    if g0.len() != n || h.num_nodes() != n {
        return arg_err("initial graph, search graph and dataset sizes differ");
    }
    if ef_search == 0 {
        return Ok(g0.clone());
    }
    let h_edges: usize = (0..n as u32).map(|u| h.neighbors(u).count()).sum();
    counters.note_aux_bytes((h_edges * 4 + n * 4) as u64);

    let results: Vec<(Vec<crate::pool::Neighbor>, u64, u64)> = (0..n as u32)
        .into_par_iter()
        .map_init(
            || Searcher::new(n).with_dedup(filters.global),
            |searcher, u| {
                let mut local = Counters::new();
                let mut pool = NeighborPool::from_entries(u, k.max(ef_search), g0.row(u).to_vec());
                let expands = searcher.search_seeded(
                    h,
                    data,
                    data.point(u),
                    &mut pool,
                    ef_search,
                    &mut local,
                    &mut |_, _| {},
                );
                let mut row = pool.into_entries();
                row.truncate(k);
                (row, local.total_dist, expands)
            },
        )
        .collect();
    let mut rows = Vec::with_capacity(n);
    for (row, dist, expands) in results {
        counters.add_dist(dist);
        counters.expand_count += expands;
        counters.record_query(expands);
        rows.push(row);
    }
    KnnGraph::from_rows(k, rows)
}

/// Multiple division followed by a search over the initial graph itself.
pub fn deep_mdiv(
    data: &Dataset,
    k: usize,
    division: DivisionParams,
    ef_search: usize,
    filters: Filters,
    counters: &mut Counters,
) -> Result<KnnGraph> {
    let g0 = multiple_division(data, k, division, counters)?;
    deep_search(data, &g0, &g0, ef_search, filters, counters)
}

/// HNSW with traced initial graph, followed by a search over layer 0.
pub fn deep_hnsw(
    data: &Dataset,
    k: usize,
    hnsw: HnswParams,
    ef_search: usize,
    filters: Filters,
    counters: &mut Counters,
) -> Result<KnnGraph> {
    let (h, g0) = build_hnsw_knng(data, k, hnsw, counters)?;
    deep_search(data, &g0, &h.graph.layer(0), ef_search, filters, counters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::random_knng;
    use crate::metrics::recall;
    use crate::oracle::exact_knng;
    use crate::synth;

    #[test]
    fn zero_ef_returns_initial_graph() {
        let data = synth::gaussian(200, 4, 1).unwrap();
        let g0 = random_knng(&data, 5, 1, &mut Counters::new()).unwrap();
        let mut c = Counters::new();
        assert_eq!(deep_search(&data, &g0, &g0, 0, Filters::ON, &mut c).unwrap(), g0);
        assert_eq!(c.total_dist, 0);
    }

    #[test]
    fn complete_graph_gives_exact_rows() {
        let data = synth::gaussian(120, 5, 2).unwrap();
        let exact = exact_knng(&data, 6, &mut Counters::new()).unwrap();
        let g0 = random_knng(&data, 6, 2, &mut Counters::new()).unwrap();
        let complete: Vec<Vec<u32>> =
            (0..120u32).map(|u| (0..120).filter(|&v| v != u).collect()).collect();
        let g = deep_search(&data, &g0, &complete, 120, Filters::ON, &mut Counters::new()).unwrap();
        assert_eq!(&g, exact.graph());
    }

    #[test]
    fn filter_neutral_and_ef_helps() {
        let data = synth::gaussian(2000, 8, 3).unwrap();
        let exact = exact_knng(&data, 10, &mut Counters::new()).unwrap();
        let (h, g0) = build_hnsw_knng(&data, 10, HnswParams { m: 8, ef_construction: 20, seed: 1 }, &mut Counters::new())
            .unwrap();
        let layer = h.graph.layer(0);
        let mut on = Counters::new();
        let mut off = Counters::new();
        let a = deep_search(&data, &g0, &layer, 40, Filters::ON, &mut on).unwrap();
        let b = deep_search(&data, &g0, &layer, 40, Filters::OFF, &mut off).unwrap();
        assert_eq!(a, b);
        assert!(on.total_dist < off.total_dist);
        assert_eq!(on.queries, 2000);
        let low = deep_search(&data, &g0, &layer, 10, Filters::ON, &mut Counters::new()).unwrap();
        assert!(recall(&a, &exact).unwrap() >= recall(&low, &exact).unwrap());
    }
}
