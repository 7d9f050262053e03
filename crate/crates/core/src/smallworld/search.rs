//! Best-first search over a proximity graph with a bounded candidate pool.

use crate::counters::Counters;
use crate::data::{kernel, Dataset};
use crate::error::{arg_err, Result};
use crate::graph::ProximityGraph;
use crate::pool::{Neighbor, NeighborPool};

/// Owner id used for queries that are not dataset points.
pub const EXTERNAL_QUERY: u32 = u32::MAX;

/// Visited bitmap with O(1) reset between queries.
#[derive(Clone, Debug)]
pub struct VisitedSet {
    marks: Vec<u32>,
    epoch: u32,
}

impl VisitedSet {
    pub fn new(n: usize) -> Self {
        Self {
            marks: vec![0; n],
            epoch: 1,
        }
    }

    pub fn clear(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.marks.iter_mut().for_each(|m| *m = 0);
            self.epoch = 1;
        }
    }

    /// Marks `id`; returns `true` if it was not marked yet.
    #[inline]
    pub fn insert(&mut self, id: u32) -> bool {
        let m = &mut self.marks[id as usize];
        if *m == self.epoch {
            false
        } else {
            *m = self.epoch;
            true
        }
    }

    #[inline]
    pub fn contains(&self, id: u32) -> bool {
        self.marks[id as usize] == self.epoch
    }

    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }
}

/// Reusable search state for one thread.
#[derive(Clone, Debug)]
pub struct Searcher {
    visited: VisitedSet,
    dedup: bool,
}

impl Searcher {
    /// Searcher that skips nodes already evaluated in the current query.
    pub fn new(n: usize) -> Self {
        Self {
            visited: VisitedSet::new(n),
            dedup: true,
        }
    }

    /// With `dedup = false` every reached neighbor is evaluated again, which
    /// costs distance computations but never changes the result.
    pub fn with_dedup(mut self, dedup: bool) -> Self {
        self.dedup = dedup;
        self
    }

    pub fn dedup(&self) -> bool {
        self.dedup
    }

    /// Seeds a pool of capacity `max(k, ef)` with `ep`, runs the expansion
    /// loop and returns the first `k` entries. Every computed distance is
    /// passed to `trace`. `owner`, if given, never enters the pool.
    #[allow(clippy::too_many_arguments)]
    pub fn search<G: ProximityGraph + ?Sized>(
        &mut self,
        graph: &G,
        data: &Dataset,
        query: &[f32],
        owner: Option<u32>,
        k: usize,
        ef: usize,
        ep: &[u32],
        counters: &mut Counters,
        trace: &mut impl FnMut(u32, f32),
    ) -> Result<(Vec<Neighbor>, u64)> {
        if ep.is_empty() {
            return arg_err("search needs at least one entry point");
        }
        if k == 0 {
            return arg_err("search needs k >= 1");
        }
        if let Some(&bad) = ep.iter().find(|&&e| e as usize >= graph.num_nodes()) {
            return arg_err(format!("entry point {bad} is not a graph node"));
        }
        let owner = owner.unwrap_or(EXTERNAL_QUERY);
        let mut pool = NeighborPool::new(owner, k.max(ef));
        self.visited.clear();
        for &e in ep {
            if e == owner || (self.dedup && !self.visited.insert(e)) {
                continue;
            }
            let d = kernel(query, data.point(e), data.accumulation());
            counters.total_dist += 1;
            trace(e, d);
            pool.update(e, d);
        }
        let expands = self.expand(graph, data, query, &mut pool, ef, counters, trace, false);
        let mut out = pool.into_entries();
        out.truncate(k);
        Ok((out, expands))
    }

    /// Runs the expansion loop on a pool that the caller already seeded with
    /// known distances. Returns the number of expansions.
    #[allow(clippy::too_many_arguments)]
    pub fn search_seeded<G: ProximityGraph + ?Sized>(
        &mut self,
        graph: &G,
        data: &Dataset,
        query: &[f32],
        pool: &mut NeighborPool,
        ef: usize,
        counters: &mut Counters,
        trace: &mut impl FnMut(u32, f32),
    ) -> u64 {
        self.visited.clear();
        self.expand(graph, data, query, pool, ef, counters, trace, true)
    }

    #[allow(clippy::too_many_arguments)]
    fn expand<G: ProximityGraph + ?Sized>(
        &mut self,
        graph: &G,
        data: &Dataset,
        query: &[f32],
        pool: &mut NeighborPool,
        ef: usize,
        counters: &mut Counters,
        trace: &mut impl FnMut(u32, f32),
        mark_seeds: bool,
    ) -> u64 {
        if self.dedup && mark_seeds {
            for e in pool.entries() {
                self.visited.insert(e.id);
            }
        }
        let owner = pool.owner();
        let mut expands = 0u64;
        // expand the first unexpanded entry until the first `ef` are all expanded
        while let Some(i) = pool.first_unexpanded(ef) {
            pool.entries_mut()[i].expanded = true;
            let u = pool.entries()[i].id;
            expands += 1;
            for v in graph.neighbors(u) {
                if v == owner || (self.dedup && !self.visited.insert(v)) {
                    continue;
                }
                let d = kernel(query, data.point(v), data.accumulation());
                counters.total_dist += 1;
                trace(v, d);
                pool.update(v, d);
            }
        }
        counters.expand_count += expands;
        expands
    }
}

/// One-off search from `ep` that records a query in `counters`.
#[allow(clippy::too_many_arguments)]
pub fn search_on_graph<G: ProximityGraph + ?Sized>(
    graph: &G,
    data: &Dataset,
    query: &[f32],
    owner: Option<u32>,
    k: usize,
    ef_search: usize,
    ep: &[u32],
    counters: &mut Counters,
) -> Result<Vec<Neighbor>> {
    let mut searcher = Searcher::new(graph.num_nodes());
    let (out, expands) = searcher.search(
        graph,
        data,
        query,
        owner,
        k,
        ef_search,
        ep,
        counters,
        &mut |_, _| {},
    )?;
    counters.record_query(expands);
    Ok(out)
}
