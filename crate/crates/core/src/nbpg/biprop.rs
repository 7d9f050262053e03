//! Joins over neighbors plus reverse neighbors.
//!
//! Each round, node `u` gathers `B(u)`: its active window `N_m(u)` (part of
//! its pool) followed by its reverse set `R_m(u)` (nodes whose window holds
//! `u`, cut to `T` by a seeded shuffle). Every pair in `B(u)` is evaluated
//! and offered to both endpoints' pools.
//!
//! `B` is fixed at the start of a round, so the distance work runs in
//! parallel and only the pool updates are applied in node order.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::counters::Counters;
use crate::data::Dataset;
use crate::error::{arg_err, Result};
use crate::graph::{check_k, KnnGraph};
use crate::init::random_pools;
use crate::pool::{Neighbor, NeighborPool};
use crate::rng::{rng_for, streams};
use crate::smallworld::VisitedSet;

use super::{assert_heads_monotone, row_heads, Filters, Observer};

const CHUNK: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NnDesParams {
    pub n_iter: usize,
    pub seed: u64,
    pub filters: Filters,
}

impl Default for NnDesParams {
    fn default() -> Self {
        Self {
            n_iter: 8,
            seed: 0,
            filters: Filters::ON,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KGraphParams {
    /// Pool capacity `L`.
    pub pool_size: usize,
    /// Reverse-set cap `T`.
    pub reverse_cap: usize,
    /// Window growth bound `delta`.
    pub delta: usize,
    pub n_iter: usize,
    pub seed: u64,
    pub filters: Filters,
}

impl Default for KGraphParams {
    fn default() -> Self {
        Self {
            pool_size: 100,
            reverse_cap: 100,
            delta: 10,
            n_iter: 16,
            seed: 0,
            filters: Filters::ON,
        }
    }
}

impl KGraphParams {
    pub fn validate(&self, k: usize) -> Result<()> {
        if self.pool_size < k {
            return arg_err(format!("pool size L = {} must be at least k = {k}", self.pool_size));
        }
        if self.reverse_cap == 0 {
            return arg_err("reverse cap T must be at least 1");
        }
        if self.delta == 0 {
            return arg_err("delta must be at least 1");
        }
        Ok(())
    }
}

/// Per-node state left after a run, for invariant checks.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BiPropStats {
    /// Final window size `m(u)`.
    pub m: Vec<usize>,
    /// Largest reverse set used in any round, after the cut.
    pub max_reverse: usize,
    /// Largest number of entries that newly entered a window in one round.
    pub max_window_growth: usize,
}

struct Config {
    k: usize,
    reverse_cap: usize,
    /// Cap on entries newly admitted to a window per round.
    admit: usize,
    /// Window growth step, `None` for a fixed window.
    grow: Option<usize>,
    max_m: usize,
    n_iter: usize,
    seed: u64,
    filters: Filters,
}

/// NN-Descent style refinement: `L = k`, fixed window `m = k`, `T = k`,
/// random initial pools.
pub fn nndes(
    data: &Dataset,
    k: usize,
    params: NnDesParams,
    counters: &mut Counters,
    observer: Option<Observer<'_>>,
) -> Result<KnnGraph> {
    check_k(data.len(), k)?;
    let pools = random_pools(data, k, params.seed, counters);
    let cfg = Config {
        k,
        reverse_cap: k,
        admit: usize::MAX,
        grow: None,
        max_m: k,
        n_iter: params.n_iter,
        seed: params.seed,
        filters: params.filters,
    };
    run(data, cfg, pools, vec![k; data.len()], counters, observer).map(|r| r.0)
}

/// KGraph style refinement with growing windows. Pools start from `g0`'s
/// rows when given, otherwise from `k` random neighbors.
pub fn kgraph_refine(
    data: &Dataset,
    k: usize,
    params: KGraphParams,
    g0: Option<&KnnGraph>,
    counters: &mut Counters,
    observer: Option<Observer<'_>>,
) -> Result<KnnGraph> {
    kgraph_refine_with_stats(data, k, params, g0, counters, observer).map(|r| r.0)
}

/// [`kgraph_refine`] that also returns the final per-node state.
pub fn kgraph_refine_with_stats(
    data: &Dataset,
    k: usize,
    params: KGraphParams,
    g0: Option<&KnnGraph>,
    counters: &mut Counters,
    observer: Option<Observer<'_>>,
) -> Result<(KnnGraph, BiPropStats)> {
    let n = data.len();
    check_k(n, k)?;
    params.validate(k)?;
    let pools = match g0 {
        Some(g) => {
            if g.len() != n || g.k() != k {
                return arg_err("initial graph does not match the dataset and k");
            }
            g.rows()
                .iter()
                .enumerate()
                .map(|(u, row)| NeighborPool::from_entries(u as u32, params.pool_size, row.clone()))
                .collect()
        }
        None => {
            let mut pools = random_pools(data, k, params.seed, counters);
            for p in pools.iter_mut() {
                *p = NeighborPool::from_entries(p.owner(), params.pool_size, p.entries().to_vec());
            }
            pools
        }
    };
    let m0 = params.delta.min(params.pool_size);
    let cfg = Config {
        k,
        reverse_cap: params.reverse_cap,
        admit: params.delta,
        grow: Some(params.delta),
        max_m: params.pool_size,
        n_iter: params.n_iter,
        seed: params.seed,
        filters: params.filters,
    };
    run(data, cfg, pools, vec![m0; n], counters, observer)
}

fn first_k(pools: &[NeighborPool], k: usize) -> Result<KnnGraph> {
    KnnGraph::from_rows(k, pools.iter().map(|p| p.entries()[..k].to_vec()).collect())
}

/// Selects the round's window in place: entries already in the previous
/// window stay, at most `admit` others join, all within the first `m`
/// positions. Pool flags are rewritten to mark the new window.
fn select_window(pool: &mut NeighborPool, m: usize, admit: usize) -> (Vec<u32>, usize) {
    let mut window = Vec::with_capacity(m);
    let mut admitted = 0;
    for (i, e) in pool.entries_mut().iter_mut().enumerate() {
        let keep = i < m && (e.is_old || admitted < admit);
        if keep && !e.is_old {
            admitted += 1;
        }
        e.is_old = keep;
        if keep {
            window.push(e.id);
        }
    }
    (window, admitted)
}

fn run(
    data: &Dataset,
    cfg: Config,
    mut pools: Vec<NeighborPool>,
    mut m: Vec<usize>,
    counters: &mut Counters,
    mut observer: Option<Observer<'_>>,
) -> Result<(KnnGraph, BiPropStats)> {
    let n = data.len();
    let k = cfg.k;
    let mut stats = BiPropStats::default();
    // previous round's B(u), sorted, for the local filter
    let mut prev_b: Vec<Vec<u32>> = vec![Vec::new(); n];
    for p in pools.iter_mut() {
        p.entries_mut().iter_mut().for_each(|e| e.is_old = false);
    }
    let pool_bytes = n * cfg.max_m * std::mem::size_of::<Neighbor>();
    counters.note_aux_bytes(pool_bytes as u64);

    for t in 1..=cfg.n_iter {
        let heads = row_heads(pools.iter().map(|p| p.entries()), k);
        let mut windows = Vec::with_capacity(n);
        for (p, &mu) in pools.iter_mut().zip(&m) {
            let (w, admitted) = select_window(p, mu, cfg.admit);
            stats.max_window_growth = stats.max_window_growth.max(admitted);
            windows.push(w);
        }
        let mut reverse: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (u, w) in windows.iter().enumerate() {
            for &v in w {
                reverse[v as usize].push(u as u32);
            }
        }
        for (v, r) in reverse.iter_mut().enumerate() {
            if r.len() > cfg.reverse_cap {
                let mut rng = rng_for(cfg.seed, streams::REVERSE_SHUFFLE, ((t as u64) << 32) | v as u64);
                r.shuffle(&mut rng);
                r.truncate(cfg.reverse_cap);
                r.sort_unstable();
            }
            stats.max_reverse = stats.max_reverse.max(r.len());
        }

        let mut next_b: Vec<Vec<u32>> = Vec::with_capacity(if cfg.filters.local { n } else { 0 });
        let mut grew = vec![false; n];
        for start in (0..n).step_by(CHUNK) {
            let end = (start + CHUNK).min(n);
            let joined: Vec<(Vec<(u32, u32, f32)>, Vec<u32>, u64)> = (start..end)
                .into_par_iter()
                .map_init(
                    || VisitedSet::new(n),
                    |visited, u| join(data, &windows[u], &reverse[u], &prev_b[u], cfg.filters, visited),
                )
                .collect();
            for (i, (proposals, b_sorted, dist)) in joined.into_iter().enumerate() {
                counters.add_dist(dist);
                let mut ok = false;
                for (a, b, d) in proposals {
                    let x = pools[a as usize].update(b, d);
                    let y = pools[b as usize].update(a, d);
                    ok |= x | y;
                }
                grew[start + i] = ok;
                if cfg.filters.local {
                    next_b.push(b_sorted);
                }
            }
        }
        if cfg.filters.local {
            prev_b = next_b;
        }

        if let Some(step) = cfg.grow {
            for (mu, g) in m.iter_mut().zip(&grew) {
                let before = *mu;
                if *g {
                    *mu = (*mu + step).min(cfg.max_m);
                }
                debug_assert!(*mu >= before && *mu - before <= step, "window bound broken");
            }
        }
        let side: usize = windows.iter().chain(&reverse).chain(&prev_b).map(Vec::len).sum();
        counters.note_aux_bytes((pool_bytes + side * 4) as u64);
        if cfg!(debug_assertions) {
            assert_heads_monotone(&heads, &row_heads(pools.iter().map(|p| p.entries()), k));
        }
        if let Some(obs) = observer.as_mut() {
            obs(t, &first_k(&pools, k)?, counters);
        }
    }
    stats.m = m;
    Ok((first_k(&pools, k)?, stats))
}

/// All pairs of `B(u) = window ++ reverse`. Returns the proposals, the
/// sorted id set of `B(u)` and the number of distances computed.
fn join(
    data: &Dataset,
    window: &[u32],
    reverse: &[u32],
    prev_b: &[u32],
    filters: Filters,
    visited: &mut VisitedSet,
) -> (Vec<(u32, u32, f32)>, Vec<u32>, u64) {
    let mut b: Vec<u32> = Vec::with_capacity(window.len() + reverse.len());
    if filters.global {
        visited.clear();
        for &x in window.iter().chain(reverse) {
            if visited.insert(x) {
                b.push(x);
            }
        }
    } else {
        b.extend(window.iter().chain(reverse));
    }
    let old: Vec<bool> = if filters.local {
        b.iter().map(|x| prev_b.binary_search(x).is_ok()).collect()
    } else {
        vec![false; b.len()]
    };
    let mut local = Counters::new();
    let mut proposals = Vec::new();
    for i in 0..b.len() {
        for j in (i + 1)..b.len() {
            if b[i] == b[j] || (old[i] && old[j]) {
                continue;
            }
            let d = data.distance(b[i], b[j], &mut local);
            proposals.push((b[i], b[j], d));
        }
    }
    let mut sorted = if filters.local { b } else { Vec::new() };
    sorted.sort_unstable();
    sorted.dedup();
    (proposals, sorted, local.total_dist)
}
