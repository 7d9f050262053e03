//! KNN graphs and the adjacency abstraction used by graph search.

use rand::seq::index;

use crate::counters::Counters;
use crate::data::Dataset;
use crate::error::{arg_err, Result};
use crate::pool::{Neighbor, NeighborPool};
use crate::rng::{rng_for, streams};

/// Anything graph search can walk: node ids `0..num_nodes()` with
/// out-neighbor lists.
pub trait ProximityGraph {
    fn num_nodes(&self) -> usize;
    fn neighbors(&self, u: u32) -> impl Iterator<Item = u32> + '_;
}

impl ProximityGraph for [Vec<u32>] {
    fn num_nodes(&self) -> usize {
        self.len()
    }

    fn neighbors(&self, u: u32) -> impl Iterator<Item = u32> + '_ {
        self[u as usize].iter().copied()
    }
}

impl ProximityGraph for Vec<Vec<u32>> {
    fn num_nodes(&self) -> usize {
        self.len()
    }

    fn neighbors(&self, u: u32) -> impl Iterator<Item = u32> + '_ {
        self[u as usize].iter().copied()
    }
}

/// Directed graph with exactly `k` ascending out-neighbors per node.
#[derive(Clone, Debug, PartialEq)]
pub struct KnnGraph {
    k: usize,
    rows: Vec<Vec<Neighbor>>,
}

pub(crate) fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k >= n {
        return arg_err(format!("k must satisfy 1 <= k < n, got k = {k}, n = {n}"));
    }
    Ok(())
}

impl KnnGraph {
    /// Wraps rows that already satisfy the graph invariants. Flags on the
    /// entries are cleared.
    pub fn from_rows(k: usize, mut rows: Vec<Vec<Neighbor>>) -> Result<Self> {
        check_k(rows.len(), k)?;
        for (u, row) in rows.iter_mut().enumerate() {
            if row.len() != k {
                return arg_err(format!("row {u} has {} entries, expected {k}", row.len()));
            }
            for e in row.iter_mut() {
                e.expanded = false;
                e.is_old = false;
            }
        }
        let g = Self { k, rows };
        if !g.is_structurally_sound() {
            return arg_err("rows must be ascending by (dist, id) without self-loops or duplicates");
        }
        Ok(g)
    }

    /// Takes the first `k` entries of each pool. Pools shorter than `k` are
    /// topped up with seeded random candidates first.
    pub fn from_pools(
        data: &Dataset,
        k: usize,
        mut pools: Vec<NeighborPool>,
        seed: u64,
        counters: &mut Counters,
    ) -> Result<Self> {
        check_k(data.len(), k)?;
        complete_short_pools(data, k, &mut pools, seed, counters);
        let rows = pools
            .into_iter()
            .map(|p| {
                let mut row = p.into_entries();
                row.truncate(k);
                row
            })
            .collect();
        Self::from_rows(k, rows)
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    #[inline]
    pub fn row(&self, u: u32) -> &[Neighbor] {
        &self.rows[u as usize]
    }

    pub fn rows(&self) -> &[Vec<Neighbor>] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<Vec<Neighbor>> {
        self.rows
    }

    pub fn ids(&self, u: u32) -> impl Iterator<Item = u32> + '_ {
        self.rows[u as usize].iter().map(|e| e.id)
    }

    /// Reverse in-degree of every node: `|{u : v in N_k(u)}|`.
    pub fn in_degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.len()];
        for row in &self.rows {
            for e in row {
                deg[e.id as usize] += 1;
            }
        }
        deg
    }

    fn is_structurally_sound(&self) -> bool {
        let n = self.len() as u32;
        self.rows.iter().enumerate().all(|(u, row)| {
            row.windows(2).all(|w| w[0].key_cmp(&w[1]).is_lt())
                && row.iter().all(|e| e.id != u as u32 && e.id < n && e.dist >= 0.0)
                && {
                    let mut ids: Vec<u32> = row.iter().map(|e| e.id).collect();
                    ids.sort_unstable();
                    ids.windows(2).all(|w| w[0] != w[1])
                }
        })
    }

    /// Full invariant check against the dataset, including that every stored
    /// distance equals the recomputed one.
    pub fn validate(&self, data: &Dataset) -> Result<()> {
        if data.len() != self.len() {
            return arg_err(format!(
                "graph has {} rows but dataset has {} points",
                self.len(),
                data.len()
            ));
        }
        if !self.is_structurally_sound() {
            return arg_err("graph rows are not ascending, distinct and loop-free");
        }
        let mut scratch = Counters::new();
        for (u, row) in self.rows.iter().enumerate() {
            if row.len() != self.k {
                return arg_err(format!("row {u} has {} entries", row.len()));
            }
            for e in row {
                let d = data.distance(u as u32, e.id, &mut scratch);
                if d.to_bits() != e.dist.to_bits() {
                    return arg_err(format!(
                        "row {u}: stored distance {} to {} differs from recomputed {d}",
                        e.dist, e.id
                    ));
                }
            }
        }
        Ok(())
    }

    /// Rebuilds a graph from neighbor ids, recomputing distances. Distance
    /// evaluations here are bookkeeping and are not counted.
    pub fn from_ids(data: &Dataset, k: usize, ids: &[Vec<u32>]) -> Result<Self> {
        if ids.len() != data.len() {
            return arg_err(format!(
                "{} id rows for a dataset of {} points",
                ids.len(),
                data.len()
            ));
        }
        let mut scratch = Counters::new();
        let mut rows = Vec::with_capacity(ids.len());
        for (u, r) in ids.iter().enumerate() {
            let mut row = Vec::with_capacity(r.len());
            for &v in r {
                if v as usize >= data.len() {
                    return arg_err(format!("row {u}: neighbor id {v} out of range"));
                }
                row.push(Neighbor::new(v, data.distance(u as u32, v, &mut scratch)));
            }
            row.sort_by(Neighbor::key_cmp);
            rows.push(row);
        }
        Self::from_rows(k, rows)
    }
}

impl ProximityGraph for KnnGraph {
    fn num_nodes(&self) -> usize {
        self.len()
    }

    fn neighbors(&self, u: u32) -> impl Iterator<Item = u32> + '_ {
        self.ids(u)
    }
}

/// Tops up every pool holding fewer than `k` entries with seeded random
/// candidates. Builders whose partitions leave some node short of `k`
/// neighbors rely on this.
pub(crate) fn complete_short_pools(
    data: &Dataset,
    k: usize,
    pools: &mut [NeighborPool],
    seed: u64,
    counters: &mut Counters,
) {
    let n = data.len();
    for pool in pools.iter_mut() {
        if pool.len() >= k {
            continue;
        }
        let u = pool.owner();
        let mut rng = rng_for(seed, streams::FILL, u as u64);
        // visit the other ids in a random order until the row is full
        let order = index::sample(&mut rng, n - 1, n - 1);
        for idx in order.iter() {
            if pool.len() >= k {
                break;
            }
            let v = if idx as u32 >= u { idx as u32 + 1 } else { idx as u32 };
            if pool.contains(v) {
                continue;
            }
            let d = data.distance(u, v, counters);
            pool.update(v, d);
        }
    }
}
