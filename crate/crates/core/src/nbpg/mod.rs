//! Neighborhood propagation: refinement of an initial KNN graph.
//!
//! * [`uniprop`]: neighbors of neighbors, synchronous iterations.
//! * [`nndes`] and [`kgraph_refine`]: joins over neighbors plus reverse
//!   neighbors.
//! * [`deep_search`]: one pass of graph search per node, seeded from the
//!   initial row.
//!
//! [`Filters`] toggle the two repetition filters. They only skip work whose
//! outcome is already known, so outputs never depend on them.

mod biprop;
mod deep;
mod uniprop;

pub use biprop::{kgraph_refine, kgraph_refine_with_stats, nndes, BiPropStats, KGraphParams, NnDesParams};
pub use deep::{deep_hnsw, deep_mdiv, deep_search};
pub use uniprop::uniprop;

use crate::counters::Counters;
use crate::graph::KnnGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Filters {
    /// Visited bitmap: each candidate is evaluated at most once per node and
    /// iteration.
    pub global: bool,
    /// `isOld` flags: pairs of entries that were both present in the previous
    /// round are not joined again.
    pub local: bool,
}

impl Filters {
    pub const ON: Filters = Filters { global: true, local: true };
    pub const OFF: Filters = Filters { global: false, local: false };
}

impl Default for Filters {
    fn default() -> Self {
        Self::ON
    }
}

/// Callback run after every iteration with the iteration number (from 1),
/// the current graph and the cumulative counters.
pub type Observer<'a> = &'a mut dyn FnMut(usize, &KnnGraph, &Counters);

/// k-th smallest distance of every row, for pool-head monotonicity checks.
fn row_heads<'a>(rows: impl Iterator<Item = &'a [crate::pool::Neighbor]>, k: usize) -> Vec<f32> {
    rows.map(|r| r.get(k - 1).map_or(f32::INFINITY, |e| e.dist)).collect()
}

fn assert_heads_monotone(before: &[f32], after: &[f32]) {
    for (u, (b, a)) in before.iter().zip(after).enumerate() {
        assert!(a <= b, "pool head of node {u} grew from {b} to {a}");
    }
}
