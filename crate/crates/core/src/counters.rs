use serde::Serialize;

/// Cost tallies for one run. Worker threads keep private copies and merge
/// them at barriers.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counters {
    /// Distance evaluations.
    pub total_dist: u64,
    /// Node expansions in graph search.
    pub expand_count: u64,
    /// Adjacency prunes during HNSW construction.
    pub prune_count: u64,
    /// Number of searches recorded in `expand_hist`.
    pub queries: u64,
    /// `expand_hist[e]` = number of searches that expanded exactly `e` nodes.
    pub expand_hist: Vec<u64>,
    /// Largest auxiliary-structure footprint reported by any stage, in bytes.
    pub peak_aux_bytes: u64,
}

impl Counters {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add_dist(&mut self, count: u64) {
        self.total_dist += count;
    }

    /// Records one finished search that expanded `expands` nodes. The
    /// expansions themselves are counted by the search as they happen.
    pub fn record_query(&mut self, expands: u64) {
        let idx = expands as usize;
        if self.expand_hist.len() <= idx {
            self.expand_hist.resize(idx + 1, 0);
        }
        self.expand_hist[idx] += 1;
        self.queries += 1;
    }

    pub fn note_aux_bytes(&mut self, bytes: u64) {
        self.peak_aux_bytes = self.peak_aux_bytes.max(bytes);
    }

    pub fn merge(&mut self, other: &Counters) {
        self.total_dist += other.total_dist;
        self.expand_count += other.expand_count;
        self.prune_count += other.prune_count;
        self.queries += other.queries;
        if self.expand_hist.len() < other.expand_hist.len() {
            self.expand_hist.resize(other.expand_hist.len(), 0);
        }
        for (a, b) in self.expand_hist.iter_mut().zip(&other.expand_hist) {
            *a += b;
        }
        self.peak_aux_bytes = self.peak_aux_bytes.max(other.peak_aux_bytes);
    }

    /// Mean expansions per recorded search, or 0 when nothing was recorded.
    pub fn mean_expand(&self) -> f64 {
        if self.queries == 0 {
            return 0.0;
        }
        let total: u64 = self
            .expand_hist
            .iter()
            .enumerate()
            .map(|(e, c)| e as u64 * c)
            .sum();
        total as f64 / self.queries as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_sums_and_keeps_peak() {
        let mut a = Counters::new();
        a.add_dist(3);
        a.record_query(2);
        a.note_aux_bytes(100);
        let mut b = Counters::new();
        b.add_dist(4);
        b.record_query(5);
        b.record_query(2);
        b.prune_count = 1;
        b.note_aux_bytes(50);
        a.merge(&b);
        assert_eq!(a.total_dist, 7);
        assert_eq!(a.queries, 3);
        assert_eq!(a.expand_hist, vec![0, 0, 2, 0, 0, 1]);
        assert_eq!(a.prune_count, 1);
        assert_eq!(a.peak_aux_bytes, 100);
        assert!((a.mean_expand() - 3.0).abs() < 1e-12);
    }
}
