use rayon::prelude::*;

use crate::counters::Counters;
use crate::data::Dataset;
use crate::error::{arg_err, Result};
use crate::graph::KnnGraph;
use crate::pool::{Neighbor, NeighborPool};
use crate::smallworld::VisitedSet;

use super::{assert_heads_monotone, row_heads, Filters, Observer};

/// Refines `g0` for `n_iter` synchronous rounds: every node offers the
/// neighbors of its neighbors (as of the previous round) to its own row.
///
/// An entry is old when it was already in the row one round earlier. With
/// the local filter, `w` in `v`'s row is skipped when both `v` (in `u`'s
/// row) and `w` are old: `u` already saw `w` through `v` last round.
pub fn uniprop(
    data: &Dataset,
    g0: &KnnGraph,
    n_iter: usize,
    filters: Filters,
    counters: &mut Counters,
    mut observer: Option<Observer<'_>>,
) -> Result<KnnGraph> {
    let n = data.len();
    let k = g0.k();
    if g0.len() != n {
        return arg_err(format!("graph has {} rows but the dataset has {n} points", g0.len()));
    }
    if n_iter == 0 {
        return Ok(g0.clone());
    }
    // round t reads the rows of round t - 1; round 1 reads g0 in place
    let mut rows: Option<Vec<Vec<Neighbor>>> = None;
    let threads = rayon::current_num_threads();
    counters.note_aux_bytes((n * k * std::mem::size_of::<Neighbor>() + threads * n * 4) as u64);

    for t in 1..=n_iter {
        let prev = rows.as_deref().unwrap_or(g0.rows());
        let results: Vec<(Vec<Neighbor>, u64)> = (0..n as u32)
            .into_par_iter()
            .map_init(
                || VisitedSet::new(n),
                |visited, u| refine_row(data, prev, u, k, filters, visited),
            )
            .collect();
        let mut next = Vec::with_capacity(n);
        for (row, dist) in results {
            counters.add_dist(dist);
            next.push(row);
        }
        if cfg!(debug_assertions) {
            let before = row_heads(prev.iter().map(|r| r.as_slice()), k);
            let after = row_heads(next.iter().map(|r| r.as_slice()), k);
            assert_heads_monotone(&before, &after);
        }
        if let Some(obs) = observer.as_mut() {
            obs(t, &KnnGraph::from_rows(k, next.clone())?, counters);
        }
        rows = Some(next);
    }
    KnnGraph::from_rows(k, rows.expect("at least one round ran"))
}

fn refine_row(
    data: &Dataset,
    prev: &[Vec<Neighbor>],
    u: u32,
    k: usize,
    filters: Filters,
    visited: &mut VisitedSet,
) -> (Vec<Neighbor>, u64) {
    let mut local = Counters::new();
    let own = &prev[u as usize];
    let mut pool = NeighborPool::from_entries(u, k, own.clone());
    if filters.global {
        visited.clear();
        visited.insert(u);
        for e in own {
            visited.insert(e.id);
        }
    }
    for v in own {
        for w in &prev[v.id as usize] {
            if w.id == u {
                continue;
            }
            if filters.local && v.is_old && w.is_old {
                continue;
            }
            if filters.global && !visited.insert(w.id) {
                continue;
            }
            let d = data.distance(u, w.id, &mut local);
            pool.update(w.id, d);
        }
    }
    let mut row = pool.into_entries();
    for e in row.iter_mut() {
        e.is_old = own.iter().any(|o| o.id == e.id);
        e.expanded = false;
    }
    (row, local.total_dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::random_knng;
    use crate::metrics::recall;
    use crate::oracle::exact_knng;
    use crate::synth;

    #[test]
    fn zero_iterations_is_identity() {
        let data = synth::gaussian(200, 4, 1).unwrap();
        let g0 = random_knng(&data, 5, 2, &mut Counters::new()).unwrap();
        let mut c = Counters::new();
        let g = uniprop(&data, &g0, 0, Filters::ON, &mut c, None).unwrap();
        assert_eq!(g, g0);
        assert_eq!(c.total_dist, 0);
    }

    #[test]
    fn exact_input_stays_exact() {
        let data = synth::gaussian(300, 6, 3).unwrap();
        let exact = exact_knng(&data, 8, &mut Counters::new()).unwrap();
        let g = uniprop(&data, exact.graph(), 3, Filters::ON, &mut Counters::new(), None).unwrap();
        assert_eq!(&g, exact.graph());
    }

    #[test]
    fn filters_are_neutral_and_save_work() {
        let data = synth::gaussian(1500, 8, 4).unwrap();
        let g0 = random_knng(&data, 10, 7, &mut Counters::new()).unwrap();
        let mut runs = Vec::new();
        for f in [Filters::OFF, Filters { global: true, local: false }, Filters { global: false, local: true }, Filters::ON] {
            let mut c = Counters::new();
            let g = uniprop(&data, &g0, 4, f, &mut c, None).unwrap();
            runs.push((g, c.total_dist));
        }
        for r in &runs[1..] {
            assert_eq!(r.0, runs[0].0);
            assert!(r.1 < runs[0].1);
        }
        assert!(runs[3].1 <= runs[1].1 && runs[3].1 <= runs[2].1);
    }

    #[test]
    fn recall_improves_and_observer_sees_each_round() {
        let data = synth::gaussian(2000, 6, 5).unwrap();
        let exact = exact_knng(&data, 10, &mut Counters::new()).unwrap();
        let g0 = random_knng(&data, 10, 1, &mut Counters::new()).unwrap();
        let mut seen = Vec::new();
        let mut obs = |t: usize, g: &KnnGraph, _: &Counters| seen.push((t, recall(g, &exact).unwrap()));
        uniprop(&data, &g0, 3, Filters::ON, &mut Counters::new(), Some(&mut obs)).unwrap();
        assert_eq!(seen.iter().map(|s| s.0).collect::<Vec<_>>(), vec![1, 2, 3]);
        let r0 = recall(&g0, &exact).unwrap();
        assert!(seen[0].1 > r0);
        assert!(seen.windows(2).all(|w| w[1].1 >= w[0].1));
    }
}
