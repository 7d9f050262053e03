//! Accuracy and cost metrics against the exact oracle.
//!
//! Neighbor lists are compared as sets; exact neighbor sets are defined with
//! `(dist, id)` tie-breaking.

use serde::Serialize;

use crate::counters::Counters;
use crate::error::{arg_err, Result};
use crate::graph::KnnGraph;
use crate::oracle::{ExactKnng, SampledOracle};

fn check_shapes(g: &KnnGraph, exact: &ExactKnng) -> Result<()> {
    if g.len() != exact.len() || g.k() != exact.k() {
        return arg_err(format!(
            "graph (n = {}, k = {}) does not match oracle (n = {}, k = {})",
            g.len(),
            g.k(),
            exact.len(),
            exact.k()
        ));
    }
    Ok(())
}

/// Marks the exact neighbors of `u` in `mark` (stamped with `u + 1`) and
/// counts how many of `g`'s neighbors of `u` are among them.
fn row_hits(g: &KnnGraph, exact: &ExactKnng, u: u32, mark: &mut [u32]) -> usize {
    let stamp = u + 1;
    for v in exact.graph().ids(u) {
        mark[v as usize] = stamp;
    }
    g.ids(u).filter(|&v| mark[v as usize] == stamp).count()
}

/// `|N*_k(u) ∩ N_k(u)| / k` for every node.
pub fn per_node_recall(g: &KnnGraph, exact: &ExactKnng) -> Result<Vec<f64>> {
    check_shapes(g, exact)?;
    let k = g.k() as f64;
    let mut mark = vec![0u32; g.len()];
    Ok((0..g.len() as u32)
        .map(|u| row_hits(g, exact, u, &mut mark) as f64 / k)
        .collect())
}

/// Mean recall over all nodes.
pub fn recall(g: &KnnGraph, exact: &ExactKnng) -> Result<f64> {
    check_shapes(g, exact)?;
    let mut mark = vec![0u32; g.len()];
    let hits: usize = (0..g.len() as u32)
        .map(|u| row_hits(g, exact, u, &mut mark))
        .sum();
    Ok(hits as f64 / (g.len() * g.k()) as f64)
}

/// Reverse recall `|R_k(v) ∩ R*_k(v)| / |R*_k(v)|` per node.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReverseRecall {
    /// `None` where `R*_k(v)` is empty and the ratio is undefined.
    pub per_node: Vec<Option<f64>>,
    /// Mean over nodes with a defined ratio.
    pub mean: f64,
    /// Nodes with no exact reverse neighbors, excluded from `mean`.
    pub excluded: Vec<u32>,
}

pub fn reverse_recall(g: &KnnGraph, exact: &ExactKnng) -> Result<ReverseRecall> {
    check_shapes(g, exact)?;
    let n = g.len();
    // v ∈ R_k(v') ∩ R*_k(v') ⇔ v' ∈ N_k(v) ∩ N*_k(v)
    let mut hits = vec![0u32; n];
    let mut mark = vec![0u32; n];
    for u in 0..n as u32 {
        let stamp = u + 1;
        for v in exact.graph().ids(u) {
            mark[v as usize] = stamp;
        }
        for v in g.ids(u) {
            if mark[v as usize] == stamp {
                hits[v as usize] += 1;
            }
        }
    }
    let mut per_node = Vec::with_capacity(n);
    let mut excluded = Vec::new();
    let (mut sum, mut count) = (0.0f64, 0usize);
    for v in 0..n {
        let h = exact.reverse(v as u32).len();
        if h == 0 {
            per_node.push(None);
            excluded.push(v as u32);
        } else {
            let r = hits[v] as f64 / h as f64;
            sum += r;
            count += 1;
            per_node.push(Some(r));
        }
    }
    let mean = if count == 0 { 0.0 } else { sum / count as f64 };
    Ok(ReverseRecall {
        per_node,
        mean,
        excluded,
    })
}

/// Distance evaluations relative to the `n (n - 1) / 2` of brute force.
pub fn scan_rate(counters: &Counters, n: usize) -> f64 {
    scan_rate_of(counters.total_dist, n)
}

pub fn scan_rate_of(total_dist: u64, n: usize) -> f64 {
    debug_assert!(n >= 2);
    let pairs = n as f64 * (n as f64 - 1.0) / 2.0;
    total_dist as f64 / pairs
}

/// Recall estimated on the sampled queries only.
pub fn estimated_recall(g: &KnnGraph, oracle: &SampledOracle) -> Result<f64> {
    if g.k() != oracle.k() {
        return arg_err(format!("graph k = {} but oracle k = {}", g.k(), oracle.k()));
    }
    let mut hits = 0usize;
    for (i, &q) in oracle.queries().iter().enumerate() {
        if q as usize >= g.len() {
            return arg_err(format!("sampled query {q} outside graph"));
        }
        let truth = oracle.row(i);
        hits += g
            .ids(q)
            .filter(|v| truth.iter().any(|t| t.id == *v))
            .count();
    }
    Ok(hits as f64 / (oracle.queries().len() * g.k()) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Dataset;
    use crate::oracle::exact_knng;
    use crate::pool::Neighbor;

    fn four_points() -> (Dataset, ExactKnng) {
        let data = Dataset::from_rows(&[[0.0f32], [1.0], [2.0], [10.0]]).unwrap();
        let ex = exact_knng(&data, 1, &mut Counters::new()).unwrap();
        (data, ex)
    }

    #[test]
    fn self_comparison_is_perfect() {
        let (_, ex) = four_points();
        assert_eq!(recall(ex.graph(), &ex).unwrap(), 1.0);
        let rr = reverse_recall(ex.graph(), &ex).unwrap();
        assert_eq!(rr.mean, 1.0);
        // node 3 (x = 10) is nobody's nearest neighbor
        assert_eq!(rr.excluded, vec![3]);
        assert_eq!(rr.per_node[3], None);
    }

    #[test]
    fn hand_enumerated_reverse_recall() {
        let (data, ex) = four_points();
        // NN(2) = 0 instead of 1
        let g = KnnGraph::from_ids(&data, 1, &[vec![1], vec![0], vec![0], vec![2]]).unwrap();
        let rr = reverse_recall(&g, &ex).unwrap();
        assert_eq!(rr.per_node[1], Some(0.5));
        assert!((recall(&g, &ex).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn farthest_rows_have_zero_recall() {
        let rows: Vec<[f32; 1]> = (0..12).map(|i| [i as f32 * i as f32]).collect();
        let data = Dataset::from_rows(&rows).unwrap();
        let k = 3;
        let ex = exact_knng(&data, k, &mut Counters::new()).unwrap();
        let mut c = Counters::new();
        let far: Vec<Vec<u32>> = (0..12u32)
            .map(|u| {
                let mut all: Vec<Neighbor> = (0..12u32)
                    .filter(|&v| v != u)
                    .map(|v| Neighbor::new(v, data.distance(u, v, &mut c)))
                    .collect();
                all.sort_by(Neighbor::key_cmp);
                all.iter().rev().take(k).map(|e| e.id).collect()
            })
            .collect();
        let g = KnnGraph::from_ids(&data, k, &far).unwrap();
        assert_eq!(recall(&g, &ex).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_shapes_rejected() {
        let (data, ex) = four_points();
        let g = KnnGraph::from_ids(&data, 2, &[vec![1, 2], vec![0, 2], vec![1, 0], vec![2, 1]])
            .unwrap();
        assert!(recall(&g, &ex).is_err());
        assert!(reverse_recall(&g, &ex).is_err());
    }

    #[test]
    fn scan_rate_basics() {
        let mut c = Counters::new();
        assert_eq!(scan_rate(&c, 100), 0.0);
        c.add_dist(4950);
        assert_eq!(scan_rate(&c, 100), 1.0);
    }
}
