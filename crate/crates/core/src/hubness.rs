//! Node and data hubness, and accuracy broken down by hubness.
//!
//! `h_k(v)` counts the exact reverse neighbors of `v`. `H_k(x)` is the share
//! of all `n k` reverse edges held by the `ceil(x n)` nodes with the largest
//! `h_k`.

use std::fmt;
use std::io::Write;

use serde::Serialize;

use crate::error::{arg_err, Result};
use crate::graph::KnnGraph;
use crate::metrics::{per_node_recall, reverse_recall};
use crate::oracle::ExactKnng;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HubnessProfile {
    k: usize,
    counts: Vec<u32>,
    /// Node ids by descending `h_k`, ties by ascending id.
    order: Vec<u32>,
}

impl HubnessProfile {
    pub fn from_counts(k: usize, counts: Vec<u32>) -> Self {
        let mut order: Vec<u32> = (0..counts.len() as u32).collect();
        order.sort_by(|&a, &b| counts[b as usize].cmp(&counts[a as usize]).then(a.cmp(&b)));
        Self { k, counts, order }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn h(&self, v: u32) -> u32 {
        self.counts[v as usize]
    }

    pub fn order(&self) -> &[u32] {
        &self.order
    }
}

/// `h_k(v) = |R*_k(v)|` for every node.
pub fn node_hubness(exact: &ExactKnng) -> HubnessProfile {
    let counts = (0..exact.len() as u32)
        .map(|v| exact.reverse(v).len() as u32)
        .collect();
    HubnessProfile::from_counts(exact.k(), counts)
}

/// Number of top nodes summed for fraction `x`: `ceil(x n)`, with a small
/// guard so that e.g. `0.1 * 20000` does not round up past 2000.
fn top_count(x: f64, n: usize) -> usize {
    let raw = x * n as f64;
    let m = (raw - 1e-9 * raw.max(1.0)).ceil();
    (m.max(0.0) as usize).min(n)
}

/// `H_k(x, D)`.
pub fn data_hubness(profile: &HubnessProfile, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return arg_err(format!("hubness fraction x = {x} is outside [0, 1]"));
    }
    let n = profile.len();
    let top: u64 = profile.order[..top_count(x, n)]
        .iter()
        .map(|&v| profile.counts[v as usize] as u64)
        .sum();
    let total: u64 = profile.counts.iter().map(|&c| c as u64).sum();
    if total == 0 {
        return Ok(0.0);
    }
    Ok(top as f64 / total as f64)
}

/// `(x, H_k(x))` for each requested `x`.
pub fn hubness_curve(profile: &HubnessProfile, xs: &[f64]) -> Result<Vec<(f64, f64)>> {
    xs.iter().map(|&x| Ok((x, data_hubness(profile, x)?))).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HubClass {
    Low,
    Moderate,
    High,
}

impl fmt::Display for HubClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HubClass::Low => "low",
            HubClass::Moderate => "moderate",
            HubClass::High => "high",
        })
    }
}

/// Class from `H_k(0.01)`: low below 0.1, high above 0.2.
pub fn classify_value(h_001: f64) -> HubClass {
    if h_001 < 0.1 {
        HubClass::Low
    } else if h_001 > 0.2 {
        HubClass::High
    } else {
        HubClass::Moderate
    }
}

pub fn classify_hubness(profile: &HubnessProfile) -> HubClass {
    classify_value(data_hubness(profile, 0.01).expect("0.01 is a valid fraction"))
}

/// Accuracy of the nodes whose `h_k` lies in `[lo, hi)` (`hi = None`: no
/// upper bound).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bucket {
    pub lo: u32,
    pub hi: Option<u32>,
    pub count: usize,
    /// Mean recall, `None` for an empty bucket.
    pub recall: Option<f64>,
    /// Mean reverse recall over the bucket's nodes with `h_k > 0`.
    pub recall_r: Option<f64>,
    /// Nodes contributing to `recall_r`.
    pub recall_r_count: usize,
}

/// Groups nodes by `h_k` using ascending bucket `edges`: bucket `i` covers
/// `[edges[i], edges[i + 1])`, the last one is open-ended. Nodes below
/// `edges[0]` are not counted.
pub fn bucketed_accuracy(
    g: &KnnGraph,
    exact: &ExactKnng,
    profile: &HubnessProfile,
    edges: &[u32],
) -> Result<Vec<Bucket>> {
    if edges.is_empty() || edges.windows(2).any(|w| w[0] >= w[1]) {
        return arg_err("bucket edges must be non-empty and strictly ascending");
    }
    if profile.len() != g.len() {
        return arg_err("profile and graph sizes differ");
    }
    let rec = per_node_recall(g, exact)?;
    let rev = reverse_recall(g, exact)?;
    let mut sums = vec![(0usize, 0.0f64, 0usize, 0.0f64); edges.len()];
    for v in 0..g.len() {
        let h = profile.counts[v];
        if h < edges[0] {
            continue;
        }
        let b = edges.partition_point(|&e| e <= h) - 1;
        let s = &mut sums[b];
        s.0 += 1;
        s.1 += rec[v];
        if let Some(r) = rev.per_node[v] {
            s.2 += 1;
            s.3 += r;
        }
    }
    Ok(sums
        .into_iter()
        .enumerate()
        .map(|(i, (count, r, rc, rr))| Bucket {
            lo: edges[i],
            hi: edges.get(i + 1).copied(),
            count,
            recall: (count > 0).then(|| r / count as f64),
            recall_r: (rc > 0).then(|| rr / rc as f64),
            recall_r_count: rc,
        })
        .collect())
}

/// Splits the nodes with `h_k > 0` into `parts` groups of near-equal size
/// along the descending-hubness order; group 0 holds the largest hubs.
pub fn hub_quantiles(profile: &HubnessProfile, parts: usize) -> Result<Vec<Vec<u32>>> {
    if parts == 0 {
        return arg_err("need at least one quantile group");
    }
    let hubs: Vec<u32> = profile
        .order
        .iter()
        .copied()
        .take_while(|&v| profile.counts[v as usize] > 0)
        .collect();
    let (base, extra) = (hubs.len() / parts, hubs.len() % parts);
    let mut out = Vec::with_capacity(parts);
    let mut at = 0;
    for i in 0..parts {
        let size = base + usize::from(i < extra);
        out.push(hubs[at..at + size].to_vec());
        at += size;
    }
    Ok(out)
}

/// Mean of the defined values at the given nodes.
pub fn group_mean(values: &[Option<f64>], group: &[u32]) -> Option<f64> {
    let defined: Vec<f64> = group.iter().filter_map(|&v| values[v as usize]).collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

/// Rows `h_lo,h_hi,recall,recall_R,bucket_n`; empty buckets are left out.
pub fn write_bucket_csv(mut w: impl Write, buckets: &[Bucket]) -> std::io::Result<()> {
    writeln!(w, "h_lo,h_hi,recall,recall_R,bucket_n")?;
    for b in buckets.iter().filter(|b| b.count > 0) {
        let hi = b.hi.map(|h| h.to_string()).unwrap_or_default();
        let rr = b.recall_r.map(|r| r.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{},{}", b.lo, hi, b.recall.unwrap_or(0.0), rr, b.count)?;
    }
    Ok(())
}

/// Rows `x,H`.
pub fn write_curve_csv(mut w: impl Write, curve: &[(f64, f64)]) -> std::io::Result<()> {
    writeln!(w, "x,H")?;
    for (x, h) in curve {
        writeln!(w, "{x},{h}")?;
    }
    Ok(())
}
