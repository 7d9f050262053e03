//! Random-projection forest initial graph.
//!
//! Each tree splits a group by the perpendicular bisector of two sampled
//! points until groups hold at most `leaf_size` points. A point's candidates
//! are the co-members of its leaves, collected tree by tree (deduplicated);
//! no further trees are visited once `l_tree * k` distinct ids are found.
//! A leaf is always taken whole.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use crate::counters::Counters;
use crate::data::{dot, Dataset};
use crate::error::{arg_err, Result};
use crate::graph::{check_k, KnnGraph};
use crate::pool::NeighborPool;
use crate::rng::{rng_for, streams};

const SAMPLE_RETRIES: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RpForestParams {
    pub l_tree: usize,
    pub leaf_size: usize,
    pub seed: u64,
}

impl Default for RpForestParams {
    fn default() -> Self {
        Self {
            l_tree: 50,
            leaf_size: 32,
            seed: 0,
        }
    }
}

impl RpForestParams {
    pub fn validate(&self, k: usize) -> Result<()> {
        if self.l_tree == 0 {
            return arg_err("l_tree must be at least 1");
        }
        if self.leaf_size < k + 1 {
            return arg_err(format!(
                "leaf_size = {} must be at least k + 1 = {}",
                self.leaf_size,
                k + 1
            ));
        }
        Ok(())
    }

    pub fn candidate_cap(&self, k: usize) -> usize {
        self.l_tree * k
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Split {
        normal: Vec<f32>,
        offset: f32,
        left: usize,
        right: usize,
    },
    Leaf(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RpTree {
    nodes: Vec<Node>,
    leaves: Vec<Vec<u32>>,
    leaf_of: Vec<u32>,
}

impl RpTree {
    pub fn leaves(&self) -> &[Vec<u32>] {
        &self.leaves
    }

    /// Leaf holding dataset point `u`.
    pub fn leaf_of(&self, u: u32) -> &[u32] {
        &self.leaves[self.leaf_of[u as usize] as usize]
    }

    /// Routes an arbitrary vector from the root to a leaf.
    pub fn descend(&self, x: &[f32]) -> &[u32] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf(i) => return &self.leaves[*i],
                Node::Split { normal, offset, left, right } => {
                    at = if dot(normal, x) >= *offset { *right } else { *left };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf(_) => 1,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    fn approx_bytes(&self, d: usize) -> usize {
        let splits = self.nodes.len() - self.leaves.len();
        self.leaf_of.len() * 8 + splits * (d + 1) * 4 + self.nodes.len() * 24
    }
}

/// Splits `ids` by the bisector of two distinct sampled points. Returns
/// `None` when no usable pair turns up.
fn bisector_split(
    data: &Dataset,
    ids: &[u32],
    rng: &mut impl Rng,
) -> Option<(Vec<f32>, f32, Vec<u32>, Vec<u32>)> {
    for _ in 0..SAMPLE_RETRIES {
        let i = rng.random_range(0..ids.len());
        let mut j = rng.random_range(0..ids.len() - 1);
        if j >= i {
            j += 1;
        }
        let (a, b) = (data.point(ids[i]), data.point(ids[j]));
        if a == b {
            continue;
        }
        let normal: Vec<f32> = a.iter().zip(b).map(|(x, y)| y - x).collect();
        let mid: Vec<f32> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
        let offset = dot(&normal, &mid);
        let (right, left): (Vec<u32>, Vec<u32>) =
            ids.iter().partition(|&&u| dot(&normal, data.point(u)) >= offset);
        if right.is_empty() || left.is_empty() {
            continue;
        }
        return Some((normal, offset, left, right));
    }
    None
}

pub fn build_rp_tree(data: &Dataset, leaf_size: usize, seed: u64, tree: usize) -> Result<RpTree> {
    if leaf_size == 0 {
        return arg_err("leaf_size must be positive");
    }
    let mut rng = rng_for(seed, streams::RP_TREE, tree as u64);
    let n = data.len();
    let mut nodes = vec![Node::Leaf(usize::MAX)];
    let mut leaves = Vec::new();
    let mut leaf_of = vec![u32::MAX; n];
    let mut stack: Vec<(usize, Vec<u32>)> = vec![(0, (0..n as u32).collect())];
    while let Some((at, mut ids)) = stack.pop() {
        if ids.len() <= leaf_size {
            for &u in &ids {
                leaf_of[u as usize] = leaves.len() as u32;
            }
            nodes[at] = Node::Leaf(leaves.len());
            leaves.push(ids);
            continue;
        }
        let (normal, offset, left, right) = match bisector_split(data, &ids, &mut rng) {
            Some(split) => split,
            None => {
                // duplicates only: random halves, routed left for new queries
                ids.shuffle(&mut rng);
                let right = ids.split_off(ids.len() / 2);
                (vec![0.0; data.dim()], 1.0, ids, right)
            }
        };
        let (l, r) = (nodes.len(), nodes.len() + 1);
        nodes.push(Node::Leaf(usize::MAX));
        nodes.push(Node::Leaf(usize::MAX));
        nodes[at] = Node::Split { normal, offset, left: l, right: r };
        stack.push((r, right));
        stack.push((l, left));
    }
    Ok(RpTree { nodes, leaves, leaf_of })
}

pub fn rp_forest_knng(
    data: &Dataset,
    k: usize,
    params: RpForestParams,
    counters: &mut Counters,
) -> Result<KnnGraph> {
    let n = data.len();
    check_k(n, k)?;
    params.validate(k)?;
    let trees: Vec<RpTree> = (0..params.l_tree)
        .into_par_iter()
        .map(|t| build_rp_tree(data, params.leaf_size, params.seed, t))
        .collect::<Result<_>>()?;
    let tree_bytes: usize = trees.iter().map(|t| t.approx_bytes(data.dim())).sum();
    counters.note_aux_bytes(tree_bytes as u64);
    let cap = params.candidate_cap(k);

    let (pools, dist): (Vec<NeighborPool>, Vec<u64>) = (0..n as u32)
        .into_par_iter()
        .map_init(
            || vec![false; n],
            |seen, u| {
                let mut local = Counters::new();
                let mut pool = NeighborPool::new(u, k);
                let mut cands: Vec<u32> = Vec::with_capacity(cap);
                for tree in &trees {
                    if cands.len() >= cap {
                        break;
                    }
                    for &v in tree.leaf_of(u) {
                        if v != u && !seen[v as usize] {
                            seen[v as usize] = true;
                            cands.push(v);
                        }
                    }
                }
                for &v in &cands {
                    seen[v as usize] = false;
                    pool.update(v, data.distance(u, v, &mut local));
                }
                (pool, local.total_dist)
            },
        )
        .unzip();
    counters.add_dist(dist.iter().sum());
    KnnGraph::from_pools(data, k, pools, params.seed, counters)
}
