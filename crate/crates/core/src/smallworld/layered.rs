use crate::graph::ProximityGraph;

/// Undirected edge endpoint with its cached squared distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub id: u32,
    pub dist: f32,
}

/// Per-layer adjacency shared by SW (one layer) and HNSW graphs.
///
/// Layer `l` holds every node whose level is at least `l`; the adjacency of
/// a node absent from a layer stays empty.
#[derive(Clone, Debug, PartialEq)]
pub struct LayeredGraph {
    levels: Vec<u32>,
    layers: Vec<Vec<Vec<Edge>>>,
    entry: Option<u32>,
}

impl LayeredGraph {
    pub fn new(n: usize) -> Self {
        Self {
            levels: vec![0; n],
            layers: vec![vec![Vec::new(); n]],
            entry: None,
        }
    }

    pub(crate) fn from_parts(
        levels: Vec<u32>,
        layers: Vec<Vec<Vec<Edge>>>,
        entry: Option<u32>,
    ) -> Self {
        Self {
            levels,
            layers,
            entry,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn entry(&self) -> Option<u32> {
        self.entry
    }

    pub(crate) fn set_entry(&mut self, u: u32) {
        self.entry = Some(u);
    }

    #[inline]
    pub fn level(&self, u: u32) -> u32 {
        self.levels[u as usize]
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub(crate) fn set_level(&mut self, u: u32, level: u32) {
        self.levels[u as usize] = level;
        let n = self.len();
        while self.layers.len() <= level as usize {
            self.layers.push(vec![Vec::new(); n]);
        }
    }

    #[inline]
    pub fn adjacency(&self, layer: usize, u: u32) -> &[Edge] {
        &self.layers[layer][u as usize]
    }

    #[inline]
    pub(crate) fn adjacency_mut(&mut self, layer: usize, u: u32) -> &mut Vec<Edge> {
        &mut self.layers[layer][u as usize]
    }

    /// Adds the undirected edge `a - b` on `layer` unless already present.
    pub(crate) fn link(&mut self, layer: usize, a: u32, b: u32, dist: f32) {
        let adj = &mut self.layers[layer];
        if !adj[a as usize].iter().any(|e| e.id == b) {
            adj[a as usize].push(Edge { id: b, dist });
            adj[b as usize].push(Edge { id: a, dist });
        }
    }

    pub fn layer(&self, layer: usize) -> LayerView<'_> {
        LayerView { graph: self, layer }
    }

    pub fn max_degree(&self, layer: usize) -> usize {
        self.layers[layer].iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Total number of stored adjacency entries (each undirected edge twice).
    pub fn edge_slots(&self) -> usize {
        self.layers.iter().flatten().map(Vec::len).sum()
    }

    /// `v in adj(u)` iff `u in adj(v)` on every layer.
    pub fn is_symmetric(&self) -> bool {
        self.layers.iter().all(|adj| {
            adj.iter().enumerate().all(|(u, edges)| {
                edges
                    .iter()
                    .all(|e| adj[e.id as usize].iter().any(|r| r.id == u as u32))
            })
        })
    }

    /// Every node with an edge on layer `l` has level at least `l`, and edges
    /// only join nodes present on that layer.
    pub fn layers_nested(&self) -> bool {
        self.layers.iter().enumerate().all(|(l, adj)| {
            adj.iter().enumerate().all(|(u, edges)| {
                edges.is_empty()
                    || (self.levels[u] as usize >= l
                        && edges.iter().all(|e| self.levels[e.id as usize] as usize >= l))
            })
        })
    }

    pub fn approx_bytes(&self) -> u64 {
        let edges = self.edge_slots() * std::mem::size_of::<Edge>();
        let lists = self.layers.len() * self.len() * std::mem::size_of::<Vec<Edge>>();
        (edges + lists + self.len() * 4) as u64
    }
}

/// One layer of a [`LayeredGraph`] viewed as a search graph.
#[derive(Clone, Copy)]
pub struct LayerView<'a> {
    graph: &'a LayeredGraph,
    layer: usize,
}

impl ProximityGraph for LayerView<'_> {
    fn num_nodes(&self) -> usize {
        self.graph.len()
    }

    fn neighbors(&self, u: u32) -> impl Iterator<Item = u32> + '_ {
        self.graph.layers[self.layer][u as usize].iter().map(|e| e.id)
    }
}
