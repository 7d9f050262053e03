//! Graph search and incremental proximity-graph builders whose distance
//! evaluations double as initial KNN graphs.

mod hnsw;
mod layered;
mod search;
mod sw;

pub use hnsw::{build_hnsw_knng, hnsw_assign_layer, select_neighbors_diverse, HnswGraph, HnswParams};
pub use layered::{Edge, LayerView, LayeredGraph};
pub use search::{search_on_graph, Searcher, VisitedSet, EXTERNAL_QUERY};
pub use sw::{build_sw_knng, SwGraph, SwParams};
