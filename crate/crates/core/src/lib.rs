//! Two-step k-nearest-neighbor graph construction.
//!
//! An initial graph is built quickly by one of the [`init`] builders
//! (partition-based) or by tracing distances while growing a small-world
//! proximity graph ([`smallworld`]). It is then refined by one of the
//! neighborhood-propagation families in [`nbpg`]. [`oracle`], [`metrics`] and
//! [`hubness`] measure the result; [`harness`] composes whole pipelines.

pub mod counters;
pub mod data;
pub mod error;
pub mod graph;
pub mod harness;
pub mod hubness;
pub mod init;
pub mod io;
pub mod metrics;
pub mod nbpg;
pub mod oracle;
pub mod pool;
pub mod rng;
pub mod smallworld;
pub mod synth;

pub use counters::Counters;
pub use data::{squared_distance, Accumulation, Dataset};
pub use error::{Error, Result};
pub use graph::{KnnGraph, ProximityGraph};
pub use oracle::{exact_knng, ExactKnng};
pub use pool::{Neighbor, NeighborPool};
