//! Shared fixtures for the criterion benchmarks.

use knng::synth;
use knng::Dataset;

/// Clustered Gaussian data used across benchmarks.
pub fn fixture(n: usize, d: usize, seed: u64) -> Dataset {
    synth::clustered_gaussian(n, d, 10, 4.0, seed)
        .expect("valid fixture shape")
        .0
}
