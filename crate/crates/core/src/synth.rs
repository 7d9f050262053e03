//! Seeded synthetic datasets for experiments and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::Dataset;
use crate::error::{arg_err, Result};

fn check(n: usize, d: usize) -> Result<()> {
    if n < 2 || d == 0 {
        return arg_err(format!("synthetic data needs n >= 2 and d >= 1, got n = {n}, d = {d}"));
    }
    Ok(())
}

/// Uniform samples from the unit hypercube `[0, 1]^d`.
pub fn uniform_hypercube(n: usize, d: usize, seed: u64) -> Result<Dataset> {
    check(n, d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n * d).map(|_| rng.random::<f32>()).collect();
    Dataset::new(d, values)
}

/// Isotropic standard Gaussian samples.
pub fn gaussian(n: usize, d: usize, seed: u64) -> Result<Dataset> {
    check(n, d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n * d)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    Dataset::new(d, values)
}

/// Mixture of `clusters` Gaussian blobs with centers drawn from
/// `N(0, spread^2 I)` and unit within-cluster variance. Returns the data and
/// each point's cluster label.
pub fn clustered_gaussian(
    n: usize,
    d: usize,
    clusters: usize,
    spread: f32,
    seed: u64,
) -> Result<(Dataset, Vec<u32>)> {
    check(n, d)?;
    if clusters == 0 {
        return arg_err("need at least one cluster");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f32>> = (0..clusters)
        .map(|_| {
            (0..d)
                .map(|_| {
                    let z: f32 = StandardNormal.sample(&mut rng);
                    spread * z
                })
                .collect()
        })
        .collect();
    let mut values = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let c = rng.random_range(0..clusters);
        labels.push(c as u32);
        for x in &centers[c] {
            let z: f32 = StandardNormal.sample(&mut rng);
            values.push(x + z);
        }
    }
    Ok((Dataset::new(d, values)?, labels))
}
