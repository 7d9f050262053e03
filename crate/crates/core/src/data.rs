//! Dense vector storage and the squared-Euclidean kernel.

use crate::counters::Counters;
use crate::error::{arg_err, Result};

/// Precision used to accumulate squared differences.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Accumulation {
    #[default]
    F32,
    /// Accumulate in f64 and round once; for precision audits.
    F64,
}

/// `n` dense `d`-dimensional vectors, addressed by row index.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    n: usize,
    d: usize,
    values: Vec<f32>,
    accumulation: Accumulation,
}

impl Dataset {
    /// Builds a dataset from a row-major buffer of `n * d` components.
    pub fn new(d: usize, values: Vec<f32>) -> Result<Self> {
        if d == 0 {
            return arg_err("dimensionality must be at least 1");
        }
        if !values.len().is_multiple_of(d) {
            return arg_err(format!(
                "buffer of {} components is not a multiple of d = {d}",
                values.len()
            ));
        }
        let n = values.len() / d;
        if n < 2 {
            return arg_err(format!("dataset needs at least 2 vectors, got {n}"));
        }
        if n > u32::MAX as usize {
            return arg_err("dataset too large for 32-bit ids");
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return arg_err(format!(
                "non-finite component at vector {} dim {}",
                pos / d,
                pos % d
            ));
        }
        Ok(Self {
            n,
            d,
            values,
            accumulation: Accumulation::F32,
        })
    }

    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * d);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != d {
                return arg_err(format!("row {i} has {} components, expected {d}", r.len()));
            }
            values.extend_from_slice(r);
        }
        Self::new(d, values)
    }

    pub fn with_accumulation(mut self, accumulation: Accumulation) -> Self {
        self.accumulation = accumulation;
        self
    }

    pub fn accumulation(&self) -> Accumulation {
        self.accumulation
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn point(&self, id: u32) -> &[f32] {
        let start = id as usize * self.d;
        &self.values[start..start + self.d]
    }

    /// Squared distance between two stored points; counts one evaluation.
    #[inline]
    pub fn distance(&self, a: u32, b: u32, counters: &mut Counters) -> f32 {
        counters.total_dist += 1;
        kernel(self.point(a), self.point(b), self.accumulation)
    }

    /// Squared distance from an external query to a stored point.
    #[inline]
    pub fn distance_to(&self, query: &[f32], b: u32, counters: &mut Counters) -> f32 {
        counters.total_dist += 1;
        kernel(query, self.point(b), self.accumulation)
    }
}

/// Squared Euclidean distance with dimension checking; counts one evaluation.
pub fn squared_distance(a: &[f32], b: &[f32], counters: &mut Counters) -> Result<f32> {
    squared_distance_with(a, b, Accumulation::F32, counters)
}

pub fn squared_distance_with(
    a: &[f32],
    b: &[f32],
    accumulation: Accumulation,
    counters: &mut Counters,
) -> Result<f32> {
    if a.len() != b.len() {
        return arg_err(format!("dimension mismatch: {} vs {}", a.len(), b.len()));
    }
    counters.total_dist += 1;
    Ok(kernel(a, b, accumulation))
}

#[inline]
pub(crate) fn kernel(a: &[f32], b: &[f32], accumulation: Accumulation) -> f32 {
    match accumulation {
        Accumulation::F32 => kernel_f32(a, b),
        Accumulation::F64 => kernel_f64(a, b),
    }
}

const LANES: usize = 8;

#[inline]
fn kernel_f32(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f32; LANES];
    let ca = a.chunks_exact(LANES);
    let cb = b.chunks_exact(LANES);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..LANES {
            let diff = x[l] - y[l];
            acc[l] += diff * diff;
        }
    }
    for (l, (x, y)) in ra.iter().zip(rb).enumerate() {
        let diff = x - y;
        acc[l] += diff * diff;
    }
    let s0 = (acc[0] + acc[4]) + (acc[2] + acc[6]);
    let s1 = (acc[1] + acc[5]) + (acc[3] + acc[7]);
    s0 + s1
}

#[inline]
fn kernel_f64(a: &[f32], b: &[f32]) -> f32 {
    let mut acc = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        let diff = *x as f64 - *y as f64;
        acc += diff * diff;
    }
    acc as f32
}

pub(crate) fn dot(a: &[f32], b: &[f32]) -> f32 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn identity_is_zero() {
        let mut c = Counters::new();
        let a = [1.5f32, -2.0, 3.25];
        assert_eq!(squared_distance(&a, &a, &mut c).unwrap(), 0.0);
        assert_eq!(c.total_dist, 1);
    }

    #[test]
    fn three_four_five() {
        let mut c = Counters::new();
        assert_eq!(squared_distance(&[0.0, 0.0], &[3.0, 4.0], &mut c).unwrap(), 25.0);
    }

    #[test]
    fn dimension_mismatch_is_argument_error() {
        let mut c = Counters::new();
        let err = squared_distance(&[0.0, 0.0], &[1.0], &mut c).unwrap_err();
        assert!(matches!(err, crate::Error::Argument(_)));
        assert_eq!(c.total_dist, 0);
    }

    #[test]
    fn matches_component_loop_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let a: Vec<f32> = (0..16).map(|_| rng.random_range(-10.0..10.0)).collect();
            let b: Vec<f32> = (0..16).map(|_| rng.random_range(-10.0..10.0)).collect();
            let mut oracle = 0.0f64;
            for i in 0..16 {
                oracle += (a[i] as f64 - b[i] as f64).powi(2);
            }
            let mut c = Counters::new();
            for acc in [Accumulation::F32, Accumulation::F64] {
                let got = squared_distance_with(&a, &b, acc, &mut c).unwrap() as f64;
                assert!(((got - oracle) / oracle).abs() < 1e-6, "{got} vs {oracle}");
            }
        }
    }

    #[test]
    fn dataset_rejects_bad_shapes() {
        assert!(Dataset::new(0, vec![]).is_err());
        assert!(Dataset::new(2, vec![1.0, 2.0]).is_err());
        assert!(Dataset::new(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(Dataset::new(1, vec![1.0, f32::NAN]).is_err());
        let ds = Dataset::from_rows(&[[0.0f32, 0.0], [3.0, 4.0]]).unwrap();
        assert_eq!((ds.len(), ds.dim()), (2, 2));
        let mut c = Counters::new();
        assert_eq!(ds.distance(0, 1, &mut c), 25.0);
    }
}
