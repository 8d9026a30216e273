//! Batch similarity evaluation. The parallel path is compiled in with the
//! `parallel` feature (default); the sequential path is always available so
//! the two can be benchmarked against each other.

use super::{similarity, LineSequence};

pub fn similarity_batch_sequential(pairs: &[(LineSequence, LineSequence)]) -> Vec<f64> {
    pairs.iter().map(|(a, b)| similarity(a, b).value).collect()
}

/// Scores every pair, in input order.
#[cfg(feature = "parallel")]
pub fn similarity_batch(pairs: &[(LineSequence, LineSequence)]) -> Vec<f64> {
    use rayon::prelude::*;
    pairs
        .par_iter()
        .map(|(a, b)| similarity(a, b).value)
        .collect()
}

/// Scores every pair, in input order.
#[cfg(not(feature = "parallel"))]
pub fn similarity_batch(pairs: &[(LineSequence, LineSequence)]) -> Vec<f64> {
    similarity_batch_sequential(pairs)
}
