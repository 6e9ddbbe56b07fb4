//! Synthetic fixtures shared by the benchmarks.

use std::collections::BTreeMap;

use aerotopic::{DocTermMatrix, MatrixKind, TokenizedDoc};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Documents of `len` token ids drawn from a skewed distribution over `vocab`.
pub fn token_docs(seed: u64, n_docs: usize, vocab: usize, len: usize) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_docs)
        .map(|_| {
            (0..len)
                .map(|_| ((rng.random::<f64>().powi(2) * vocab as f64) as usize).min(vocab - 1))
                .collect()
        })
        .collect()
}

pub fn tokenized(docs: &[Vec<usize>]) -> Vec<TokenizedDoc> {
    docs.iter()
        .enumerate()
        .map(|(i, d)| TokenizedDoc {
            id: format!("D{i}"),
            tokens: d.iter().map(|w| format!("w{w}")).collect(),
        })
        .collect()
}

pub fn counts(docs: &[Vec<usize>], vocab: usize) -> DocTermMatrix {
    let mut cells = BTreeMap::new();
    for (d, doc) in docs.iter().enumerate() {
        for &w in doc {
            *cells.entry((d, w)).or_insert(0.0) += 1.0;
        }
    }
    let trips = cells.into_iter().map(|((d, w), v)| (d, w, v)).collect();
    DocTermMatrix::from_triplets(docs.len(), vocab, trips, MatrixKind::Counts, None).expect("valid fixture")
}

pub fn points(seed: u64, n: usize, dim: usize) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(n, dim, |r, _| (r % 4) as f64 * 3.0 + rng.random::<f64>())
}
