//! Independent reference computations and synthetic data for tests.
//!
//! Nothing here calls into the code paths it is used to check.

#![allow(dead_code)]

use aerotopic::{DocTermMatrix, MatrixKind};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Singular values by one-sided (Hestenes) Jacobi rotations, descending.
pub fn jacobi_singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    // work on the orientation with fewer columns
    let mut u = if a.ncols() <= a.nrows() { a.clone() } else { a.transpose() };
    let n = u.ncols();
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: f64 = u.column(p).iter().map(|x| x * x).sum();
                let beta: f64 = u.column(q).iter().map(|x| x * x).sum();
                let gamma: f64 = u.column(p).iter().zip(u.column(q).iter()).map(|(x, y)| x * y).sum();
                if gamma == 0.0 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt());
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..u.nrows() {
                    let up = u[(i, p)];
                    let uq = u[(i, q)];
                    u[(i, p)] = c * up - s * uq;
                    u[(i, q)] = s * up + c * uq;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..n).map(|j| u.column(j).norm()).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// Dense `½‖Vᵀ − W H‖²` with `V` documents × terms.
pub fn dense_nmf_objective(v: &DMatrix<f64>, w: &DMatrix<f64>, h: &DMatrix<f64>) -> f64 {
    let x = v.transpose();
    let mut s = 0.0;
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            let mut r = 0.0;
            for k in 0..w.ncols() {
                r += w[(i, k)] * h[(k, j)];
            }
            s += (x[(i, j)] - r).powi(2);
        }
    }
    0.5 * s
}

pub fn random_nonneg(rng: &mut impl Rng, rows: usize, cols: usize, density: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        if rng.random::<f64>() < density {
            rng.random::<f64>()
        } else {
            0.0
        }
    })
}

/// `rank`-structured matrix plus Gaussian noise of the given scale.
pub fn planted_low_rank(rng: &mut impl Rng, rows: usize, cols: usize, rank: usize, noise: f64) -> DMatrix<f64> {
    let left = DMatrix::from_fn(rows, rank, |_, _| rng.sample::<f64, _>(StandardNormal));
    let right = DMatrix::from_fn(rank, cols, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut m = left * right;
    for v in m.iter_mut() {
        *v += noise * rng.sample::<f64, _>(StandardNormal);
    }
    m
}

/// Random count corpus as a counts matrix.
pub fn random_counts(rng: &mut impl Rng, docs: usize, vocab: usize, max_len: usize) -> DocTermMatrix {
    let mut m = DMatrix::zeros(docs, vocab);
    for d in 0..docs {
        let len = rng.random_range(1..=max_len);
        for _ in 0..len {
            // skewed word choice
            let w = ((rng.random::<f64>().powi(2)) * vocab as f64) as usize;
            m[(d, w.min(vocab - 1))] += 1.0;
        }
    }
    DocTermMatrix::from_dense(&m, MatrixKind::Counts)
}

/// Brute-force pLSA log-likelihood with an explicit triple loop.
pub fn triple_loop_loglik(counts: &DMatrix<f64>, p_d: &[f64], p_z_d: &DMatrix<f64>, p_w_z: &DMatrix<f64>) -> f64 {
    let mut ll = 0.0;
    for d in 0..counts.nrows() {
        for w in 0..counts.ncols() {
            let n = counts[(d, w)];
            if n == 0.0 {
                continue;
            }
            let mut mix = 0.0;
            for z in 0..p_z_d.ncols() {
                mix += p_z_d[(d, z)] * p_w_z[(z, w)];
            }
            ll += n * (p_d[d] * mix).ln();
        }
    }
    ll
}

fn sample_gamma_simplex(rng: &mut impl Rng, alpha: f64, k: usize) -> Vec<f64> {
    let g = Gamma::new(alpha, 1.0).unwrap();
    loop {
        let draws: Vec<f64> = (0..k).map(|_| g.sample(rng)).collect();
        let s: f64 = draws.iter().sum();
        if s > 0.0 {
            return draws.into_iter().map(|x| x / s).collect();
        }
    }
}

fn sample_categorical(rng: &mut impl Rng, p: &[f64]) -> usize {
    let u = rng.random::<f64>();
    let mut acc = 0.0;
    for (i, &x) in p.iter().enumerate() {
        acc += x;
        if u < acc {
            return i;
        }
    }
    p.len() - 1
}

/// Planted LDA corpus: each topic concentrates on its own block of the
/// vocabulary with a small floor elsewhere; document mixtures are
/// Dirichlet(`alpha`).
pub struct PlantedCorpus {
    pub topics: Vec<Vec<f64>>,
    pub docs: Vec<Vec<usize>>,
}

pub fn planted_lda_corpus(seed: u64, n_topics: usize, vocab: usize, n_docs: usize, doc_len: usize, alpha: f64) -> PlantedCorpus {
    let mut rng = rng(seed);
    let block = vocab / n_topics;
    let topics: Vec<Vec<f64>> = (0..n_topics)
        .map(|k| {
            let raw: Vec<f64> = (0..vocab)
                .map(|w| if w / block == k { 0.5 + rng.random::<f64>() } else { 0.02 })
                .collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect()
        })
        .collect();
    let docs = (0..n_docs)
        .map(|_| {
            let theta = sample_gamma_simplex(&mut rng, alpha, n_topics);
            (0..doc_len)
                .map(|_| {
                    let z = sample_categorical(&mut rng, &theta);
                    sample_categorical(&mut rng, &topics[z])
                })
                .collect()
        })
        .collect();
    PlantedCorpus { topics, docs }
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Minimum-cost one-to-one matching of recovered rows to true rows by
/// exhaustive search (exact assignment for small T); returns the mean
/// total-variation distance under the optimal matching.
pub fn matched_mean_tv(recovered: &[Vec<f64>], truth: &[Vec<f64>]) -> f64 {
    let n = truth.len();
    assert_eq!(recovered.len(), n);
    permutations(n)
        .into_iter()
        .map(|perm| (0..n).map(|i| total_variation(&recovered[perm[i]], &truth[i])).sum::<f64>() / n as f64)
        .fold(f64::INFINITY, f64::min)
}

/// Mean silhouette coefficient of `labels` on `points` rows.
pub fn silhouette(points: &DMatrix<f64>, labels: &[usize]) -> f64 {
    let n = points.nrows();
    let k = labels.iter().max().unwrap() + 1;
    let dist = |i: usize, j: usize| (points.row(i) - points.row(j)).norm();
    let mut total = 0.0;
    for i in 0..n {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for j in 0..n {
            if i != j {
                sums[labels[j]] += dist(i, j);
                counts[labels[j]] += 1;
            }
        }
        let own = labels[i];
        if counts[own] == 0 {
            continue;
        }
        let a = sums[own] / counts[own] as f64;
        let b = (0..k)
            .filter(|&c| c != own && counts[c] > 0)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        total += (b - a) / a.max(b);
    }
    total / n as f64
}

/// Gaussian blobs in `dim` dimensions with well-separated centres.
pub fn blobs(seed: u64, n_blobs: usize, per_blob: usize, dim: usize, spread: f64) -> (DMatrix<f64>, Vec<usize>) {
    let mut rng = rng(seed);
    let mut pts = DMatrix::zeros(n_blobs * per_blob, dim);
    let mut labels = Vec::new();
    for b in 0..n_blobs {
        let centre: Vec<f64> = (0..dim).map(|f| if f % n_blobs == b { 10.0 } else { 0.0 }).collect();
        for i in 0..per_blob {
            let r = b * per_blob + i;
            for f in 0..dim {
                pts[(r, f)] = centre[f] + spread * rng.sample::<f64, _>(StandardNormal);
            }
            labels.push(b);
        }
    }
    (pts, labels)
}

pub fn sq(a: f64) -> f64 {
    a * a
}
