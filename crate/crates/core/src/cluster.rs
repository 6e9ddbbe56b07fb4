//! K-means document clustering and exact t-SNE projection.

use nalgebra::DMatrix;
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{gaussian, row_major};
use crate::rng::seeded;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InitMethod {
    /// D²-weighted seeding.
    #[default]
    KmeansPlusPlus,
    /// K distinct points chosen uniformly.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KmeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
    pub init: InitMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    #[serde(with = "row_major")]
    pub centroids: DMatrix<f64>,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    pub iterations_run: usize,
    /// Inertia after each Lloyd iteration.
    pub inertia_trace: Vec<f64>,
}

fn point_sq_dist(points: &DMatrix<f64>, i: usize, centroids: &DMatrix<f64>, c: usize) -> f64 {
    (0..points.ncols())
        .map(|f| {
            let d = points[(i, f)] - centroids[(c, f)];
            d * d
        })
        .sum()
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::TooManyClusters { k, n });
    }
    Ok(())
}

/// k-means++ seeding: the first centroid is uniform, each later one is
/// drawn with probability proportional to squared distance to the nearest
/// chosen centroid.
pub fn kmeans_pp_init(points: &DMatrix<f64>, k: usize, seed: u64) -> Result<DMatrix<f64>> {
    let n = points.nrows();
    check_k(n, k)?;
    let mut rng = seeded(seed);
    let mut chosen = vec![rng.random_range(0..n)];
    let mut nearest: Vec<f64> = (0..n)
        .map(|i| point_sq_dist(points, i, points, chosen[0]))
        .collect();
    while chosen.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in nearest.iter().enumerate() {
                acc += d;
                if d > 0.0 && u < acc {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave u at the top of the range
            pick.unwrap_or_else(|| nearest.iter().rposition(|&d| d > 0.0).unwrap())
        } else {
            // every remaining point coincides with a centroid
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(point_sq_dist(points, i, points, next));
        }
    }
    Ok(gather_rows(points, &chosen))
}

pub fn random_init(points: &DMatrix<f64>, k: usize, seed: u64) -> Result<DMatrix<f64>> {
    let n = points.nrows();
    check_k(n, k)?;
    let mut rng = seeded(seed);
    let idx = sample_indices(&mut rng, n, k).into_vec();
    Ok(gather_rows(points, &idx))
}

fn gather_rows(points: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), points.ncols(), |r, c| points[(rows[r], c)])
}

/// Lloyd iterations; ties go to the lowest cluster id and an emptied
/// cluster is re-seeded with the point farthest from its centroid.
pub fn fit_kmeans(points: &DMatrix<f64>, cfg: &KmeansConfig) -> Result<ClusterModel> {
    let n = points.nrows();
    check_k(n, cfg.k)?;
    if cfg.max_iter < 1 {
        return Err(Error::InvalidConfig("k-means max_iter must be >= 1".into()));
    }
    let k = cfg.k;
    let mut centroids = match cfg.init {
        InitMethod::KmeansPlusPlus => kmeans_pp_init(points, k, cfg.seed)?,
        InitMethod::Random => random_init(points, k, cfg.seed)?,
    };
    let mut assignments = vec![usize::MAX; n];
    let mut trace: Vec<f64> = Vec::new();
    let mut iterations_run = 0;

    while iterations_run < cfg.max_iter {
        let mut changed = false;
        let mut dist = vec![0.0; n];
        for i in 0..n {
            let (best, d) = (0..k)
                .map(|c| (c, point_sq_dist(points, i, &centroids, c)))
                .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
            if assignments[i] != best {
                assignments[i] = best;
                changed = true;
            }
            dist[i] = d;
        }
        changed |= reseed_empty(&mut assignments, &mut dist, k);
        centroids = cluster_means(points, &assignments, k);
        iterations_run += 1;
        let inertia = compute_inertia(points, &centroids, &assignments);
        let prev = trace.last().copied();
        trace.push(inertia);
        if !changed {
            break;
        }
        if let Some(prev) = prev {
            if prev <= 0.0 || (prev - inertia) < cfg.tol * prev {
                break;
            }
        }
    }
    let inertia = *trace.last().unwrap();
    Ok(ClusterModel {
        k,
        centroids,
        assignments,
        inertia,
        iterations_run,
        inertia_trace: trace,
    })
}

/// Moves the farthest point (from a cluster with at least two members)
/// into each empty cluster. Returns whether anything moved.
fn reseed_empty(assignments: &mut [usize], dist: &mut [f64], k: usize) -> bool {
    let mut moved = false;
    loop {
        let mut sizes = vec![0usize; k];
        for &a in assignments.iter() {
            sizes[a] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return moved;
        };
        let donor = (0..assignments.len())
            .filter(|&i| sizes[assignments[i]] > 1)
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if dist[b] >= dist[i] => Some(b),
                _ => Some(i),
            })
            .expect("k <= n guarantees a cluster with two members");
        assignments[donor] = empty;
        dist[donor] = 0.0;
        moved = true;
    }
}

fn cluster_means(points: &DMatrix<f64>, assignments: &[usize], k: usize) -> DMatrix<f64> {
    let f = points.ncols();
    let mut sums = DMatrix::zeros(k, f);
    let mut sizes = vec![0usize; k];
    for (i, &a) in assignments.iter().enumerate() {
        sizes[a] += 1;
        for c in 0..f {
            sums[(a, c)] += points[(i, c)];
        }
    }
    for (a, &s) in sizes.iter().enumerate() {
        for c in 0..f {
            sums[(a, c)] /= s as f64;
        }
    }
    sums
}

pub fn compute_inertia(points: &DMatrix<f64>, centroids: &DMatrix<f64>, assignments: &[usize]) -> f64 {
    assignments
        .iter()
        .enumerate()
        .map(|(i, &a)| point_sq_dist(points, i, centroids, a))
        .sum()
}

pub const TSNE_LEARNING_RATE: f64 = 200.0;
pub const TSNE_EXAGGERATION: f64 = 12.0;
pub const TSNE_EXAGGERATION_STEPS: usize = 250;
pub const TSNE_INITIAL_MOMENTUM: f64 = 0.5;
pub const TSNE_FINAL_MOMENTUM: f64 = 0.8;
pub const TSNE_KL_EVERY: usize = 50;
pub const TSNE_INIT_STD: f64 = 1e-4;
const ENTROPY_TOL: f64 = 1e-5;
const MAX_BISECTION_STEPS: usize = 50;
const MIN_GAIN: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection2D {
    #[serde(with = "row_major")]
    pub coords: DMatrix<f64>,
    /// `(step, KL)` pairs: step 0, every 50 steps, and the final step.
    pub kl_trace: Vec<(usize, f64)>,
    pub perplexity: f64,
}

fn pairwise_sq_dists(points: &DMatrix<f64>) -> DMatrix<f64> {
    let n = points.nrows();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = point_sq_dist(points, i, points, j);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

fn check_perplexity(n: usize, perplexity: f64) -> Result<()> {
    let max = (n as f64 - 1.0) / 3.0;
    if n < 4 || !(perplexity > 1.0 && perplexity < max) {
        return Err(Error::PerplexityOutOfRange { perplexity, max, n });
    }
    Ok(())
}

/// Row-conditional affinities `P(j|i)` with per-point bandwidths found by
/// bisection so that each row's entropy equals `ln(perplexity)`.
///
/// Distances in each row are divided by that row's mean off-diagonal
/// distance before the search, which makes the result invariant to a
/// uniform rescaling of the inputs.
pub fn conditional_affinities(points: &DMatrix<f64>, perplexity: f64) -> Result<DMatrix<f64>> {
    let n = points.nrows();
    check_perplexity(n, perplexity)?;
    let dist = pairwise_sq_dists(points);
    let target = perplexity.ln();
    let mut p = DMatrix::zeros(n, n);
    let mut row = vec![0.0; n];
    for i in 0..n {
        let mean = (0..n).filter(|&j| j != i).map(|j| dist[(i, j)]).sum::<f64>() / (n - 1) as f64;
        let scale = if mean > 0.0 { mean } else { 1.0 };
        let d: Vec<f64> = (0..n).map(|j| dist[(i, j)] / scale).collect();
        let (mut beta, mut lo, mut hi) = (1.0, f64::NEG_INFINITY, f64::INFINITY);
        for _ in 0..MAX_BISECTION_STEPS {
            let entropy = row_entropy(&d, i, beta, &mut row);
            let diff = entropy - target;
            if diff.abs() < ENTROPY_TOL {
                break;
            }
            if diff > 0.0 {
                lo = beta;
                beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = if lo.is_finite() { (beta + lo) / 2.0 } else { beta / 2.0 };
            }
        }
        row_entropy(&d, i, beta, &mut row);
        for j in 0..n {
            p[(i, j)] = row[j];
        }
    }
    Ok(p)
}

/// Fills `row` with the normalized Gaussian affinities and returns their
/// entropy in nats.
fn row_entropy(d: &[f64], i: usize, beta: f64, row: &mut [f64]) -> f64 {
    let min = d
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &v)| v)
        .fold(f64::INFINITY, f64::min);
    let mut sum = 0.0;
    for (j, r) in row.iter_mut().enumerate() {
        *r = if j == i { 0.0 } else { (-beta * (d[j] - min)).exp() };
        sum += *r;
    }
    let mut h = 0.0;
    for r in row.iter_mut() {
        *r /= sum;
        if *r > 0.0 {
            h -= *r * r.ln();
        }
    }
    h
}

/// Symmetrized joint affinities `(P(j|i) + P(i|j)) / 2n`.
pub fn joint_affinities(points: &DMatrix<f64>, perplexity: f64) -> Result<DMatrix<f64>> {
    let cond = conditional_affinities(points, perplexity)?;
    let n = cond.nrows() as f64;
    Ok((&cond + cond.transpose()) / (2.0 * n))
}

fn kl_divergence(p: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    let n = y.nrows();
    let mut num = DMatrix::zeros(n, n);
    let mut z = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 1.0 / (1.0 + point_sq_dist(y, i, y, j));
            num[(i, j)] = v;
            num[(j, i)] = v;
            z += 2.0 * v;
        }
    }
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            let pij = p[(i, j)];
            if i != j && pij > 0.0 {
                let q = (num[(i, j)] / z).max(f64::MIN_POSITIVE);
                kl += pij * (pij / q).ln();
            }
        }
    }
    kl
}

/// Exact all-pairs t-SNE to two dimensions.
pub fn project_tsne(points: &DMatrix<f64>, perplexity: f64, seed: u64, iterations: usize) -> Result<Projection2D> {
    let p = joint_affinities(points, perplexity)?;
    let n = points.nrows();
    let mut rng = seeded(seed);
    let mut y = gaussian(&mut rng, n, 2) * TSNE_INIT_STD;
    let mut velocity = DMatrix::<f64>::zeros(n, 2);
    let mut gains = DMatrix::<f64>::from_element(n, 2, 1.0);
    let mut kl_trace = vec![(0, kl_divergence(&p, &y))];
    let mut num = DMatrix::<f64>::zeros(n, n);
    let mut grad = DMatrix::<f64>::zeros(n, 2);

    for step in 1..=iterations {
        let exaggeration = if step <= TSNE_EXAGGERATION_STEPS { TSNE_EXAGGERATION } else { 1.0 };
        let momentum = if step <= TSNE_EXAGGERATION_STEPS {
            TSNE_INITIAL_MOMENTUM
        } else {
            TSNE_FINAL_MOMENTUM
        };
        let mut z = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 1.0 / (1.0 + point_sq_dist(&y, i, &y, j));
                num[(i, j)] = v;
                num[(j, i)] = v;
                z += 2.0 * v;
            }
        }
        grad.fill(0.0);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = (exaggeration * p[(i, j)] - num[(i, j)] / z) * num[(i, j)];
                for c in 0..2 {
                    grad[(i, c)] += 4.0 * w * (y[(i, c)] - y[(j, c)]);
                }
            }
        }
        for i in 0..n {
            for c in 0..2 {
                let g = grad[(i, c)];
                let v = velocity[(i, c)];
                // delta-bar-delta gains
                gains[(i, c)] = if (g > 0.0) != (v > 0.0) {
                    gains[(i, c)] + 0.2
                } else {
                    (gains[(i, c)] * 0.8).max(MIN_GAIN)
                };
                velocity[(i, c)] = momentum * v - TSNE_LEARNING_RATE * gains[(i, c)] * g;
                y[(i, c)] += velocity[(i, c)];
            }
        }
        // recentre
        for c in 0..2 {
            let mean = y.column(c).mean();
            y.column_mut(c).add_scalar_mut(-mean);
        }
        if step % TSNE_KL_EVERY == 0 || step == iterations {
            kl_trace.push((step, kl_divergence(&p, &y)));
        }
    }
    Ok(Projection2D {
        coords: y,
        kl_trace,
        perplexity,
    })
}
