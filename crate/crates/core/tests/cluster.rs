mod support;

use aerotopic::cluster::{
    compute_inertia, conditional_affinities, fit_kmeans, joint_affinities, kmeans_pp_init, project_tsne,
};
use aerotopic::{InitMethod, KmeansConfig};
use nalgebra::DMatrix;

fn kcfg(k: usize, seed: u64, init: InitMethod) -> KmeansConfig {
    KmeansConfig {
        k,
        seed,
        max_iter: 300,
        tol: 0.0,
        init,
    }
}

#[test]
fn pp_seeding_picks_one_centroid_per_blob() {
    let (pts, _) = support::blobs(3, 2, 10, 2, 0.5);
    let mut hits = 0;
    for seed in 0..200 {
        let c = kmeans_pp_init(&pts, 2, seed).unwrap();
        // blob 0 centres at x=10, blob 1 at y=10
        let side = |r: usize| c[(r, 0)] > c[(r, 1)];
        if side(0) != side(1) {
            hits += 1;
        }
    }
    assert!(hits as f64 / 200.0 >= 0.95, "{hits}/200");
}

#[test]
fn single_centroid_is_a_data_point_and_deterministic() {
    let (pts, _) = support::blobs(1, 2, 5, 3, 1.0);
    let a = kmeans_pp_init(&pts, 1, 4).unwrap();
    assert_eq!(a, kmeans_pp_init(&pts, 1, 4).unwrap());
    assert!(pts.row_iter().any(|r| r == a.row(0)));
}

#[test]
fn inertia_non_increasing_and_recomputable() {
    for seed in 0..20u64 {
        let mut rng = support::rng(seed);
        let pts = support::random_nonneg(&mut rng, 80, 5, 1.0);
        for init in [InitMethod::KmeansPlusPlus, InitMethod::Random] {
            let m = fit_kmeans(&pts, &kcfg(6, seed, init)).unwrap();
            for w in m.inertia_trace.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-9), "seed {seed}: {} -> {}", w[0], w[1]);
            }
            let brute: f64 = (0..pts.nrows())
                .map(|i| (pts.row(i) - m.centroids.row(m.assignments[i])).norm_squared())
                .sum();
            assert!((brute - m.inertia).abs() <= 1e-6 * brute.max(1e-12));
            assert!((compute_inertia(&pts, &m.centroids, &m.assignments) - m.inertia).abs() < 1e-12);
            assert!(m.assignments.iter().all(|&a| a < 6));
            assert!(m.centroids.iter().all(|v| !v.is_nan()));
        }
    }
}

#[test]
fn kmeans_deterministic() {
    let (pts, _) = support::blobs(8, 3, 12, 4, 1.0);
    let a = fit_kmeans(&pts, &kcfg(3, 1, InitMethod::KmeansPlusPlus)).unwrap();
    let b = fit_kmeans(&pts, &kcfg(3, 1, InitMethod::KmeansPlusPlus)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn affinity_matrix_properties() {
    let (pts, _) = support::blobs(2, 3, 15, 10, 1.0);
    let p = joint_affinities(&pts, 10.0).unwrap();
    assert!((p.sum() - 1.0).abs() < 1e-6);
    for i in 0..p.nrows() {
        assert_eq!(p[(i, i)], 0.0);
        for j in 0..p.ncols() {
            assert!(p[(i, j)] >= 0.0);
            assert!((p[(i, j)] - p[(j, i)]).abs() < 1e-15);
        }
    }
}

#[test]
fn duplicated_axes_leave_affinities_unchanged() {
    let (pts, _) = support::blobs(6, 3, 15, 10, 1.0);
    let doubled = DMatrix::from_fn(pts.nrows(), 2 * pts.ncols(), |r, c| pts[(r, c % pts.ncols())]);
    let a = conditional_affinities(&pts, 10.0).unwrap();
    let b = conditional_affinities(&doubled, 10.0).unwrap();
    assert!((a - b).abs().max() < 1e-9);
}

#[test]
fn tsne_separates_blobs_and_lowers_kl() {
    for seed in [1u64, 2, 3] {
        let (pts, labels) = support::blobs(40 + seed, 3, 15, 10, 1.0);
        let proj = project_tsne(&pts, 10.0, seed, 1000).unwrap();
        let first = proj.kl_trace.first().unwrap().1;
        let last = proj.kl_trace.last().unwrap().1;
        assert!(last <= first, "seed {seed}: {first} -> {last}");
        assert!(proj.coords.iter().all(|v| v.is_finite()));
        let s = support::silhouette(&proj.coords, &labels);
        assert!(s > 0.0, "seed {seed}: silhouette {s}");
    }
}
