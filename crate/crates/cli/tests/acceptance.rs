//! Acceptance suite: one line per criterion, non-zero exit on any failure.

// `ensure!(x <= tol)` must fail on NaN, hence negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use aerotopic::cluster::{fit_kmeans, joint_affinities, project_tsne};
use aerotopic::decompose::{fit_lsa, fit_nmf, fit_nmf_observed};
use aerotopic::evaluate::coherence_cv;
use aerotopic::probmodel::{fit_lda_gibbs, fit_lda_gibbs_observed, fit_plsa, fit_plsa_observed};
use aerotopic::vectorize::{build_vocabulary, count_matrix, tfidf, VocabConfig};
use aerotopic::{
    DocTermMatrix, InitMethod, KmeansConfig, LdaConfig, MatrixKind, ModelKind, NmfConfig, PlsaConfig, TokenizedDoc,
    TopicSummary,
};
use nalgebra::DMatrix;
use rand::Rng;

type Check = fn() -> Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let el = start.elapsed();
    if el > limit {
        return Err(format!("took {:.1?}, limit {:?}", el, limit));
    }
    Ok(())
}

fn nmf_monotonicity() -> Result<String, String> {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let mut rng = support::rng(seed);
        let v = support::random_nonneg(&mut rng, 50, 40, 0.6);
        let m = DocTermMatrix::from_dense(&v, MatrixKind::Counts);
        for t in [2usize, 6] {
            let cfg = NmfConfig {
                t,
                seed,
                max_iter: 500,
                tol: 0.0,
            };
            let mut oracle = Vec::new();
            let model = fit_nmf_observed(&m, &cfg, |_, w, h| oracle.push(support::dense_nmf_objective(&v, w, h)))
                .map_err(|e| e.to_string())?;
            for trace in [&model.objective_trace, &oracle] {
                for (i, w) in trace.windows(2).enumerate() {
                    let rise = (w[1] - w[0]) / w[0].max(f64::MIN_POSITIVE);
                    worst = worst.max(rise);
                    ensure!(rise <= 1e-9, "seed {seed} t={t} iter {i}: {} -> {}", w[0], w[1]);
                }
            }
            let last = *model.objective_trace.last().unwrap();
            let dense = *oracle.last().unwrap();
            ensure!((last - dense).abs() <= 1e-8 * dense.max(1.0), "objective {last} vs dense {dense}");
        }
    }
    within(Duration::from_secs(30), start)?;
    Ok(format!("40 fits, largest relative rise {worst:.2e}"))
}

fn nmf_exact_recovery() -> Result<String, String> {
    let start = Instant::now();
    let mut rng = support::rng(11);
    let u: Vec<f64> = (0..30).map(|_| 0.1 + rng.random::<f64>()).collect();
    let w: Vec<f64> = (0..20).map(|_| 0.1 + rng.random::<f64>()).collect();
    let v = DMatrix::from_fn(30, 20, |r, c| u[r] * w[c]);
    let m = DocTermMatrix::from_dense(&v, MatrixKind::Counts);
    let model = fit_nmf(
        &m,
        &NmfConfig {
            t: 1,
            seed: 3,
            max_iter: 2000,
            tol: 0.0,
        },
    )
    .map_err(|e| e.to_string())?;
    let obj = support::dense_nmf_objective(&v, &model.w, &model.h);
    ensure!(model.final_objective() <= 1e-8, "final objective {:e}", model.final_objective());
    ensure!(obj <= 1e-8, "dense objective {obj:e}");
    within(Duration::from_secs(1), start)?;
    Ok(format!("final objective {:.2e}", model.final_objective()))
}

fn plsa_ascent() -> Result<String, String> {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let mut rng = support::rng(500 + seed);
        let counts = support::random_counts(&mut rng, 100, 50, 40);
        let dense = counts.to_dense();
        let mut oracle = Vec::new();
        let model = fit_plsa_observed(
            &counts,
            &PlsaConfig {
                t: 4,
                seed,
                max_iter: 150,
                tol: 0.0,
            },
            |_, m| oracle.push(support::triple_loop_loglik(&dense, &m.p_d, &m.p_z_given_d, &m.p_w_given_z)),
        )
        .map_err(|e| e.to_string())?;
        for trace in [&model.loglik_trace, &oracle] {
            for (i, w) in trace.windows(2).enumerate() {
                worst = worst.max(w[0] - w[1]);
                ensure!(w[1] >= w[0] - 1e-9, "seed {seed} iter {i}: {} -> {}", w[0], w[1]);
            }
        }
    }
    within(Duration::from_secs(30), start)?;
    Ok(format!("10 corpora, largest drop {worst:.2e}"))
}

fn plsa_single_topic() -> Result<String, String> {
    let mut rng = support::rng(77);
    let counts = support::random_counts(&mut rng, 60, 25, 30);
    let model = fit_plsa(
        &counts,
        &PlsaConfig {
            t: 1,
            seed: 5,
            max_iter: 50,
            tol: 0.0,
        },
    )
    .map_err(|e| e.to_string())?;
    let dense = counts.to_dense();
    let total = dense.sum();
    let mut worst = 0.0f64;
    for w in 0..dense.ncols() {
        let empirical = dense.column(w).sum() / total;
        worst = worst.max((model.p_w_given_z[(0, w)] - empirical).abs());
    }
    ensure!(worst <= 1e-9, "max deviation {worst:e}");
    Ok(format!("max deviation {worst:.2e}"))
}

fn lda_recovery() -> Result<String, String> {
    let start = Instant::now();
    let mut tvs = Vec::new();
    for seed in [1u64, 2, 3] {
        let corpus = support::planted_lda_corpus(seed, 3, 30, 200, 100, 0.1);
        let cfg = LdaConfig {
            t: 3,
            alpha: 0.1,
            seed,
            ..LdaConfig::default()
        };
        let model = fit_lda_gibbs(&corpus.docs, 30, &cfg).map_err(|e| e.to_string())?;
        let rows: Vec<Vec<f64>> = model.phi.row_iter().map(|r| r.iter().copied().collect()).collect();
        let tv = support::matched_mean_tv(&rows, &corpus.topics);
        ensure!(tv < 0.15, "seed {seed}: mean TV {tv}");
        tvs.push(tv);
    }
    within(Duration::from_secs(120), start)?;
    Ok(format!("mean TV per seed {:.4} {:.4} {:.4}", tvs[0], tvs[1], tvs[2]))
}

fn lda_count_tables() -> Result<String, String> {
    let corpus = support::planted_lda_corpus(21, 4, 40, 60, 50, 0.2);
    let cfg = LdaConfig {
        t: 4,
        iterations: 120,
        burn_in: 20,
        ..LdaConfig::default()
    };
    let total: u64 = corpus.docs.iter().map(|d| d.len() as u64).sum();
    let mut failure = None;
    let mut sweeps = 0;
    fit_lda_gibbs_observed(&corpus.docs, 40, &cfg, |sweep, st| {
        sweeps += 1;
        if failure.is_some() {
            return;
        }
        // recount every table from the assignments
        let (t, v) = (st.t, st.n_terms);
        let mut n_dk = vec![0u32; corpus.docs.len() * t];
        let mut n_kw = vec![0u32; t * v];
        let mut n_k = vec![0u32; t];
        for (d, (doc, z)) in corpus.docs.iter().zip(&st.z).enumerate() {
            for (&w, &k) in doc.iter().zip(z) {
                n_dk[d * t + k] += 1;
                n_kw[k * v + w] += 1;
                n_k[k] += 1;
            }
        }
        let doc_ok = (0..corpus.docs.len())
            .all(|d| st.n_dk[d * t..(d + 1) * t].iter().map(|&c| c as usize).sum::<usize>() == corpus.docs[d].len());
        let topic_ok = (0..t).all(|k| st.n_kw[k * v..(k + 1) * v].iter().map(|&c| c as u64).sum::<u64>() == st.n_k[k] as u64);
        let sum_ok = st.n_k.iter().map(|&c| c as u64).sum::<u64>() == total;
        if !(doc_ok && topic_ok && sum_ok && n_dk == st.n_dk && n_kw == st.n_kw && n_k == st.n_k) {
            failure = Some(format!("sweep {sweep}: tables disagree with a recount"));
        } else if let Err(e) = st.check_consistency(&corpus.docs) {
            failure = Some(format!("sweep {sweep}: {e}"));
        }
    })
    .map_err(|e| e.to_string())?;
    if let Some(f) = failure {
        return Err(f);
    }
    ensure!(sweeps == 120, "observed {sweeps} sweeps");
    Ok(format!("{sweeps} sweeps, {total} tokens"))
}

fn lsa_vs_dense() -> Result<String, String> {
    let mut rng = support::rng(8);
    let a = support::planted_low_rank(&mut rng, 60, 40, 5, 0.01);
    let oracle = support::jacobi_singular_values(&a);
    let m = DocTermMatrix::from_dense(&a, MatrixKind::Tfidf);
    let model = fit_lsa(&m, 5, 42).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (i, (s, o)) in model.singular_values.iter().zip(&oracle).enumerate() {
        let rel = (s - o).abs() / o;
        worst = worst.max(rel);
        ensure!(rel <= 1e-3, "sigma_{i}: {s} vs oracle {o}");
    }
    Ok(format!("largest relative error {worst:.2e}"))
}

fn kmeans_checks() -> Result<String, String> {
    for seed in 0..20u64 {
        let mut rng = support::rng(3000 + seed);
        let pts = support::random_nonneg(&mut rng, 90, 4, 1.0);
        for init in [InitMethod::KmeansPlusPlus, InitMethod::Random] {
            let m = fit_kmeans(
                &pts,
                &KmeansConfig {
                    k: 5,
                    seed,
                    max_iter: 300,
                    tol: 0.0,
                    init,
                },
            )
            .map_err(|e| e.to_string())?;
            for w in m.inertia_trace.windows(2) {
                ensure!(w[1] <= w[0], "dataset {seed}: inertia {} -> {}", w[0], w[1]);
            }
        }
    }
    let four = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 0.0, 1.0, 10.0, 0.0, 10.0, 1.0]);
    let m = fit_kmeans(
        &four,
        &KmeansConfig {
            k: 2,
            seed: 42,
            max_iter: 100,
            tol: 0.0,
            init: InitMethod::KmeansPlusPlus,
        },
    )
    .map_err(|e| e.to_string())?;
    let a = &m.assignments;
    ensure!(a[0] == a[1] && a[2] == a[3] && a[0] != a[2], "partition {a:?}");
    ensure!(m.inertia == 1.0, "inertia {}", m.inertia);
    Ok("20 datasets monotone; separable case inertia 1.0".into())
}

fn tsne_checks() -> Result<String, String> {
    let mut sils = Vec::new();
    for seed in [1u64, 2, 3] {
        let (pts, labels) = support::blobs(60 + seed, 3, 20, 8, 1.0);
        let p = joint_affinities(&pts, 10.0).map_err(|e| e.to_string())?;
        ensure!((p.sum() - 1.0).abs() <= 1e-6, "affinities sum to {}", p.sum());
        ensure!((&p - p.transpose()).abs().max() <= 1e-15, "affinities not symmetric");
        let proj = project_tsne(&pts, 10.0, seed, 1000).map_err(|e| e.to_string())?;
        let first = proj.kl_trace.first().unwrap().1;
        let last = proj.kl_trace.last().unwrap().1;
        ensure!(last <= first, "seed {seed}: KL {first} -> {last}");
        let s = support::silhouette(&proj.coords, &labels);
        ensure!(s > 0.0, "seed {seed}: silhouette {s}");
        sils.push(s);
    }
    Ok(format!("silhouettes {:.3} {:.3} {:.3}", sils[0], sils[1], sils[2]))
}

fn doc(tokens: &[&str]) -> TokenizedDoc {
    TokenizedDoc {
        id: String::new(),
        tokens: tokens.iter().map(|s| s.to_string()).collect(),
    }
}

fn topic(words: &[&str]) -> TopicSummary {
    TopicSummary {
        topic_id: 0,
        top_words: words.iter().map(|w| (w.to_string(), 1.0)).collect(),
        model_kind: ModelKind::Lda,
    }
}

fn cv_limits() -> Result<String, String> {
    let together: Vec<TokenizedDoc> = (0..25).map(|_| doc(&["pitot", "static", "blocked", "misc"])).collect();
    let always = coherence_cv(&[topic(&["pitot", "static", "blocked"])], &together, 110).map_err(|e| e.to_string())?;
    ensure!(always.mean_cv >= 0.99, "always co-occurring: {}", always.mean_cv);

    let mut docs = Vec::new();
    for _ in 0..12 {
        docs.push(doc(&["fuel", "tank", "starvation", "selector"]));
        docs.push(doc(&["gear", "retract", "horn"]));
        docs.push(doc(&["rotor", "hover"]));
        docs.push(doc(&["bird", "flock"]));
    }
    let coherent = coherence_cv(&[topic(&["fuel", "tank", "starvation"])], &docs, 110).map_err(|e| e.to_string())?;
    let scrambled = coherence_cv(&[topic(&["fuel", "retract", "hover"])], &docs, 110).map_err(|e| e.to_string())?;
    ensure!(
        scrambled.mean_cv < coherent.mean_cv,
        "scrambled {} vs coherent {}",
        scrambled.mean_cv,
        coherent.mean_cv
    );
    Ok(format!(
        "always {:.4}; coherent {:.4} > scrambled {:.4}",
        always.mean_cv, coherent.mean_cv, scrambled.mean_cv
    ))
}

fn tfidf_oracle() -> Result<String, String> {
    // doc0 = (a:1, b:1), doc1 = (b:2) with N = 2
    let m = DocTermMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 1, 1.0), (1, 1, 2.0)], MatrixKind::Counts, None)
        .map_err(|e| e.to_string())?;
    let t = tfidf(&m).map_err(|e| e.to_string())?.to_dense();
    let idf_a = 1.5f64.ln() + 1.0;
    let norm = (idf_a * idf_a + 1.0).sqrt();
    let want = [(0, 0, idf_a / norm), (0, 1, 1.0 / norm), (1, 0, 0.0), (1, 1, 1.0)];
    for (r, c, v) in want {
        ensure!((t[(r, c)] - v).abs() <= 1e-9, "cell ({r},{c}) = {} want {v}", t[(r, c)]);
    }
    let mut rows = 0;
    for seed in 0..30u64 {
        let mut rng = support::rng(seed);
        let docs: Vec<TokenizedDoc> = (0..40)
            .map(|_| TokenizedDoc {
                id: String::new(),
                tokens: (0..rng.random_range(0..30)).map(|_| format!("w{}", rng.random_range(0..20))).collect(),
            })
            .collect();
        let vocab = build_vocabulary(
            &docs,
            &VocabConfig {
                min_df: 1,
                max_df_ratio: 1.0,
                max_size: None,
            },
        )
        .map_err(|e| e.to_string())?;
        let w = tfidf(&count_matrix(&docs, &vocab).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        for r in 0..w.n_docs() {
            let sq: f64 = w.row(r).map(|(_, v)| v * v).sum();
            if sq > 0.0 {
                rows += 1;
                ensure!((sq.sqrt() - 1.0).abs() <= 1e-9, "seed {seed} row {r}: norm {}", sq.sqrt());
            }
        }
    }
    Ok(format!("hand example exact; {rows} nonzero rows unit norm"))
}

fn run_pipeline(out: &Path) -> Result<(), String> {
    let bin = env!("CARGO_BIN_EXE_aerotopic");
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mini_corpus.jsonl");
    let out_s = out.to_str().unwrap();
    let mut steps: Vec<Vec<&str>> = vec![vec!["preprocess", "--input", corpus.to_str().unwrap()]];
    for m in ["lda", "plsa", "lsa", "nmf"] {
        steps.push(vec!["fit", "--model", m]);
    }
    let lda = out.join("models/lda.json");
    let lda_s = lda.to_str().unwrap().to_string();
    steps.push(vec!["topics"]);
    steps.push(vec!["coherence"]);
    steps.push(vec!["cluster", "--artifact", &lda_s]);
    steps.push(vec!["cluster"]);
    for args in steps {
        let st = Command::new(bin)
            .args(&args)
            .args(["--seed", "42", "--output-dir", out_s])
            .output()
            .map_err(|e| e.to_string())?;
        ensure!(
            st.status.success(),
            "`{}` failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&st.stderr)
        );
    }
    Ok(())
}

fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn end_to_end_determinism() -> Result<String, String> {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("run_a"), tmp.path().join("run_b"));
    run_pipeline(&a)?;
    run_pipeline(&b)?;
    let (sa, sb) = (snapshot(&a), snapshot(&b));
    ensure!(
        sa.keys().collect::<Vec<_>>() == sb.keys().collect::<Vec<_>>(),
        "file sets differ: {:?} vs {:?}",
        sa.keys(),
        sb.keys()
    );
    for (name, bytes) in &sa {
        ensure!(&sb[name] == bytes, "{name} differs between runs");
    }
    for required in ["models/lda.json", "reports/coherence.txt", "reports/projection_lda.csv"] {
        ensure!(sa.contains_key(required), "missing {required}");
    }
    within(Duration::from_secs(120), start)?;
    Ok(format!("{} files identical, {:.1?}", sa.len(), start.elapsed()))
}

fn main() {
    let criteria: [(&str, Check); 12] = [
        ("NMF monotonicity", nmf_monotonicity),
        ("NMF exact recovery", nmf_exact_recovery),
        ("pLSA EM ascent", plsa_ascent),
        ("pLSA single-topic collapse", plsa_single_topic),
        ("LDA synthetic recovery", lda_recovery),
        ("LDA count-table consistency", lda_count_tables),
        ("LSA vs dense oracle", lsa_vs_dense),
        ("K-means inertia and separable case", kmeans_checks),
        ("t-SNE KL, silhouette, affinities", tsne_checks),
        ("C_v limits", cv_limits),
        ("TF-IDF oracle", tfidf_oracle),
        ("End-to-end determinism", end_to_end_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.to_lowercase().contains(&f.to_lowercase())) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let el = start.elapsed();
        match result {
            Ok(detail) => println!("PASS {:>2} {name} ({detail}; {el:.2?})", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
