use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use aerotopic::cluster::{fit_kmeans, project_tsne, KmeansConfig};
use aerotopic::corpus::{ingest_jsonl_with, parse_tokenized, write_tokenized};
use aerotopic::decompose::{fit_lsa, fit_nmf};
use aerotopic::evaluate::{all_top_words, coherence_cv, render_coherence_table, TopicCoherence};
use aerotopic::probmodel::{fit_lda_gibbs, fit_plsa};
use aerotopic::vectorize::{build_vocabulary, count_matrix, tfidf};
use aerotopic::{
    DocTermMatrix, FittedModel, LdaConfig, ModelKind, NmfConfig, PlsaConfig, Preprocessor, TokenizedDoc, Vocabulary,
};
use nalgebra::DMatrix;
use serde::Serialize;

use crate::artifact::{fingerprint, FlatAssignments, ModelArtifact, SCHEMA_VERSION};
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::{write_atomic, Layout};

/// Dimensionality of the TF-IDF fallback representation for clustering.
pub const FALLBACK_LSA_DIMS: usize = 50;

/// Preprocessed corpus as written by `preprocess`.
pub struct Prepared {
    pub docs: Vec<TokenizedDoc>,
    pub vocab: Vocabulary,
    pub fingerprint: String,
}

impl Prepared {
    pub fn load(layout: &Layout) -> Result<Self> {
        let corpus_path = layout.corpus();
        let bytes = std::fs::read(&corpus_path).map_err(CliError::io(&corpus_path))?;
        let text = String::from_utf8_lossy(&bytes);
        let docs = parse_tokenized(&text).map_err(CliError::engine(corpus_path.display().to_string()))?;
        let vocab_path = layout.vocab();
        let vtext = std::fs::read_to_string(&vocab_path).map_err(CliError::io(&vocab_path))?;
        let mut terms = Vec::new();
        let mut dfs = Vec::new();
        for (i, line) in vtext.lines().enumerate() {
            let bad = || CliError::Engine {
                context: vocab_path.display().to_string(),
                source: aerotopic::Error::MalformedRecord {
                    line_no: i + 1,
                    reason: "expected `term<TAB>doc_freq`".into(),
                },
            };
            let (t, d) = line.split_once('\t').ok_or_else(bad)?;
            terms.push(t.to_string());
            dfs.push(d.parse::<usize>().map_err(|_| bad())?);
        }
        let vocab = Vocabulary::from_parts(terms, dfs).map_err(CliError::engine(vocab_path.display().to_string()))?;
        Ok(Self {
            docs,
            vocab,
            fingerprint: fingerprint(&bytes),
        })
    }

    pub fn counts(&self) -> Result<DocTermMatrix> {
        count_matrix(&self.docs, &self.vocab).map_err(CliError::engine("building the count matrix"))
    }

    pub fn doc_ids(&self) -> Vec<String> {
        self.docs.iter().map(|d| d.id.clone()).collect()
    }
}

pub fn preprocess(cfg: &RunConfig) -> Result<()> {
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| CliError::Validation("preprocess needs --input (or `input` in the config file)".into()))?;
    if !input.is_file() {
        return Err(CliError::Validation(format!("input {} is not a readable file", input.display())));
    }
    let layout = Layout::new(&cfg.output_dir);
    let raw = ingest_jsonl_with(input, &cfg.ingest_fields()).map_err(CliError::engine("ingest"))?;
    let pre = Preprocessor::new(cfg.preprocess_config()).map_err(CliError::engine("preprocess"))?;
    let docs: Vec<TokenizedDoc> = raw.iter().map(|d| pre.tokenize_doc(d)).collect();
    let vocab = build_vocabulary(&docs, &cfg.vocab_config()).map_err(CliError::engine("vocabulary"))?;
    let counts = count_matrix(&docs, &vocab).map_err(CliError::engine("count matrix"))?;

    let mut corpus = Vec::new();
    write_tokenized(&mut corpus, &docs).map_err(CliError::io(layout.corpus()))?;
    let mut vtext = String::new();
    for (t, df) in vocab.terms().iter().zip(vocab.doc_freq()) {
        let _ = writeln!(vtext, "{t}\t{df}");
    }
    let n_tokens: usize = docs.iter().map(|d| d.tokens.len()).sum();
    let stats = format!(
        "documents {}\ntokens {}\nvocabulary {}\nfingerprint {}\n",
        docs.len(),
        n_tokens,
        vocab.len(),
        fingerprint(&corpus)
    );
    write_atomic(&layout.corpus(), &corpus)?;
    write_atomic(&layout.vocab(), vtext.as_bytes())?;
    write_atomic(&layout.counts(), counts.to_text().as_bytes())?;
    write_atomic(&layout.stats(), stats.as_bytes())?;
    println!(
        "preprocessed {} documents: {} tokens, vocabulary of {} terms",
        docs.len(),
        n_tokens,
        vocab.len()
    );
    Ok(())
}

pub fn fit(cfg: &RunConfig) -> Result<()> {
    let kind = cfg.model_kind()?;
    let layout = Layout::new(&cfg.output_dir);
    let prepared = Prepared::load(&layout)?;
    let counts = prepared.counts()?;
    let max_rank = counts.n_docs().min(counts.n_terms());
    if matches!(kind, ModelKind::Lsa | ModelKind::Nmf) && cfg.topics > max_rank {
        return Err(CliError::Validation(format!(
            "topics = {} exceeds the largest rank {max_rank} of the {} x {} matrix",
            cfg.topics,
            counts.n_docs(),
            counts.n_terms()
        )));
    }
    let seed = cfg.fit_seed();
    let ctx = format!("fitting {kind}");
    let mut lda_assignments = None;
    let (payload, summary) = match kind {
        ModelKind::Lda => {
            let lda_cfg = LdaConfig {
                t: cfg.topics,
                alpha: cfg.alpha,
                beta: cfg.beta,
                seed,
                iterations: cfg.iterations,
                burn_in: cfg.burn_in,
                sample_lag: cfg.sample_lag,
            };
            let encoded = prepared.vocab.encode(&prepared.docs);
            let m = fit_lda_gibbs(&encoded, prepared.vocab.len(), &lda_cfg).map_err(CliError::engine(ctx))?;
            if cfg.save_assignments {
                lda_assignments = Some(FlatAssignments::from_nested(&m.assignments));
            }
            let s = format!(
                "lda: {} topics, {} sweeps, {} samples averaged",
                m.t, cfg.iterations, m.samples
            );
            (FittedModel::Lda(m), s)
        }
        ModelKind::Plsa => {
            let p_cfg = PlsaConfig {
                t: cfg.topics,
                seed,
                max_iter: cfg.max_iter,
                tol: cfg.tol,
            };
            let m = fit_plsa(&counts, &p_cfg).map_err(CliError::engine(ctx))?;
            let ll = m.loglik_trace.last().copied().unwrap_or(f64::NAN);
            let s = format!(
                "plsa: {} topics, {} EM iterations, log-likelihood {:.6}",
                m.p_w_given_z.nrows(),
                m.iterations,
                ll
            );
            (FittedModel::Plsa(m), s)
        }
        ModelKind::Lsa => {
            let x = tfidf(&counts).map_err(CliError::engine("tf-idf"))?;
            let m = fit_lsa(&x, cfg.topics, seed).map_err(CliError::engine(ctx))?;
            let s = format!(
                "lsa: rank {}, leading singular value {:.6}",
                m.t,
                m.singular_values.first().copied().unwrap_or(0.0)
            );
            (FittedModel::Lsa(m), s)
        }
        ModelKind::Nmf => {
            let x = tfidf(&counts).map_err(CliError::engine("tf-idf"))?;
            let n_cfg = NmfConfig {
                t: cfg.topics,
                seed,
                max_iter: cfg.max_iter,
                tol: cfg.tol,
            };
            let m = fit_nmf(&x, &n_cfg).map_err(CliError::engine(ctx))?;
            let s = format!(
                "nmf: {} topics, {} iterations, objective {:.6}",
                m.t,
                m.iterations,
                m.final_objective()
            );
            (FittedModel::Nmf(m), s)
        }
    };
    let art = ModelArtifact {
        schema_version: SCHEMA_VERSION,
        model_kind: kind,
        corpus_fingerprint: prepared.fingerprint.clone(),
        config_snapshot: cfg.clone(),
        terms: prepared.vocab.terms().to_vec(),
        doc_ids: prepared.doc_ids(),
        payload,
        lda_assignments,
    };
    let path = layout.model(kind);
    write_atomic(&path, art.to_json().as_bytes())?;
    println!("{summary} -> {}", path.display());
    Ok(())
}

/// Resolves explicit artifact paths, or every model present under `models/`.
fn resolve_artifacts(layout: &Layout, explicit: &[PathBuf]) -> Result<Vec<PathBuf>> {
    if !explicit.is_empty() {
        return Ok(explicit.to_vec());
    }
    let found: Vec<PathBuf> = ModelKind::ALL
        .iter()
        .map(|&k| layout.model(k))
        .filter(|p| p.is_file())
        .collect();
    if found.is_empty() {
        return Err(CliError::Validation(format!(
            "no artifacts given and none found in {}",
            layout.models_dir().display()
        )));
    }
    Ok(found)
}

#[derive(Serialize)]
struct TopicsJson {
    top_n: usize,
    models: Vec<ModelTopicsJson>,
}

#[derive(Serialize)]
struct ModelTopicsJson {
    model_kind: ModelKind,
    topics: Vec<TopicJson>,
}

#[derive(Serialize)]
struct TopicJson {
    topic_id: usize,
    words: Vec<String>,
    weights: Vec<f64>,
}

pub fn topics(cfg: &RunConfig, artifacts: &[PathBuf]) -> Result<()> {
    let layout = Layout::new(&cfg.output_dir);
    let paths = resolve_artifacts(&layout, artifacts)?;
    let mut table = String::from("Model | Topic | Top words\n");
    let mut out = TopicsJson {
        top_n: cfg.top_n,
        models: Vec::new(),
    };
    for path in &paths {
        let art = ModelArtifact::load(path)?;
        let summaries = all_top_words(&art.payload.topic_term(), &art.terms, cfg.top_n, art.model_kind)
            .map_err(CliError::engine(path.display().to_string()))?;
        let mut m = ModelTopicsJson {
            model_kind: art.model_kind,
            topics: Vec::new(),
        };
        for s in summaries {
            let words: Vec<String> = s.words().map(str::to_string).collect();
            let _ = writeln!(table, "{} | {} | {}", art.model_kind.label(), s.topic_id, words.join(", "));
            m.topics.push(TopicJson {
                topic_id: s.topic_id,
                words,
                weights: s.top_words.iter().map(|(_, w)| *w).collect(),
            });
        }
        out.models.push(m);
    }
    write_atomic(&layout.report("topics.txt"), table.as_bytes())?;
    write_atomic(&layout.report("topics.json"), json_bytes(&out).as_slice())?;
    print!("{table}");
    Ok(())
}

#[derive(Serialize)]
struct CoherenceJson {
    window_size: usize,
    top_n: usize,
    models: Vec<ModelCoherenceJson>,
}

#[derive(Serialize)]
struct ModelCoherenceJson {
    model_kind: ModelKind,
    label: &'static str,
    mean_cv: f64,
    per_topic: Vec<TopicCoherence>,
}

pub fn coherence(cfg: &RunConfig, artifacts: &[PathBuf]) -> Result<()> {
    let layout = Layout::new(&cfg.output_dir);
    let paths = resolve_artifacts(&layout, artifacts)?;
    let prepared = Prepared::load(&layout)?;
    let arts = paths
        .iter()
        .map(|p| {
            let a = ModelArtifact::load(p)?;
            a.require_fingerprint(p, &prepared.fingerprint)?;
            Ok((p, a))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut models = Vec::new();
    for (path, art) in arts {
        let summaries = all_top_words(&art.payload.topic_term(), &art.terms, cfg.top_n, art.model_kind)
            .map_err(CliError::engine(path.display().to_string()))?;
        let report = coherence_cv(&summaries, &prepared.docs, cfg.window_size)
            .map_err(CliError::engine(format!("coherence of {}", path.display())))?;
        models.push(ModelCoherenceJson {
            model_kind: art.model_kind,
            label: art.model_kind.label(),
            mean_cv: report.mean_cv,
            per_topic: report.per_topic,
        });
    }
    models.sort_by(|a, b| b.mean_cv.total_cmp(&a.mean_cv).then(a.model_kind.cmp(&b.model_kind)));
    let rows: Vec<(String, f64)> = models.iter().map(|m| (m.label.to_string(), m.mean_cv)).collect();
    let table = render_coherence_table(&rows);
    let out = CoherenceJson {
        window_size: cfg.window_size,
        top_n: cfg.top_n,
        models,
    };
    write_atomic(&layout.report("coherence.txt"), table.as_bytes())?;
    write_atomic(&layout.report("coherence.json"), json_bytes(&out).as_slice())?;
    print!("{table}");
    Ok(())
}

pub fn cluster(cfg: &RunConfig, artifact: Option<&Path>) -> Result<()> {
    let layout = Layout::new(&cfg.output_dir);
    let prepared = Prepared::load(&layout)?;
    let ids = prepared.doc_ids();
    let (name, features, dim_label): (String, DMatrix<f64>, &str) = match artifact {
        Some(path) => {
            let art = ModelArtifact::load(path)?;
            art.require_fingerprint(path, &prepared.fingerprint)?;
            if art.doc_ids != ids {
                return Err(CliError::Artifact {
                    path: path.to_path_buf(),
                    reason: "doc_ids: order differs from the tokenized corpus".into(),
                });
            }
            (art.model_kind.as_str().to_string(), art.payload.doc_features(), "topic")
        }
        None => {
            let x = tfidf(&prepared.counts()?).map_err(CliError::engine("tf-idf"))?;
            let dims = FALLBACK_LSA_DIMS.min(x.n_docs()).min(x.n_terms());
            let m = fit_lsa(&x, dims, cfg.fit_seed()).map_err(CliError::engine("reducing tf-idf"))?;
            ("tfidf".to_string(), m.doc_factors, "dim")
        }
    };
    let n = features.nrows();
    if cfg.k > n {
        return Err(CliError::Validation(format!("k = {} exceeds the {n} documents", cfg.k)));
    }
    let max_perp = (n as f64 - 1.0) / 3.0;
    if cfg.perplexity >= max_perp {
        return Err(CliError::Validation(format!(
            "perplexity {} must be below (n - 1) / 3 = {max_perp:.3} for n = {n}",
            cfg.perplexity
        )));
    }
    let km = fit_kmeans(
        &features,
        &KmeansConfig {
            k: cfg.k,
            seed: cfg.cluster_seed(),
            max_iter: cfg.cluster_max_iter,
            tol: cfg.cluster_tol,
            init: cfg.init_method()?,
        },
    )
    .map_err(CliError::engine("k-means"))?;
    let proj = project_tsne(&features, cfg.perplexity, cfg.tsne_seed(), cfg.tsne_iterations)
        .map_err(CliError::engine("t-SNE"))?;

    let mut csv = String::from("id,x,y,cluster\n");
    for (i, id) in ids.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{},{:.6},{:.6},{}",
            csv_field(id),
            proj.coords[(i, 0)],
            proj.coords[(i, 1)],
            km.assignments[i]
        );
    }
    let mut sizes = vec![0usize; km.k];
    for &a in &km.assignments {
        sizes[a] += 1;
    }
    let signed = name == "lsa" || name == "tfidf";
    let mut summary = String::from("cluster,size,top_dimensions\n");
    for (c, size) in sizes.iter().enumerate() {
        let mut dims: Vec<(usize, f64)> = km.centroids.row(c).iter().copied().enumerate().collect();
        let key = |v: f64| if signed { v.abs() } else { v };
        dims.sort_by(|a, b| key(b.1).total_cmp(&key(a.1)).then(a.0.cmp(&b.0)));
        let top: Vec<String> = dims
            .iter()
            .take(3)
            .map(|(d, v)| format!("{dim_label}{d}:{v:.6}"))
            .collect();
        let _ = writeln!(summary, "{c},{size},{}", top.join(";"));
    }
    write_atomic(&layout.report(&format!("projection_{name}.csv")), csv.as_bytes())?;
    write_atomic(&layout.report(&format!("clusters_{name}.csv")), summary.as_bytes())?;
    let kl = proj.kl_trace.last().map(|x| x.1).unwrap_or(f64::NAN);
    println!(
        "clustered {n} documents ({name}) into {} clusters: inertia {:.6} after {} iterations, t-SNE KL {:.6}",
        km.k, km.inertia, km.iterations_run, kl
    );
    print!("{summary}");
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s.into_bytes()
}
