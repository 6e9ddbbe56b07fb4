//! Flat key-value run configuration.
//!
//! Every key can appear in the TOML config file and as a `--key` flag;
//! flags win.

use std::path::{Path, PathBuf};

use aerotopic::cluster::InitMethod;
use aerotopic::corpus::{stopword_list, IngestFields};
use aerotopic::vectorize::VocabConfig;
use aerotopic::{ModelKind, PreprocessConfig};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub id_field: String,
    pub text_field: String,
    pub stopwords: String,
    pub min_token_len: usize,
    pub strip_urls: bool,
    pub strip_html: bool,
    pub lemmatize: bool,
    pub min_df: usize,
    pub max_df_ratio: f64,
    /// 0 means unlimited.
    pub max_size: usize,
    pub model: String,
    pub topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub sample_lag: usize,
    pub save_assignments: bool,
    pub k: usize,
    pub init: String,
    pub cluster_max_iter: usize,
    pub cluster_tol: f64,
    pub perplexity: f64,
    pub tsne_iterations: usize,
    pub window_size: usize,
    pub top_n: usize,
    pub seed: u64,
    #[serde(skip_serializing)]
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            id_field: "id".into(),
            text_field: "narrative".into(),
            stopwords: aerotopic::corpus::DEFAULT_STOPWORD_LIST.into(),
            min_token_len: 2,
            strip_urls: true,
            strip_html: true,
            lemmatize: true,
            min_df: 5,
            max_df_ratio: 0.5,
            max_size: 0,
            model: "lda".into(),
            topics: 10,
            alpha: 0.1,
            beta: 0.01,
            max_iter: 200,
            tol: 1e-6,
            iterations: 1000,
            burn_in: 200,
            sample_lag: 10,
            save_assignments: false,
            k: 10,
            init: "kmeans++".into(),
            cluster_max_iter: 300,
            cluster_tol: 1e-6,
            perplexity: 30.0,
            tsne_iterations: 1000,
            window_size: aerotopic::evaluate::DEFAULT_WINDOW,
            top_n: aerotopic::evaluate::DEFAULT_TOP_N,
            seed: 42,
            output_dir: PathBuf::from("out"),
        }
    }
}

/// One optional flag per config key.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    #[arg(long, global = true)]
    pub id_field: Option<String>,
    #[arg(long, global = true)]
    pub text_field: Option<String>,
    #[arg(long, global = true)]
    pub stopwords: Option<String>,
    #[arg(long, global = true)]
    pub min_token_len: Option<usize>,
    #[arg(long, global = true)]
    pub strip_urls: Option<bool>,
    #[arg(long, global = true)]
    pub strip_html: Option<bool>,
    #[arg(long, global = true)]
    pub lemmatize: Option<bool>,
    #[arg(long, global = true)]
    pub min_df: Option<usize>,
    #[arg(long, global = true)]
    pub max_df_ratio: Option<f64>,
    #[arg(long, global = true)]
    pub max_size: Option<usize>,
    #[arg(long, global = true)]
    pub model: Option<String>,
    #[arg(long, global = true)]
    pub topics: Option<usize>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub iterations: Option<usize>,
    #[arg(long, global = true)]
    pub burn_in: Option<usize>,
    #[arg(long, global = true)]
    pub sample_lag: Option<usize>,
    #[arg(long, global = true)]
    pub save_assignments: Option<bool>,
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub init: Option<String>,
    #[arg(long, global = true)]
    pub cluster_max_iter: Option<usize>,
    #[arg(long, global = true)]
    pub cluster_tol: Option<f64>,
    #[arg(long, global = true)]
    pub perplexity: Option<f64>,
    #[arg(long, global = true)]
    pub tsne_iterations: Option<usize>,
    #[arg(long, global = true)]
    pub window_size: Option<usize>,
    #[arg(long, global = true)]
    pub top_n: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
}

macro_rules! apply_overrides {
    ($cfg:expr, $ov:expr, $($field:ident),* $(,)?) => {
        $( if let Some(v) = $ov.$field.clone() { $cfg.$field = v; } )*
    };
}

impl RunConfig {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?;
                Self::parse(&text).map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?
            }
            None => Self::default(),
        };
        apply_overrides!(
            cfg,
            overrides,
            id_field,
            text_field,
            stopwords,
            min_token_len,
            strip_urls,
            strip_html,
            lemmatize,
            min_df,
            max_df_ratio,
            max_size,
            model,
            topics,
            alpha,
            beta,
            max_iter,
            tol,
            iterations,
            burn_in,
            sample_lag,
            save_assignments,
            k,
            init,
            cluster_max_iter,
            cluster_tol,
            perplexity,
            tsne_iterations,
            window_size,
            top_n,
            seed,
            output_dir,
        );
        if overrides.input.is_some() {
            cfg.input = overrides.input.clone();
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| e.to_string())?;
        if let Some((key, _)) = table.iter().find(|(_, v)| v.is_table() || v.is_array()) {
            return Err(format!("key `{key}`: the config file must be flat key = value pairs"));
        }
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn preprocess_config(&self) -> PreprocessConfig {
        PreprocessConfig {
            stopword_list_id: self.stopwords.clone(),
            min_token_len: self.min_token_len,
            strip_urls: self.strip_urls,
            strip_html: self.strip_html,
            lemmatize: self.lemmatize,
        }
    }

    pub fn ingest_fields(&self) -> IngestFields {
        IngestFields {
            id: self.id_field.clone(),
            text: self.text_field.clone(),
            ..IngestFields::default()
        }
    }

    pub fn vocab_config(&self) -> VocabConfig {
        VocabConfig {
            min_df: self.min_df,
            max_df_ratio: self.max_df_ratio,
            max_size: (self.max_size > 0).then_some(self.max_size),
        }
    }

    pub fn model_kind(&self) -> Result<ModelKind> {
        self.model
            .parse()
            .map_err(|_| CliError::Validation(format!("unknown model kind `{}`", self.model)))
    }

    pub fn init_method(&self) -> Result<InitMethod> {
        match self.init.as_str() {
            "kmeans++" | "kmeanspp" => Ok(InitMethod::KmeansPlusPlus),
            "random" => Ok(InitMethod::Random),
            other => Err(CliError::Validation(format!("unknown init `{other}` (kmeans++ or random)"))),
        }
    }

    pub fn fit_seed(&self) -> u64 {
        self.seed
    }

    pub fn cluster_seed(&self) -> u64 {
        self.seed.wrapping_add(1)
    }

    pub fn tsne_seed(&self) -> u64 {
        self.seed.wrapping_add(2)
    }

    /// Checks every field against the preconditions of the operation it feeds.
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(CliError::Validation(m));
        if self.min_token_len < 1 {
            return fail("min-token-len must be >= 1".into());
        }
        if stopword_list(&self.stopwords).is_err() {
            return fail(format!("unknown stopword list `{}`", self.stopwords));
        }
        if self.id_field.is_empty() || self.text_field.is_empty() {
            return fail("id-field and text-field must be non-empty".into());
        }
        self.vocab_config()
            .validate()
            .map_err(|e| CliError::Validation(e.to_string()))?;
        self.model_kind()?;
        self.init_method()?;
        if self.topics < 1 {
            return fail("topics must be >= 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) || !(self.beta > 0.0 && self.beta.is_finite()) {
            return fail("alpha and beta must be positive".into());
        }
        if self.iterations <= self.burn_in {
            return fail("iterations must exceed burn-in".into());
        }
        if self.sample_lag < 1 {
            return fail("sample-lag must be >= 1".into());
        }
        if self.max_iter < 1 || self.cluster_max_iter < 1 || self.tsne_iterations < 1 {
            return fail("iteration counts must be >= 1".into());
        }
        if self.tol.is_nan() || self.tol < 0.0 || self.cluster_tol.is_nan() || self.cluster_tol < 0.0 {
            return fail("tolerances must be >= 0".into());
        }
        if self.k < 1 {
            return fail("k must be >= 1".into());
        }
        if !(self.perplexity > 1.0 && self.perplexity.is_finite()) {
            return fail("perplexity must be > 1".into());
        }
        if self.window_size < 1 || self.top_n < 2 {
            return fail("window-size must be >= 1 and top-n >= 2".into());
        }
        Ok(())
    }
}
