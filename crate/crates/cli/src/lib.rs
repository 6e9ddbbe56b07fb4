//! Command-line front end: preprocess a narrative corpus, fit topic models,
//! report top words and coherence, and cluster documents.

pub mod artifact;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::RunConfig;
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "aerotopic", version, about = "Topic models and document clustering for incident narratives")]
pub struct Cli {
    /// Flat TOML file of `key = value` settings; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: config::Overrides,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ingest JSONL records, tokenize, and build the vocabulary.
    Preprocess,
    /// Fit the model chosen by `--model` on the preprocessed corpus.
    Fit,
    /// Print and save the top words of each topic.
    Topics {
        #[arg(long = "artifact")]
        artifacts: Vec<PathBuf>,
    },
    /// Score topics with C_v coherence.
    Coherence {
        #[arg(long = "artifact")]
        artifacts: Vec<PathBuf>,
    },
    /// K-means on document representations plus a 2-D t-SNE projection.
    Cluster {
        /// Model whose document-topic rows are clustered; TF-IDF reduced by LSA when absent.
        #[arg(long)]
        artifact: Option<PathBuf>,
    },
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = RunConfig::load(cli.config.as_deref(), &cli.overrides)?;
    cfg.validate()?;
    log::info!("output directory {}", cfg.output_dir.display());
    match &cli.command {
        Command::Preprocess => commands::preprocess(&cfg),
        Command::Fit => commands::fit(&cfg),
        Command::Topics { artifacts } => commands::topics(&cfg, artifacts),
        Command::Coherence { artifacts } => commands::coherence(&cfg, artifacts),
        Command::Cluster { artifact } => commands::cluster(&cfg, artifact.as_deref()),
    }
}
