//! Topic modeling and clustering for incident narratives.
//!
//! The pipeline runs [`corpus`] preprocessing, then [`vectorize`] to build
//! sparse document-term matrices. Those feed four topic models:
//! LSA and NMF in [`decompose`], pLSA and LDA in [`probmodel`]. Results are
//! scored with C_v coherence ([`evaluate`]). Documents are clustered and
//! projected with [`cluster`].

pub mod cluster;
pub mod corpus;
pub mod decompose;
pub mod error;
pub mod evaluate;
pub mod linalg;
pub mod probmodel;
pub mod rng;
pub mod vectorize;

mod model;

pub use cluster::{ClusterModel, InitMethod, KmeansConfig, Projection2D};
pub use corpus::{Document, PreprocessConfig, Preprocessor, TokenizedDoc};
pub use decompose::{LsaModel, NmfConfig, NmfModel};
pub use error::{Error, Result};
pub use evaluate::{CoherenceReport, CooccurrenceIndex, TopicSummary};
pub use model::{FittedModel, ModelKind};
pub use probmodel::{DocTopics, LdaConfig, LdaModel, PlsaConfig, PlsaModel};
pub use vectorize::{DocTermMatrix, MatrixKind, Vocabulary};
