use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::decompose::{LsaModel, NmfModel};
use crate::error::Error;
use crate::probmodel::{LdaModel, PlsaModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lda,
    Plsa,
    Lsa,
    Nmf,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Lda, ModelKind::Plsa, ModelKind::Lsa, ModelKind::Nmf];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Lda => "lda",
            ModelKind::Plsa => "plsa",
            ModelKind::Lsa => "lsa",
            ModelKind::Nmf => "nmf",
        }
    }

    /// Display label used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Lda => "LDA",
            ModelKind::Plsa => "pLSA",
            ModelKind::Lsa => "LSA",
            ModelKind::Nmf => "NMF",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "lda" => Ok(ModelKind::Lda),
            "plsa" => Ok(ModelKind::Plsa),
            "lsa" => Ok(ModelKind::Lsa),
            "nmf" => Ok(ModelKind::Nmf),
            other => Err(Error::InvalidConfig(format!("unknown model kind `{other}`"))),
        }
    }
}

/// Any of the four fitted topic models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model_kind", rename_all = "lowercase")]
pub enum FittedModel {
    Lda(LdaModel),
    Plsa(PlsaModel),
    Lsa(LsaModel),
    Nmf(NmfModel),
}

impl FittedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            FittedModel::Lda(_) => ModelKind::Lda,
            FittedModel::Plsa(_) => ModelKind::Plsa,
            FittedModel::Lsa(_) => ModelKind::Lsa,
            FittedModel::Nmf(_) => ModelKind::Nmf,
        }
    }

    /// Topics × terms weights.
    pub fn topic_term(&self) -> DMatrix<f64> {
        match self {
            FittedModel::Lda(m) => m.phi.clone(),
            FittedModel::Plsa(m) => m.p_w_given_z.clone(),
            FittedModel::Lsa(m) => m.term_factors.clone(),
            FittedModel::Nmf(m) => m.topic_term(),
        }
    }

    /// Documents × features representation used for clustering.
    pub fn doc_features(&self) -> DMatrix<f64> {
        match self {
            FittedModel::Lda(m) => m.theta.clone(),
            FittedModel::Plsa(m) => m.p_z_given_d.clone(),
            FittedModel::Lsa(m) => m.doc_factors.clone(),
            FittedModel::Nmf(m) => m.doc_topic(),
        }
    }

    pub fn n_topics(&self) -> usize {
        self.topic_term().nrows()
    }
}
