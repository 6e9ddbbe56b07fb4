//! Versioned on-disk model artifacts.

use std::path::Path;

use aerotopic::{FittedModel, ModelKind};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Final LDA topic assignments, flattened document by document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatAssignments {
    pub doc_lengths: Vec<usize>,
    pub topics: Vec<usize>,
}

impl FlatAssignments {
    pub fn from_nested(z: &[Vec<usize>]) -> Self {
        Self {
            doc_lengths: z.iter().map(Vec::len).collect(),
            topics: z.iter().flatten().copied().collect(),
        }
    }

    pub fn to_nested(&self) -> Option<Vec<Vec<usize>>> {
        if self.doc_lengths.iter().sum::<usize>() != self.topics.len() {
            return None;
        }
        let mut rest = self.topics.as_slice();
        Some(
            self.doc_lengths
                .iter()
                .map(|&n| {
                    let (head, tail) = rest.split_at(n);
                    rest = tail;
                    head.to_vec()
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelArtifact {
    pub schema_version: u32,
    pub model_kind: ModelKind,
    pub corpus_fingerprint: String,
    pub config_snapshot: RunConfig,
    pub terms: Vec<String>,
    pub doc_ids: Vec<String>,
    pub payload: FittedModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lda_assignments: Option<FlatAssignments>,
}

/// Hex sha256 of the tokenized corpus file contents.
pub fn fingerprint(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl ModelArtifact {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("artifact serializes");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::parse(&text).map_err(|reason| CliError::Artifact {
            path: path.to_path_buf(),
            reason,
        })
    }

    /// Parses and checks internal consistency; the error names the offending field.
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let raw: serde_json::Value = serde_json::from_str(text).map_err(|e| format!("not JSON: {e}"))?;
        match raw.get("schema_version").and_then(|v| v.as_u64()) {
            Some(v) if v == SCHEMA_VERSION as u64 => {}
            Some(v) => return Err(format!("schema_version: unsupported version {v}")),
            None => return Err("schema_version: missing or not an integer".into()),
        }
        let art: Self = serde_json::from_value(raw).map_err(|e| e.to_string())?;
        art.check()?;
        Ok(art)
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.payload.kind() != self.model_kind {
            return Err(format!(
                "model_kind: header says {} but payload is {}",
                self.model_kind,
                self.payload.kind()
            ));
        }
        let tt = self.payload.topic_term();
        if tt.ncols() != self.terms.len() {
            return Err(format!(
                "terms: {} terms but the topic-term matrix has {} columns",
                self.terms.len(),
                tt.ncols()
            ));
        }
        let df = self.payload.doc_features();
        if df.nrows() != self.doc_ids.len() {
            return Err(format!(
                "doc_ids: {} ids but the document representation has {} rows",
                self.doc_ids.len(),
                df.nrows()
            ));
        }
        if tt.iter().chain(df.iter()).any(|v| !v.is_finite()) {
            return Err("payload: non-finite value".into());
        }
        if self.corpus_fingerprint.len() != 64 || !self.corpus_fingerprint.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err("corpus_fingerprint: expected 64 hex digits".into());
        }
        if let Some(a) = &self.lda_assignments {
            let ok = a.to_nested().is_some() && a.topics.iter().all(|&z| z < tt.nrows());
            if !ok {
                return Err("lda_assignments: inconsistent lengths or topic ids".into());
            }
        }
        Ok(())
    }

    pub fn require_fingerprint(&self, path: &Path, actual: &str) -> Result<()> {
        if self.corpus_fingerprint != actual {
            return Err(CliError::FingerprintMismatch {
                path: path.to_path_buf(),
                expected: self.corpus_fingerprint.clone(),
                actual: actual.to_string(),
            });
        }
        Ok(())
    }
}
