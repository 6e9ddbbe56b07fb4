//! Vocabulary construction and sparse document-term matrices.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::corpus::TokenizedDoc;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_freq: Vec<usize>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds from terms and their document frequencies; terms must be unique.
    pub fn from_parts(terms: Vec<String>, doc_freq: Vec<usize>) -> Result<Self> {
        if terms.len() != doc_freq.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} terms but {} document frequencies",
                terms.len(),
                doc_freq.len()
            )));
        }
        let mut index = HashMap::with_capacity(terms.len());
        for (i, t) in terms.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::InvalidConfig(format!("duplicate vocabulary term `{t}`")));
            }
        }
        Ok(Self {
            terms,
            doc_freq,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_freq(&self) -> &[usize] {
        &self.doc_freq
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, id: usize) -> &str {
        &self.terms[id]
    }

    /// Maps each document to in-vocabulary term ids, dropping OOV tokens.
    pub fn encode(&self, docs: &[TokenizedDoc]) -> Vec<Vec<usize>> {
        docs.iter()
            .map(|d| d.tokens.iter().filter_map(|t| self.id(t)).collect())
            .collect()
    }
}

/// Vocabulary pruning thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VocabConfig {
    pub min_df: usize,
    pub max_df_ratio: f64,
    pub max_size: Option<usize>,
}

impl Default for VocabConfig {
    fn default() -> Self {
        Self {
            min_df: 5,
            max_df_ratio: 0.5,
            max_size: None,
        }
    }
}

impl VocabConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_df < 1 {
            return Err(Error::InvalidConfig("min_df must be >= 1".into()));
        }
        if !(self.max_df_ratio > 0.0 && self.max_df_ratio <= 1.0) {
            return Err(Error::InvalidConfig("max_df_ratio must lie in (0, 1]".into()));
        }
        if self.max_size == Some(0) {
            return Err(Error::InvalidConfig("max_size must be positive".into()));
        }
        Ok(())
    }
}

pub fn build_vocabulary(docs: &[TokenizedDoc], cfg: &VocabConfig) -> Result<Vocabulary> {
    cfg.validate()?;
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in docs {
        let mut distinct: Vec<&str> = doc.tokens.iter().map(String::as_str).collect();
        distinct.sort_unstable();
        distinct.dedup();
        for t in distinct {
            *df.entry(t).or_default() += 1;
        }
    }
    let max_df = cfg.max_df_ratio * docs.len() as f64;
    let mut kept: Vec<(&str, usize)> = df
        .into_iter()
        .filter(|&(_, f)| f >= cfg.min_df && f as f64 <= max_df)
        .collect();
    if let Some(max_size) = cfg.max_size {
        if kept.len() > max_size {
            kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
            kept.truncate(max_size);
            kept.sort_by(|a, b| a.0.cmp(b.0));
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let (terms, doc_freq) = kept.into_iter().map(|(t, f)| (t.to_string(), f)).unzip();
    Vocabulary::from_parts(terms, doc_freq)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    Counts,
    Tfidf,
}

impl MatrixKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MatrixKind::Counts => "counts",
            MatrixKind::Tfidf => "tfidf",
        }
    }
}

/// Compressed sparse rows; only nonzero values are stored and
/// column indices within a row are ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct DocTermMatrix {
    n_docs: usize,
    n_terms: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    kind: MatrixKind,
    row_ids: Vec<String>,
}

impl DocTermMatrix {
    /// Builds from `(row, col, value)` triplets. Zero values are dropped;
    /// negative values are kept so that NMF can reject them explicitly.
    pub fn from_triplets(
        n_docs: usize,
        n_terms: usize,
        mut triplets: Vec<(usize, usize, f64)>,
        kind: MatrixKind,
        row_ids: Option<Vec<String>>,
    ) -> Result<Self> {
        let row_ids = row_ids.unwrap_or_else(|| (0..n_docs).map(|i| i.to_string()).collect());
        if row_ids.len() != n_docs {
            return Err(Error::ShapeMismatch(format!(
                "{} row ids for {} rows",
                row_ids.len(),
                n_docs
            )));
        }
        triplets.retain(|t| t.2 != 0.0);
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut indptr = vec![0; n_docs + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if r >= n_docs || c >= n_terms {
                return Err(Error::IndexOutOfRange {
                    index: if r >= n_docs { r } else { c },
                    len: if r >= n_docs { n_docs } else { n_terms },
                });
            }
            if last == Some((r, c)) {
                return Err(Error::MatrixFormat(format!("duplicate entry ({r}, {c})")));
            }
            last = Some((r, c));
            indptr[r + 1] += 1;
            indices.push(c);
            values.push(v);
        }
        for r in 0..n_docs {
            indptr[r + 1] += indptr[r];
        }
        Ok(Self {
            n_docs,
            n_terms,
            indptr,
            indices,
            values,
            kind,
            row_ids,
        })
    }

    pub fn from_dense(m: &DMatrix<f64>, kind: MatrixKind) -> Self {
        let mut trip = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if m[(r, c)] != 0.0 {
                    trip.push((r, c, m[(r, c)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), trip, kind, None).expect("dense input is well-formed")
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_docs, self.n_terms);
        for r in 0..self.n_docs {
            for (c, v) in self.row(r) {
                m[(r, c)] = v;
            }
        }
        m
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn n_terms(&self) -> usize {
        self.n_terms
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// All stored entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_docs).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Returns a copy with every value multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self::from_triplets(
            self.n_docs,
            self.n_terms,
            self.iter().map(|(r, col, v)| (r, col, v * c)).collect(),
            self.kind,
            Some(self.row_ids.clone()),
        )
        .expect("scaling keeps shape")
    }

    /// Number of rows in which each column is nonzero.
    pub fn column_doc_freq(&self) -> Vec<usize> {
        let mut df = vec![0; self.n_terms];
        for &c in &self.indices {
            df[c] += 1;
        }
        df
    }

    /// Renders the text exchange format: a `n_docs n_terms nnz kind`
    /// header then one `row col value` triple per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{} {} {} {}", self.n_docs, self.n_terms, self.nnz(), self.kind.as_str()).unwrap();
        for (r, c, v) in self.iter() {
            writeln!(s, "{r} {c} {v}").unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let fmt = |m: String| Error::MatrixFormat(m);
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| fmt("missing header".into()))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 4 {
            return Err(fmt(format!("bad header `{header}`")));
        }
        let parse_usize = |s: &str| s.parse::<usize>().map_err(|e| fmt(format!("`{s}`: {e}")));
        let n_docs = parse_usize(parts[0])?;
        let n_terms = parse_usize(parts[1])?;
        let nnz = parse_usize(parts[2])?;
        let kind = match parts[3] {
            "counts" => MatrixKind::Counts,
            "tfidf" => MatrixKind::Tfidf,
            other => return Err(fmt(format!("unknown kind `{other}`"))),
        };
        let mut trip = Vec::with_capacity(nnz);
        for line in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(fmt(format!("bad entry line `{line}`")));
            }
            let v = f[2].parse::<f64>().map_err(|e| fmt(format!("`{}`: {e}", f[2])))?;
            trip.push((parse_usize(f[0])?, parse_usize(f[1])?, v));
        }
        if trip.len() != nnz {
            return Err(fmt(format!("header says {nnz} entries, found {}", trip.len())));
        }
        Self::from_triplets(n_docs, n_terms, trip, kind, None)
    }
}

/// Raw term counts; out-of-vocabulary tokens are ignored but every
/// document keeps its row.
pub fn count_matrix(docs: &[TokenizedDoc], vocab: &Vocabulary) -> Result<DocTermMatrix> {
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let mut trip = Vec::new();
    for (r, doc) in docs.iter().enumerate() {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for t in &doc.tokens {
            if let Some(c) = vocab.id(t) {
                *counts.entry(c).or_default() += 1.0;
            }
        }
        trip.extend(counts.into_iter().map(|(c, v)| (r, c, v)));
    }
    DocTermMatrix::from_triplets(
        docs.len(),
        vocab.len(),
        trip,
        MatrixKind::Counts,
        Some(docs.iter().map(|d| d.id.clone()).collect()),
    )
}

/// Smoothed inverse document frequency.
pub fn idf(n_docs: usize, doc_freq: usize) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + doc_freq as f64)).ln() + 1.0
}

/// TF-IDF weights with L2-normalized rows.
pub fn tfidf(counts: &DocTermMatrix) -> Result<DocTermMatrix> {
    if counts.kind != MatrixKind::Counts {
        return Err(Error::InvalidConfig("tfidf expects a counts matrix".into()));
    }
    let weights: Vec<f64> = counts
        .column_doc_freq()
        .into_iter()
        .map(|df| idf(counts.n_docs, df))
        .collect();
    let mut out = counts.clone();
    out.kind = MatrixKind::Tfidf;
    for r in 0..out.n_docs {
        let span = out.indptr[r]..out.indptr[r + 1];
        let mut norm = 0.0;
        for k in span.clone() {
            out.values[k] *= weights[out.indices[k]];
            norm += out.values[k] * out.values[k];
        }
        if norm > 0.0 {
            let norm = norm.sqrt();
            for k in span {
                out.values[k] /= norm;
            }
        }
    }
    Ok(out)
}
