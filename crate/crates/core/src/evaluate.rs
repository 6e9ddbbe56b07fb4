//! Topic inspection and C_v coherence.
//!
//! C_v here is the boolean-sliding-window / NPMI / one-set-segmentation /
//! cosine construction, using the modeling corpus as reference.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::corpus::TokenizedDoc;
use crate::error::{Error, Result};
use crate::ModelKind;

pub const DEFAULT_WINDOW: usize = 110;
pub const DEFAULT_TOP_N: usize = 10;
pub const NPMI_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSummary {
    pub topic_id: usize,
    pub top_words: Vec<(String, f64)>,
    pub model_kind: ModelKind,
}

impl TopicSummary {
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.top_words.iter().map(|(w, _)| w.as_str())
    }
}

/// The `n` heaviest terms of one topic row. Signed (LSA) rows rank by
/// magnitude but report the signed weight; ties break lexicographically.
pub fn top_words(
    topic_term: &DMatrix<f64>,
    terms: &[String],
    topic_id: usize,
    n: usize,
    model_kind: ModelKind,
) -> Result<TopicSummary> {
    if topic_id >= topic_term.nrows() {
        return Err(Error::IndexOutOfRange {
            index: topic_id,
            len: topic_term.nrows(),
        });
    }
    if topic_term.ncols() != terms.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} topic columns for {} terms",
            topic_term.ncols(),
            terms.len()
        )));
    }
    if n < 1 {
        return Err(Error::InvalidConfig("top_n must be >= 1".into()));
    }
    let key = |w: f64| if model_kind == ModelKind::Lsa { w.abs() } else { w };
    let mut ranked: Vec<(usize, f64)> = topic_term.row(topic_id).iter().copied().enumerate().collect();
    ranked.sort_by(|a, b| key(b.1).total_cmp(&key(a.1)).then_with(|| terms[a.0].cmp(&terms[b.0])));
    ranked.truncate(n);
    Ok(TopicSummary {
        topic_id,
        top_words: ranked.into_iter().map(|(j, w)| (terms[j].clone(), w)).collect(),
        model_kind,
    })
}

/// Summaries for every topic of a model.
pub fn all_top_words(topic_term: &DMatrix<f64>, terms: &[String], n: usize, kind: ModelKind) -> Result<Vec<TopicSummary>> {
    (0..topic_term.nrows())
        .map(|k| top_words(topic_term, terms, k, n, kind))
        .collect()
}

/// Boolean sliding-window document frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceIndex {
    pub window_size: usize,
    pub n_windows: u64,
    ids: HashMap<String, u32>,
    occur: Vec<u64>,
    cooccur: HashMap<(u32, u32), u64>,
}

impl CooccurrenceIndex {
    pub fn occur(&self, term: &str) -> u64 {
        self.ids.get(term).map_or(0, |&i| self.occur[i as usize])
    }

    pub fn cooccur(&self, a: &str, b: &str) -> u64 {
        match (self.ids.get(a), self.ids.get(b)) {
            (Some(&x), Some(&y)) if x == y => self.occur[x as usize],
            (Some(&x), Some(&y)) => *self.cooccur.get(&(x.min(y), x.max(y))).unwrap_or(&0),
            _ => 0,
        }
    }

    /// Indexed terms in no particular order.
    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.ids.keys().map(String::as_str)
    }

    /// Unordered pairs with a nonzero window count.
    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str, u64)> + '_ {
        let mut names = vec![""; self.ids.len()];
        for (t, &i) in &self.ids {
            names[i as usize] = t.as_str();
        }
        self.cooccur
            .iter()
            .map(move |(&(a, b), &c)| (names[a as usize], names[b as usize], c))
    }
}

pub fn build_cooccurrence(docs: &[TokenizedDoc], window_size: usize) -> Result<CooccurrenceIndex> {
    build_index(docs, window_size, None)
}

/// Restricts counting to `terms`; window counts are unchanged.
pub fn build_cooccurrence_for<'a, I>(docs: &[TokenizedDoc], window_size: usize, terms: I) -> Result<CooccurrenceIndex>
where
    I: IntoIterator<Item = &'a str>,
{
    let filter: BTreeSet<&str> = terms.into_iter().collect();
    build_index(docs, window_size, Some(&filter))
}

fn build_index(docs: &[TokenizedDoc], window_size: usize, filter: Option<&BTreeSet<&str>>) -> Result<CooccurrenceIndex> {
    if window_size < 1 {
        return Err(Error::InvalidConfig("window_size must be >= 1".into()));
    }
    let mut ids: HashMap<String, u32> = HashMap::new();
    if let Some(f) = filter {
        for (i, t) in f.iter().enumerate() {
            ids.insert(t.to_string(), i as u32);
        }
    }
    let mut occur: Vec<u64> = vec![0; ids.len()];
    let mut cooccur: HashMap<(u32, u32), u64> = HashMap::new();
    let mut n_windows = 0u64;

    for doc in docs {
        let encoded: Vec<Option<u32>> = doc
            .tokens
            .iter()
            .map(|t| match filter {
                Some(_) => ids.get(t).copied(),
                None => {
                    let next = ids.len() as u32;
                    let id = *ids.entry(t.clone()).or_insert(next);
                    if id as usize == occur.len() {
                        occur.push(0);
                    }
                    Some(id)
                }
            })
            .collect();
        let len = encoded.len();
        let width = window_size.min(len);
        let n_here = if len > window_size { len - window_size + 1 } else { 1 };
        n_windows += n_here as u64;

        let mut in_window: HashMap<u32, usize> = HashMap::new();
        let mut present: BTreeSet<u32> = BTreeSet::new();
        let add = |id: Option<u32>, in_window: &mut HashMap<u32, usize>, present: &mut BTreeSet<u32>| {
            if let Some(id) = id {
                let c = in_window.entry(id).or_insert(0);
                *c += 1;
                if *c == 1 {
                    present.insert(id);
                }
            }
        };
        for &id in &encoded[..width] {
            add(id, &mut in_window, &mut present);
        }
        for start in 0..n_here {
            if start > 0 {
                if let Some(id) = encoded[start - 1] {
                    let c = in_window.get_mut(&id).unwrap();
                    *c -= 1;
                    if *c == 0 {
                        present.remove(&id);
                    }
                }
                add(encoded[start + width - 1], &mut in_window, &mut present);
            }
            let members: Vec<u32> = present.iter().copied().collect();
            for (i, &a) in members.iter().enumerate() {
                occur[a as usize] += 1;
                for &b in &members[i + 1..] {
                    *cooccur.entry((a, b)).or_insert(0) += 1;
                }
            }
        }
    }
    Ok(CooccurrenceIndex {
        window_size,
        n_windows,
        ids,
        occur,
        cooccur,
    })
}

/// Normalized pointwise mutual information over window probabilities.
pub fn npmi(index: &CooccurrenceIndex, a: &str, b: &str) -> Result<f64> {
    for t in [a, b] {
        if index.occur(t) == 0 {
            return Err(Error::UnknownTerm(t.to_string()));
        }
    }
    let n = index.n_windows as f64;
    let pa = index.occur(a) as f64 / n;
    let pb = index.occur(b) as f64 / n;
    let pab = index.cooccur(a, b) as f64 / n;
    let joint = pab + NPMI_EPSILON;
    if joint >= 1.0 {
        // both terms fill every window
        return Ok(1.0);
    }
    let value = (joint / (pa * pb)).ln() / -joint.ln();
    Ok(value.clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicCoherence {
    pub topic_id: usize,
    pub c_v: f64,
    pub words: Vec<String>,
    pub dropped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub per_topic: Vec<TopicCoherence>,
    pub mean_cv: f64,
    pub window_size: usize,
    pub top_n: usize,
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

pub fn coherence_cv(summaries: &[TopicSummary], docs: &[TokenizedDoc], window_size: usize) -> Result<CoherenceReport> {
    let index = build_cooccurrence_for(docs, window_size, summaries.iter().flat_map(TopicSummary::words))?;
    coherence_cv_with_index(summaries, &index)
}

pub fn coherence_cv_with_index(summaries: &[TopicSummary], index: &CooccurrenceIndex) -> Result<CoherenceReport> {
    let mut per_topic = Vec::with_capacity(summaries.len());
    for s in summaries {
        let (words, dropped): (Vec<String>, Vec<String>) =
            s.words().map(str::to_string).partition(|w| index.occur(w) > 0);
        if !dropped.is_empty() {
            log::warn!("topic {}: dropping {} words absent from the corpus", s.topic_id, dropped.len());
        }
        if words.len() < 2 {
            return Err(Error::InsufficientWords {
                topic_id: s.topic_id,
                kept: words.len(),
            });
        }
        let vectors: Vec<Vec<f64>> = words
            .iter()
            .map(|a| words.iter().map(|b| npmi(index, a, b)).collect::<Result<Vec<f64>>>())
            .collect::<Result<_>>()?;
        let mut whole = vec![0.0; words.len()];
        for v in &vectors {
            for (acc, x) in whole.iter_mut().zip(v) {
                *acc += x;
            }
        }
        let c_v = vectors.iter().map(|v| cosine(v, &whole)).sum::<f64>() / words.len() as f64;
        per_topic.push(TopicCoherence {
            topic_id: s.topic_id,
            c_v,
            words,
            dropped,
        });
    }
    let mean_cv = mean(per_topic.iter().map(|t| t.c_v));
    Ok(CoherenceReport {
        per_topic,
        mean_cv,
        window_size: index.window_size,
        top_n: summaries.iter().map(|s| s.top_words.len()).max().unwrap_or(0),
    })
}

pub fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Plain-text comparison table, one `Technique | Coherence Value` row per
/// entry, sorted by descending score.
pub fn render_coherence_table(rows: &[(String, f64)]) -> String {
    let mut rows = rows.to_vec();
    rows.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max("Technique".len());
    let mut out = String::new();
    writeln!(out, "{:<width$} | Coherence Value", "Technique").unwrap();
    writeln!(out, "{}-+-{}", "-".repeat(width), "-".repeat("Coherence Value".len())).unwrap();
    for (name, score) in rows {
        writeln!(out, "{name:<width$} | {score:.3}").unwrap();
    }
    out
}
