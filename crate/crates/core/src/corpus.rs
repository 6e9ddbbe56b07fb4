//! Narrative ingestion and the text preprocessing pipeline.
//!
//! Pipeline order is fixed: URL spans, HTML tags, lowercase, split on
//! anything outside `[a-z0-9]`, length and pure-digit filter, stopwords,
//! then optional lemmatization.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Bundled English stopword list, one word per line.
pub const STOPWORDS_EN_V1: &str = include_str!("../data/stopwords_en_v1.txt");
/// Bundled irregular forms, `form<TAB>lemma` per line.
pub const LEMMA_EXCEPTIONS_V1: &str = include_str!("../data/lemma_exceptions_v1.tsv");

pub const DEFAULT_STOPWORD_LIST: &str = "en-v1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub date: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedDoc {
    pub id: String,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub stopword_list_id: String,
    pub min_token_len: usize,
    pub strip_urls: bool,
    pub strip_html: bool,
    pub lemmatize: bool,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            stopword_list_id: DEFAULT_STOPWORD_LIST.to_string(),
            min_token_len: 2,
            strip_urls: true,
            strip_html: true,
            lemmatize: false,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_token_len < 1 {
            return Err(Error::InvalidConfig("min_token_len must be >= 1".into()));
        }
        stopword_list(&self.stopword_list_id)?;
        Ok(())
    }
}

/// Field names used when reading JSON-lines records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestFields {
    pub id: String,
    pub text: String,
    pub date: String,
}

impl Default for IngestFields {
    fn default() -> Self {
        Self {
            id: "id".into(),
            text: "narrative".into(),
            date: "date".into(),
        }
    }
}

/// Reads one document per non-blank line, in file order.
pub fn ingest_jsonl(path: impl AsRef<Path>) -> Result<Vec<Document>> {
    ingest_jsonl_with(path, &IngestFields::default())
}

pub fn ingest_jsonl_with(path: impl AsRef<Path>, fields: &IngestFields) -> Result<Vec<Document>> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let doc = parse_record(&line, line_no, fields)?;
        if !seen.insert(doc.id.clone()) {
            return Err(Error::DuplicateId(doc.id));
        }
        docs.push(doc);
    }
    Ok(docs)
}

fn parse_record(line: &str, line_no: usize, fields: &IngestFields) -> Result<Document> {
    let value: Value = serde_json::from_str(line).map_err(|e| Error::MalformedRecord {
        line_no,
        reason: e.to_string(),
    })?;
    let obj = value.as_object().ok_or_else(|| Error::MalformedRecord {
        line_no,
        reason: "record is not a JSON object".into(),
    })?;
    let missing = |field: &str| Error::MissingField {
        line_no,
        field: field.to_string(),
    };
    let id = match obj.get(&fields.id) {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        Some(Value::Null) | None => return Err(missing(&fields.id)),
        Some(_) => {
            return Err(Error::MalformedRecord {
                line_no,
                reason: format!("field `{}` must be a string or number", fields.id),
            })
        }
    };
    if id.is_empty() {
        return Err(Error::MalformedRecord {
            line_no,
            reason: "empty id".into(),
        });
    }
    let text = match obj.get(&fields.text) {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Null) | None => return Err(missing(&fields.text)),
        Some(_) => {
            return Err(Error::MalformedRecord {
                line_no,
                reason: format!("field `{}` must be a string", fields.text),
            })
        }
    };
    let date = obj
        .get(&fields.date)
        .and_then(Value::as_str)
        .map(str::to_string);
    Ok(Document { id, text, date })
}

/// Resolves a bundled stopword list by name.
pub fn stopword_list(id: &str) -> Result<&'static HashSet<String>> {
    static EN_V1: OnceLock<HashSet<String>> = OnceLock::new();
    match id {
        "en-v1" => Ok(EN_V1.get_or_init(|| parse_word_list(STOPWORDS_EN_V1))),
        other => Err(Error::UnknownStopwordList(other.to_string())),
    }
}

fn parse_word_list(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

fn url_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)[a-z][a-z0-9+.\-]*://\S+|www\.\S+").unwrap())
}

fn html_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"<[^<>]*>").unwrap())
}

/// Configured pipeline; construction resolves the stopword list once.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    cfg: PreprocessConfig,
    stopwords: &'static HashSet<String>,
    lemmatizer: &'static Lemmatizer,
}

impl Preprocessor {
    pub fn new(cfg: PreprocessConfig) -> Result<Self> {
        cfg.validate()?;
        let stopwords = stopword_list(&cfg.stopword_list_id)?;
        Ok(Self {
            cfg,
            stopwords,
            lemmatizer: Lemmatizer::bundled(),
        })
    }

    pub fn config(&self) -> &PreprocessConfig {
        &self.cfg
    }

    pub fn stopwords(&self) -> &HashSet<String> {
        self.stopwords
    }

    pub fn preprocess(&self, text: &str) -> Vec<String> {
        let mut text = std::borrow::Cow::Borrowed(text);
        if self.cfg.strip_urls {
            text = std::borrow::Cow::Owned(url_regex().replace_all(&text, " ").into_owned());
        }
        if self.cfg.strip_html {
            text = std::borrow::Cow::Owned(html_regex().replace_all(&text, " ").into_owned());
        }
        let lowered: String = text.chars().flat_map(char::to_lowercase).collect();
        lowered
            .split(|c: char| !(c.is_ascii_lowercase() || c.is_ascii_digit()))
            .filter(|t| t.len() >= self.cfg.min_token_len)
            .filter(|t| !t.bytes().all(|b| b.is_ascii_digit()))
            .filter(|t| !self.stopwords.contains(*t))
            .map(|t| {
                if self.cfg.lemmatize {
                    self.lemmatizer.lemmatize(t)
                } else {
                    t.to_string()
                }
            })
            .collect()
    }

    pub fn tokenize_doc(&self, doc: &Document) -> TokenizedDoc {
        TokenizedDoc {
            id: doc.id.clone(),
            tokens: self.preprocess(&doc.text),
        }
    }
}

/// One-shot convenience around [`Preprocessor`].
pub fn preprocess(text: &str, cfg: &PreprocessConfig) -> Result<Vec<String>> {
    Ok(Preprocessor::new(cfg.clone())?.preprocess(text))
}

/// Exception table lookup followed by ordered suffix rules.
#[derive(Debug, Clone)]
pub struct Lemmatizer {
    exceptions: HashMap<String, String>,
}

const MIN_LEMMA_LEN: usize = 3;

impl Lemmatizer {
    pub fn from_table(table: &str) -> Result<Self> {
        let mut exceptions = HashMap::new();
        for (i, line) in table.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (form, lemma) = line.split_once('\t').ok_or_else(|| Error::MalformedRecord {
                line_no: i + 1,
                reason: "expected form<TAB>lemma".into(),
            })?;
            exceptions.insert(form.trim().to_string(), lemma.trim().to_string());
        }
        Ok(Self { exceptions })
    }

    pub fn bundled() -> &'static Lemmatizer {
        static LEM: OnceLock<Lemmatizer> = OnceLock::new();
        LEM.get_or_init(|| Lemmatizer::from_table(LEMMA_EXCEPTIONS_V1).expect("bundled table"))
    }

    pub fn exceptions(&self) -> &HashMap<String, String> {
        &self.exceptions
    }

    pub fn lemmatize(&self, token: &str) -> String {
        if let Some(lemma) = self.exceptions.get(token) {
            return lemma.clone();
        }
        self.apply_rules(token).unwrap_or_else(|| token.to_string())
    }

    fn apply_rules(&self, token: &str) -> Option<String> {
        let plural = [
            token.strip_suffix("ies").map(|s| format!("{s}y")),
            token.strip_suffix("sses").map(|s| format!("{s}ss")),
            if token.ends_with("ss") || token.ends_with("us") {
                None
            } else {
                token.strip_suffix('s').map(str::to_string)
            },
        ];
        for cand in plural.into_iter().flatten() {
            if cand.len() < MIN_LEMMA_LEN {
                continue;
            }
            // A plural rule only fires when its result is already a fixed point.
            let resolved = self.exceptions.get(&cand).cloned().unwrap_or(cand);
            if self.exceptions.contains_key(&resolved) || self.verb_rules(&resolved).is_none() {
                return Some(resolved);
            }
        }
        self.verb_rules(token)
    }

    fn verb_rules(&self, token: &str) -> Option<String> {
        let stems = [
            token.strip_suffix("ing"),
            token.strip_suffix("ed").filter(|s| !s.ends_with('e')),
        ];
        for stem in stems.into_iter().flatten() {
            if !has_vowel(stem) {
                continue;
            }
            let restored = restore_stem(stem);
            if restored.len() >= MIN_LEMMA_LEN {
                return Some(restored);
            }
        }
        None
    }
}

/// Lemmatizes with the bundled exception table.
pub fn lemmatize(token: &str) -> String {
    Lemmatizer::bundled().lemmatize(token)
}

fn is_vowel_at(chars: &[u8], i: usize) -> bool {
    match chars[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => true,
        b'y' => i > 0 && !is_vowel_at(chars, i - 1),
        _ => false,
    }
}

fn has_vowel(s: &str) -> bool {
    let b = s.as_bytes();
    (0..b.len()).any(|i| is_vowel_at(b, i))
}

/// Number of vowel-consonant transitions.
fn measure(s: &str) -> usize {
    let b = s.as_bytes();
    let mut m = 0;
    let mut prev_vowel = false;
    for i in 0..b.len() {
        let v = is_vowel_at(b, i);
        if prev_vowel && !v {
            m += 1;
        }
        prev_vowel = v;
    }
    m
}

fn ends_cvc(s: &str) -> bool {
    let b = s.as_bytes();
    let n = b.len();
    n >= 3
        && !is_vowel_at(b, n - 3)
        && is_vowel_at(b, n - 2)
        && !is_vowel_at(b, n - 1)
        && !matches!(b[n - 1], b'w' | b'x' | b'y')
}

fn restore_stem(stem: &str) -> String {
    let b = stem.as_bytes();
    let n = b.len();
    if stem.ends_with("at") || stem.ends_with("bl") || stem.ends_with("iz") {
        return format!("{stem}e");
    }
    if n >= 2 && b[n - 1] == b[n - 2] && !is_vowel_at(b, n - 1) && !matches!(b[n - 1], b'l' | b's' | b'z') {
        return stem[..n - 1].to_string();
    }
    if (measure(stem) == 1 && ends_cvc(stem)) || wants_silent_e(b) {
        return format!("{stem}e");
    }
    stem.to_string()
}

/// Stem endings that English spells with a final silent e
/// (`produc`, `damag`, `observ`, `continu`, `fractur`, `caus`, `collaps`).
fn wants_silent_e(b: &[u8]) -> bool {
    let n = b.len();
    if n < 3 {
        return false;
    }
    let (last, prev, before) = (b[n - 1], b[n - 2], b[n - 3]);
    let cons = |i: usize| !is_vowel_at(b, i);
    match last {
        b'c' | b'v' | b'u' | b'z' => true,
        b'g' => is_vowel_at(b, n - 2) || matches!(prev, b'r' | b'l' | b'd'),
        b'r' => (matches!(prev, b'u' | b'a') && cons(n - 3)) || (prev == b'i' && before == b'u'),
        b's' => match prev {
            b's' => false,
            b'u' => !cons(n - 3),
            b'p' | b'r' | b'n' | b'l' => true,
            _ => is_vowel_at(b, n - 2),
        },
        _ => false,
    }
}

/// Writes `id<TAB>space-joined tokens`, one document per line.
pub fn write_tokenized<W: Write>(mut out: W, docs: &[TokenizedDoc]) -> std::io::Result<()> {
    for doc in docs {
        writeln!(out, "{}\t{}", doc.id, doc.tokens.join(" "))?;
    }
    Ok(())
}

pub fn read_tokenized(path: impl AsRef<Path>) -> Result<Vec<TokenizedDoc>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_tokenized(&text)
}

pub fn parse_tokenized(text: &str) -> Result<Vec<TokenizedDoc>> {
    let mut docs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (id, rest) = line.split_once('\t').ok_or_else(|| Error::MalformedRecord {
            line_no: i + 1,
            reason: "expected id<TAB>tokens".into(),
        })?;
        docs.push(TokenizedDoc {
            id: id.to_string(),
            tokens: rest.split(' ').filter(|t| !t.is_empty()).map(str::to_string).collect(),
        });
    }
    Ok(docs)
}
