//! Documents, tokenization, the word lists used by the rule backend, and
//! static word vectors.
//!
//! Offsets everywhere are character offsets (not bytes), half-open.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Half-open character range `[start, end)`, serialized as `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }
}

impl From<(usize, usize)> for Span {
    fn from((start, end): (usize, usize)) -> Self {
        Span { start, end }
    }
}

impl From<Span> for (usize, usize) {
    fn from(s: Span) -> Self {
        (s.start, s.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn span(&self) -> Span {
        Span::new(self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldArgument {
    pub span: Span,
    pub role: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldEvent {
    pub trigger_span: Span,
    pub event_type: String,
    pub arguments: Vec<GoldArgument>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sentence {
    pub sent_id: String,
    pub text: String,
    pub tokens: Vec<Token>,
    pub gold_events: Option<Vec<GoldEvent>>,
}

impl Sentence {
    /// Builds a sentence and tokenizes its text.
    pub fn new(sent_id: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        let tokens = tokenize(&text);
        Sentence {
            sent_id: sent_id.into(),
            text,
            tokens,
            gold_events: None,
        }
    }

    pub fn with_gold(mut self, gold: Vec<GoldEvent>) -> Self {
        self.gold_events = Some(gold);
        self
    }

    /// Number of characters in the text.
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }

    /// Substring covered by `span`, or `None` if the span is out of bounds.
    pub fn slice(&self, span: Span) -> Option<String> {
        if span.start >= span.end || span.end > self.char_len() {
            return None;
        }
        Some(self.text.chars().skip(span.start).take(span.end - span.start).collect())
    }

    /// Character span covered by tokens `first..=last`.
    pub fn token_range_span(&self, first: usize, last: usize) -> Span {
        Span::new(self.tokens[first].start, self.tokens[last].end)
    }

    /// Text of tokens `first..=last` as it appears in the sentence.
    pub fn token_range_text(&self, first: usize, last: usize) -> String {
        self.slice(self.token_range_span(first, last)).unwrap_or_default()
    }

    fn validate(&self) -> Result<()> {
        let len = self.char_len();
        let check = |span: Span, what: &str| -> Result<()> {
            if span.start >= span.end || span.end > len {
                return Err(Error::InvalidSpan {
                    sent_id: self.sent_id.clone(),
                    message: format!(
                        "{what} span [{}, {}) outside text of length {len}",
                        span.start, span.end
                    ),
                });
            }
            Ok(())
        };
        for event in self.gold_events.iter().flatten() {
            check(event.trigger_span, "trigger")?;
            if event.event_type.trim().is_empty() {
                return Err(Error::InvalidSpan {
                    sent_id: self.sent_id.clone(),
                    message: "empty event type".into(),
                });
            }
            for arg in &event.arguments {
                check(arg.span, "argument")?;
                if arg.role.trim().is_empty() {
                    return Err(Error::InvalidSpan {
                        sent_id: self.sent_id.clone(),
                        message: "empty role label".into(),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub doc_id: String,
    pub sentences: Vec<Sentence>,
}

// Wire format of one corpus line.

#[derive(Serialize, Deserialize)]
struct RawDocument {
    doc_id: String,
    #[serde(default)]
    sentences: Vec<RawSentence>,
}

#[derive(Serialize, Deserialize)]
struct RawSentence {
    sent_id: String,
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gold_events: Option<Vec<RawGoldEvent>>,
}

#[derive(Serialize, Deserialize)]
struct RawGoldEvent {
    trigger: Span,
    #[serde(rename = "type")]
    event_type: String,
    #[serde(default)]
    args: Vec<(Span, String)>,
}

impl From<RawDocument> for Document {
    fn from(raw: RawDocument) -> Self {
        let sentences = raw
            .sentences
            .into_iter()
            .map(|s| {
                let mut sentence = Sentence::new(s.sent_id, s.text);
                sentence.gold_events = s.gold_events.map(|events| {
                    events
                        .into_iter()
                        .map(|g| GoldEvent {
                            trigger_span: g.trigger,
                            event_type: g.event_type,
                            arguments: g
                                .args
                                .into_iter()
                                .map(|(span, role)| GoldArgument { span, role })
                                .collect(),
                        })
                        .collect()
                });
                sentence
            })
            .collect();
        Document {
            doc_id: raw.doc_id,
            sentences,
        }
    }
}

impl From<&Document> for RawDocument {
    fn from(doc: &Document) -> Self {
        RawDocument {
            doc_id: doc.doc_id.clone(),
            sentences: doc
                .sentences
                .iter()
                .map(|s| RawSentence {
                    sent_id: s.sent_id.clone(),
                    text: s.text.clone(),
                    gold_events: s.gold_events.as_ref().map(|events| {
                        events
                            .iter()
                            .map(|g| RawGoldEvent {
                                trigger: g.trigger_span,
                                event_type: g.event_type.clone(),
                                args: g.arguments.iter().map(|a| (a.span, a.role.clone())).collect(),
                            })
                            .collect()
                    }),
                })
                .collect(),
        }
    }
}

/// Reads a JSON-Lines corpus, one document per non-blank line.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Document>> {
    let path = path.as_ref();
    let reader = BufReader::new(File::open(path)?);
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: idx + 1,
            message,
        };
        let raw: RawDocument = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        if raw.doc_id.is_empty() {
            return Err(parse_err("empty doc_id".into()));
        }
        if !seen.insert(raw.doc_id.clone()) {
            return Err(parse_err(format!("duplicate doc_id `{}`", raw.doc_id)));
        }
        let doc = Document::from(raw);
        for sentence in &doc.sentences {
            sentence.validate()?;
        }
        docs.push(doc);
    }
    Ok(docs)
}

/// Writes documents in the same JSON-Lines format `load_corpus` reads.
pub fn save_corpus(path: impl AsRef<Path>, docs: &[Document]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for doc in docs {
        serde_json::to_writer(&mut out, &RawDocument::from(doc))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Splits on whitespace, then peels leading and trailing ASCII punctuation
/// off each chunk as single-character tokens.
pub fn tokenize(text: &str) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let chunk_start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        let chunk_end = i;

        let mut lo = chunk_start;
        let mut hi = chunk_end;
        while lo < hi && chars[lo].is_ascii_punctuation() {
            lo += 1;
        }
        while hi > lo && chars[hi - 1].is_ascii_punctuation() {
            hi -= 1;
        }
        let push = |tokens: &mut Vec<Token>, s: usize, e: usize| {
            tokens.push(Token {
                text: chars[s..e].iter().collect(),
                start: s,
                end: e,
            });
        };
        for p in chunk_start..lo {
            push(&mut tokens, p, p + 1);
        }
        if lo < hi {
            push(&mut tokens, lo, hi);
        }
        for p in hi..chunk_end {
            push(&mut tokens, p, p + 1);
        }
    }
    tokens
}

/// Lowercased, tokenized, single-space-joined form used for list lookups.
pub fn normalize_phrase(text: &str) -> String {
    tokenize(text)
        .iter()
        .map(|t| t.text.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    pub verbs: HashSet<String>,
    pub nouns: HashSet<String>,
    /// Entries are stored in `normalize_phrase` form.
    pub entity_gazetteer: HashSet<String>,
    max_entity_tokens: usize,
}

impl Lexicon {
    pub fn new<V, N, G>(verbs: V, nouns: N, gazetteer: G) -> Self
    where
        V: IntoIterator,
        V::Item: AsRef<str>,
        N: IntoIterator,
        N::Item: AsRef<str>,
        G: IntoIterator,
        G::Item: AsRef<str>,
    {
        let words = |it: &mut dyn Iterator<Item = String>| -> HashSet<String> {
            it.map(|w| w.trim().to_lowercase()).filter(|w| !w.is_empty()).collect()
        };
        let verbs = words(&mut verbs.into_iter().map(|w| w.as_ref().to_owned()));
        let nouns = words(&mut nouns.into_iter().map(|w| w.as_ref().to_owned()));
        let entity_gazetteer: HashSet<String> = gazetteer
            .into_iter()
            .map(|g| normalize_phrase(g.as_ref()))
            .filter(|g| !g.is_empty())
            .collect();
        let max_entity_tokens = entity_gazetteer.iter().map(|g| g.split(' ').count()).max().unwrap_or(0);
        Lexicon {
            verbs,
            nouns,
            entity_gazetteer,
            max_entity_tokens,
        }
    }

    /// Loads the three one-entry-per-line word lists.
    pub fn load(verbs: impl AsRef<Path>, nouns: impl AsRef<Path>, gazetteer: impl AsRef<Path>) -> Result<Self> {
        fn read_list(path: &Path) -> Result<Vec<String>> {
            let reader = BufReader::new(File::open(path)?);
            let mut out = Vec::new();
            for line in reader.lines() {
                let line = line?;
                let line = line.trim();
                if !line.is_empty() {
                    out.push(line.to_owned());
                }
            }
            Ok(out)
        }
        Ok(Lexicon::new(
            read_list(verbs.as_ref())?,
            read_list(nouns.as_ref())?,
            read_list(gazetteer.as_ref())?,
        ))
    }

    pub fn is_verb(&self, word: &str) -> bool {
        self.verbs.contains(&word.to_lowercase())
    }

    pub fn is_noun(&self, word: &str) -> bool {
        self.nouns.contains(&word.to_lowercase())
    }

    /// Greedy left-to-right longest gazetteer matches over `tokens`, as
    /// inclusive token index ranges. Matches never overlap.
    pub fn entity_matches(&self, tokens: &[Token]) -> Vec<(usize, usize)> {
        let mut matches = Vec::new();
        if self.max_entity_tokens == 0 {
            return matches;
        }
        let lower: Vec<String> = tokens.iter().map(|t| t.text.to_lowercase()).collect();
        let mut i = 0;
        while i < lower.len() {
            let longest = self.max_entity_tokens.min(lower.len() - i);
            let hit = (1..=longest)
                .rev()
                .find(|&n| self.entity_gazetteer.contains(&lower[i..i + n].join(" ")));
            match hit {
                Some(n) => {
                    matches.push((i, i + n - 1));
                    i += n;
                }
                None => i += 1,
            }
        }
        matches
    }
}

/// Static word vectors with deterministic out-of-vocabulary vectors.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dimension: usize,
    entries: HashMap<String, Vec<f64>>,
    pub oov_seed: u64,
}

impl EmbeddingTable {
    pub fn new(dimension: usize, oov_seed: u64) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        Ok(EmbeddingTable {
            dimension,
            entries: HashMap::new(),
            oov_seed,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                actual: vector.len(),
            });
        }
        self.entries.insert(token.into(), vector);
        Ok(())
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.entries.get(token).map(Vec::as_slice)
    }

    /// Reads the word2vec/GloVe text format; an optional `<count> <dim>`
    /// header line is accepted.
    pub fn load(path: impl AsRef<Path>, oov_seed: u64) -> Result<Self> {
        let path = path.as_ref();
        let reader = BufReader::new(File::open(path)?);
        let mut dimension: Option<usize> = None;
        let mut entries = HashMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let parse_err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if idx == 0 && fields.len() == 2 {
                if let (Ok(_), Ok(dim)) = (fields[0].parse::<usize>(), fields[1].parse::<usize>()) {
                    dimension = Some(dim);
                    continue;
                }
            }
            let values = fields[1..]
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| parse_err(format!("bad float: {e}")))?;
            let dim = *dimension.get_or_insert(values.len());
            if values.len() != dim || dim == 0 {
                return Err(parse_err(format!(
                    "expected {dim} components for `{}`, found {}",
                    fields[0],
                    values.len()
                )));
            }
            entries.insert(fields[0].to_owned(), values);
        }
        let dimension = dimension.ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: "no embeddings found".into(),
        })?;
        Ok(EmbeddingTable {
            dimension,
            entries,
            oov_seed,
        })
    }

    /// Writes the table in text format with a header line, entries sorted.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{} {}", self.entries.len(), self.dimension)?;
        let mut keys: Vec<&String> = self.entries.keys().collect();
        keys.sort();
        for key in keys {
            write!(out, "{key}")?;
            for v in &self.entries[key] {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Stored vector for `token` (exact, then lowercased), else a seeded
    /// unit vector.
    pub fn embed(&self, token: &str) -> Vec<f64> {
        if let Some(v) = self.entries.get(token) {
            return v.clone();
        }
        let lower = token.to_lowercase();
        if let Some(v) = self.entries.get(&lower) {
            return v.clone();
        }
        self.oov_vector(&lower)
    }

    fn oov_vector(&self, lower: &str) -> Vec<f64> {
        let mut hasher = Sha256::new();
        hasher.update(self.oov_seed.to_le_bytes());
        hasher.update(lower.as_bytes());
        let seed: [u8; 32] = hasher.finalize().into();
        let mut rng = ChaCha8Rng::from_seed(seed);
        let mut v: Vec<f64> = (0..self.dimension).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        } else {
            v[0] = 1.0;
        }
        v
    }

    /// Mean of the token vectors of a (possibly multi-token) mention.
    pub fn phrase_embedding(&self, text: &str) -> Vec<f64> {
        let tokens = tokenize(text);
        if tokens.is_empty() {
            return self.embed(text);
        }
        let mut mean = vec![0.0; self.dimension];
        for token in &tokens {
            for (m, x) in mean.iter_mut().zip(self.embed(&token.text)) {
                *m += x;
            }
        }
        let n = tokens.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }
}
