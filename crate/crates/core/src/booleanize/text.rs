use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::sort_class_names;
use crate::bits::BitVector;
use crate::tm::BooleanSample;
use crate::{Error, Result};

/// Lowercases, strips punctuation and splits on whitespace. With `stem`
/// set, each token goes through [`stem`].
pub fn tokenize(text: &str, stem_tokens: bool) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect();
    cleaned
        .split_whitespace()
        .map(|t| if stem_tokens { stem(t) } else { t.to_string() })
        .collect()
}

/// A small suffix-stripping stemmer ("graceful" -> "grace", "witty" -> "witti").
pub fn stem(word: &str) -> String {
    const SUFFIXES: [&str; 11] = [
        "ingly", "edly", "fully", "ness", "ment", "ing", "ful", "ly", "ed", "es", "s",
    ];
    let mut w = word.to_string();
    for suffix in SUFFIXES {
        if w.ends_with(suffix) && w.len() >= suffix.len() + 3 {
            w.truncate(w.len() - suffix.len());
            break;
        }
    }
    if w.len() > 3 && w.ends_with('y') {
        w.pop();
        w.push('i');
    }
    w
}

/// Token to feature-index map.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
    pub min_freq: usize,
    /// Hex SHA-256 prefix of the corpus the vocabulary was built from.
    pub corpus_hash: String,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.tokens == other.tokens
            && self.min_freq == other.min_freq
            && self.corpus_hash == other.corpus_hash
    }
}

impl Vocabulary {
    pub fn from_tokens(tokens: Vec<String>, min_freq: usize, corpus_hash: String) -> Result<Self> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::format("vocabulary", format!("duplicate token {t:?}")));
            }
        }
        Ok(Self {
            tokens,
            index,
            min_freq,
            corpus_hash,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        if self.index.len() != self.tokens.len() {
            // deserialized without the index
            return self.tokens.iter().position(|t| t == token);
        }
        self.index.get(token).copied()
    }

    pub fn token(&self, feature: usize) -> &str {
        &self.tokens[feature]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Keeps the `size` most frequent tokens occurring at least `min_freq`
/// times; ties break lexicographically.
pub fn build_vocab(corpus: &[Vec<String>], size: usize, min_freq: usize) -> Result<Vocabulary> {
    if corpus.iter().all(Vec::is_empty) {
        return Err(Error::EmptyDataset);
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    let mut hasher = Sha256::new();
    for doc in corpus {
        for t in doc {
            *counts.entry(t).or_default() += 1;
            hasher.update(t.as_bytes());
            hasher.update([0x1f]);
        }
        hasher.update([0x1e]);
    }
    let mut ranked: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_freq)
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(size);
    let digest = hasher.finalize();
    let hash: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
    Vocabulary::from_tokens(
        ranked.into_iter().map(|(t, _)| t.to_string()).collect(),
        min_freq,
        hash,
    )
}

/// Presence (not count) of each vocabulary token; unknown tokens are ignored.
pub fn text_to_bow<S: AsRef<str>>(tokens: &[S], vocab: &Vocabulary) -> BooleanSample {
    let mut bits = BitVector::zeros(vocab.len());
    for t in tokens {
        if let Some(i) = vocab.get(t.as_ref()) {
            bits.set(i, true);
        }
    }
    BooleanSample::new(bits)
}

/// Labeled documents.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TextDataset {
    pub documents: Vec<String>,
    pub labels: Vec<usize>,
    pub classes: Vec<String>,
}

impl TextDataset {
    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }
}

/// Reads a UTF-8 CSV with a `label,text` header.
///
/// With `classes` given, labels must come from that table; otherwise the
/// table is the sorted set of labels present.
pub fn load_text_csv(path: impl AsRef<Path>, classes: Option<&[String]>) -> Result<TextDataset> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::format("text CSV", format!("missing `{name}` column")))
    };
    let (label_col, text_col) = (col("label")?, col("text")?);
    let mut raw = Vec::new();
    for record in reader.records() {
        let record = record?;
        let field = |i: usize| {
            record
                .get(i)
                .map(str::to_string)
                .ok_or_else(|| Error::format("text CSV", "short row"))
        };
        raw.push((field(label_col)?.trim().to_string(), field(text_col)?));
    }
    let classes: Vec<String> = match classes {
        Some(c) => c.to_vec(),
        None => {
            let mut names: Vec<String> = raw.iter().map(|(l, _)| l.clone()).collect();
            sort_class_names(&mut names);
            names
        }
    };
    let mut labels = Vec::with_capacity(raw.len());
    let mut documents = Vec::with_capacity(raw.len());
    for (label, text) in raw {
        let idx = classes.iter().position(|c| *c == label).ok_or_else(|| {
            Error::format("text CSV", format!("label {label:?} not in class table"))
        })?;
        labels.push(idx);
        documents.push(text);
    }
    Ok(TextDataset {
        documents,
        labels,
        classes,
    })
}
