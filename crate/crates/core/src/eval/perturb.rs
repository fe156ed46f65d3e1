use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::Rng;

use crate::booleanize::{tokenize, TextDataset};
use crate::{Error, Result};

/// Token to replacement token.
pub type SynonymMap = HashMap<String, String>;

/// Parses `word<TAB>synonym` lines. Blank lines and lines starting with `#`
/// are skipped; a later entry for the same word wins.
pub fn parse_synonyms(text: &str) -> Result<SynonymMap> {
    let mut map = SynonymMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let malformed = || Error::format("synonym map", format!("line {}: expected word<TAB>synonym", n + 1));
        let (word, syn) = line.split_once('\t').ok_or_else(malformed)?;
        let (word, syn) = (word.trim(), syn.trim());
        if word.is_empty() || syn.is_empty() || syn.contains('\t') {
            return Err(malformed());
        }
        map.insert(word.to_lowercase(), syn.to_lowercase());
    }
    Ok(map)
}

pub fn load_synonyms(path: impl AsRef<Path>) -> Result<SynonymMap> {
    parse_synonyms(&fs::read_to_string(path)?)
}

/// With probability 1/2, replaces one uniformly chosen token that has an
/// entry in `map`. The token count never changes.
pub fn perturb_text<R: Rng + ?Sized>(tokens: &[String], map: &SynonymMap, rng: &mut R) -> Vec<String> {
    let mut out = tokens.to_vec();
    if map.is_empty() || !rng.random_bool(0.5) {
        return out;
    }
    let candidates: Vec<usize> = (0..tokens.len()).filter(|&i| map.contains_key(&tokens[i])).collect();
    if !candidates.is_empty() {
        let i = candidates[rng.random_range(0..candidates.len())];
        out[i] = map[&tokens[i]].clone();
    }
    out
}

/// Applies [`perturb_text`] to every document of a dataset. Documents are
/// tokenized without stemming and rejoined with single spaces.
pub fn perturb_documents<R: Rng + ?Sized>(data: &TextDataset, map: &SynonymMap, rng: &mut R) -> TextDataset {
    TextDataset {
        documents: data
            .documents
            .iter()
            .map(|d| perturb_text(&tokenize(d, false), map, rng).join(" "))
            .collect(),
        labels: data.labels.clone(),
        classes: data.classes.clone(),
    }
}
