//! Dataset loading for every input format, with failures tagged so `main`
//! can tell unreadable data from bad settings.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Result};
use tmdc_core::booleanize::{
    binarize_images, booleanize_text, build_vocab, load_idx, load_text_csv, read_cache, tokenize,
    Preprocessing, TextDataset,
};
use tmdc_core::eval::ImageDims;
use tmdc_core::{BitVector, BooleanSample, Dataset};

use crate::config::{Format, RunConfig};

/// A dataset file that is missing or could not be parsed.
#[derive(Debug)]
pub struct DataError {
    pub path: PathBuf,
    pub reason: String,
}

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cannot read {}: {}", self.path.display(), self.reason)
    }
}

impl std::error::Error for DataError {}

fn data_err(path: &Path, reason: impl fmt::Display) -> anyhow::Error {
    DataError {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
    .into()
}

/// A booleanized dataset plus what later stages may need.
pub struct Prepared {
    pub data: Dataset,
    /// Image geometry when the source knows it.
    pub dims: Option<ImageDims>,
    /// The raw documents of a text set.
    pub text: Option<TextDataset>,
}

/// Parses the plain-text bit format: one sample per line, `0`/`1` features
/// separated by whitespace, label last. Blank lines and `#` lines are skipped.
pub fn parse_bits(text: &str, classes: Option<&[String]>) -> std::result::Result<Dataset, String> {
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let (label, bits) = fields.split_last().expect("line is not empty");
        if bits.is_empty() {
            return Err(format!("line {}: no features", n + 1));
        }
        let bits = bits
            .iter()
            .map(|b| match *b {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(format!("line {}: feature `{b}` is not 0 or 1", n + 1)),
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        rows.push((BitVector::from_bools(bits), label.to_string()));
    }
    if rows.is_empty() {
        return Err("no samples".into());
    }
    let classes: Vec<String> = match classes {
        Some(c) => c.to_vec(),
        None => {
            let mut names: Vec<String> = rows.iter().map(|(_, l)| l.clone()).collect();
            names.sort();
            names.dedup();
            if names.iter().all(|n| n.parse::<i64>().is_ok()) {
                names.sort_by_key(|n| n.parse::<i64>().unwrap_or_default());
            }
            names
        }
    };
    let mut samples = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for (bits, label) in rows {
        let y = classes
            .iter()
            .position(|c| *c == label)
            .ok_or_else(|| format!("label `{label}` is not a known class"))?;
        samples.push(BooleanSample::new(bits));
        labels.push(y);
    }
    Dataset::new(samples, labels, classes).map_err(|e| e.to_string())
}

fn flag_dims(cfg: &RunConfig) -> Option<ImageDims> {
    Some(ImageDims {
        rows: cfg.rows?,
        cols: cfg.cols?,
        channels: cfg.channels,
    })
}

/// Preprocessing a fresh model should record. Text sets build their
/// vocabulary from the training documents here.
pub fn training_preprocessing(cfg: &RunConfig, path: &Path) -> Result<Preprocessing> {
    Ok(match cfg.format.resolve(path) {
        Format::Idx => Preprocessing::AdaptiveGaussian(cfg.binarization()),
        Format::Text => {
            let docs = load_text_csv(path, None).map_err(|e| data_err(path, e))?;
            let corpus: Vec<Vec<String>> = docs.documents.iter().map(|d| tokenize(d, cfg.stem)).collect();
            let vocabulary = build_vocab(&corpus, cfg.vocab, cfg.min_freq)?;
            Preprocessing::BagOfWords {
                vocabulary,
                stem: cfg.stem,
            }
        }
        Format::Bits | Format::Cache | Format::Auto => Preprocessing::None,
    })
}

/// Loads `path` and booleanizes it the way `pre` says.
pub fn load(
    cfg: &RunConfig,
    path: &Path,
    labels: Option<&Path>,
    pre: &Preprocessing,
    classes: Option<&[String]>,
) -> Result<Prepared> {
    let format = cfg.format.resolve(path);
    match format {
        Format::Bits | Format::Auto => {
            let text = std::fs::read_to_string(path).map_err(|e| data_err(path, e))?;
            let data = parse_bits(&text, classes).map_err(|e| data_err(path, e))?;
            Ok(Prepared {
                data,
                dims: flag_dims(cfg),
                text: None,
            })
        }
        Format::Cache => {
            let mut data = read_cache(path).map_err(|e| data_err(path, e))?;
            if let Some(c) = classes {
                if data.classes.len() > c.len() {
                    return Err(data_err(path, format!("{} classes, model has {}", data.classes.len(), c.len())));
                }
                data.classes = c.to_vec();
            }
            Ok(Prepared {
                data,
                dims: flag_dims(cfg),
                text: None,
            })
        }
        Format::Idx => {
            let Preprocessing::AdaptiveGaussian(bin) = pre else {
                bail!("IDX images need a model trained on thresholded images");
            };
            let labels = labels.ok_or_else(|| anyhow!("IDX images need a label file (--labels)"))?;
            let images = load_idx(path, labels, classes.map(<[String]>::len)).map_err(|e| {
                if labels.exists() {
                    data_err(path, e)
                } else {
                    data_err(labels, "no such file")
                }
            })?;
            let dims = ImageDims {
                rows: images.rows,
                cols: images.cols,
                channels: images.channels,
            };
            let mut data = binarize_images(&images, bin)?;
            if let Some(c) = classes {
                data.classes = c.to_vec();
            }
            Ok(Prepared {
                data,
                dims: Some(dims),
                text: None,
            })
        }
        Format::Text => {
            let Preprocessing::BagOfWords { vocabulary, stem } = pre else {
                bail!("text input needs a bag-of-words model");
            };
            let docs = load_text_csv(path, classes).map_err(|e| data_err(path, e))?;
            let data = booleanize_text(&docs, vocabulary, *stem)?;
            Ok(Prepared {
                data,
                dims: None,
                text: Some(docs),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bits_round_trip() {
        let d = parse_bits("# xor\n0 0 0\n0 1 1\n\n1 0 1\n1 1 0\n", None).unwrap();
        assert_eq!(d.len(), 4);
        assert_eq!(d.classes, vec!["0", "1"]);
        assert_eq!(d.labels, vec![0, 1, 1, 0]);
        assert!(d.samples[2].get(0) && !d.samples[2].get(1));
    }

    #[test]
    fn bits_errors() {
        assert!(parse_bits("", None).is_err());
        assert!(parse_bits("0 2 1\n", None).is_err());
        assert!(parse_bits("1\n", None).is_err());
        assert!(parse_bits("0 1 1\n0 1 1 0\n", None).is_err());
        let known = ["a".to_string(), "b".to_string()];
        assert!(parse_bits("0 1 c\n", Some(&known)).is_err());
    }
}
