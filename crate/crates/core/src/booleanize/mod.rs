//! Turning raw images and text into [`BooleanSample`](crate::BooleanSample)
//! streams, plus the dataset file formats.

mod cache;
mod idx;
mod text;
mod threshold;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cache::{read_cache, write_cache};
pub use idx::{load_idx, parse_idx, read_idx, write_idx, IdxArray};
pub use text::{
    build_vocab, load_text_csv, stem, text_to_bow, tokenize, TextDataset, Vocabulary,
};
pub use threshold::{adaptive_gaussian_threshold, gaussian_kernel, BinarizationConfig};

use crate::bits::BitVector;
use crate::tm::{BooleanSample, Dataset};
use crate::{Error, Result};

/// Preprocessing recorded with a model so later runs booleanize inputs the
/// same way.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Preprocessing {
    /// Inputs are already boolean.
    None,
    AdaptiveGaussian(BinarizationConfig),
    BagOfWords { vocabulary: Vocabulary, stem: bool },
}

/// Grayscale or multi-channel 8-bit images, stored row-major with the
/// channel innermost.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ImageDataset {
    pub rows: usize,
    pub cols: usize,
    pub channels: usize,
    pub images: Vec<Vec<u8>>,
    pub labels: Vec<usize>,
    pub classes: Vec<String>,
}

impl ImageDataset {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Extracts channel `z` of image `i` as a plane.
    pub fn plane(&self, i: usize, z: usize) -> Vec<u8> {
        self.images[i]
            .iter()
            .skip(z)
            .step_by(self.channels)
            .copied()
            .collect()
    }

    pub fn truncate(&mut self, n: usize) {
        self.images.truncate(n);
        self.labels.truncate(n);
    }
}

/// Thresholds one interleaved image channel by channel.
pub fn binarize_image(
    pixels: &[u8],
    rows: usize,
    cols: usize,
    channels: usize,
    cfg: &BinarizationConfig,
) -> Result<BooleanSample> {
    if pixels.len() != rows * cols * channels {
        return Err(Error::Dimension {
            expected: rows * cols * channels,
            found: pixels.len(),
        });
    }
    let mut bits = BitVector::zeros(pixels.len());
    for z in 0..channels {
        let plane: Vec<u8> = pixels.iter().skip(z).step_by(channels).copied().collect();
        let out = adaptive_gaussian_threshold(&plane, rows, cols, cfg)?;
        for (i, b) in out.into_iter().enumerate() {
            if b {
                bits.set(i * channels + z, true);
            }
        }
    }
    Ok(BooleanSample::new(bits))
}

/// Thresholds every image of a dataset.
pub fn binarize_images(data: &ImageDataset, cfg: &BinarizationConfig) -> Result<Dataset> {
    let samples = data
        .images
        .par_iter()
        .map(|img| binarize_image(img, data.rows, data.cols, data.channels, cfg))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(samples, data.labels.clone(), data.classes.clone())
}

/// Bag-of-words encoding of every document.
pub fn booleanize_text(data: &TextDataset, vocab: &Vocabulary, stem: bool) -> Result<Dataset> {
    let samples = data
        .documents
        .par_iter()
        .map(|doc| text_to_bow(&tokenize(doc, stem), vocab))
        .collect();
    Dataset::new(samples, data.labels.clone(), data.classes.clone())
}

/// Orders class names numerically when every name is an integer, otherwise
/// lexicographically.
pub(crate) fn sort_class_names(names: &mut Vec<String>) {
    names.sort();
    names.dedup();
    if names.iter().all(|n| n.parse::<i64>().is_ok()) {
        names.sort_by_key(|n| n.parse::<i64>().unwrap_or_default());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_names_sort_numerically() {
        let mut names = vec!["10".to_string(), "2".into(), "1".into(), "2".into()];
        sort_class_names(&mut names);
        assert_eq!(names, vec!["1", "2", "10"]);
        let mut names = vec!["neg".to_string(), "pos".into(), "mid".into()];
        sort_class_names(&mut names);
        assert_eq!(names, vec!["mid", "neg", "pos"]);
    }

    #[test]
    fn channels_threshold_independently() {
        let cfg = BinarizationConfig { window: 3, sigma: 1.0, offset: 0 };
        // 3x3 image, channel 0 has a bright centre, channel 1 is flat
        let mut pixels = vec![10u8; 18];
        pixels[4 * 2] = 200;
        let x = binarize_image(&pixels, 3, 3, 2, &cfg).unwrap();
        assert!(x.get(8));
        assert_eq!(x.bits().count_ones(), 1);
    }
}
