use super::sample::{BooleanSample, LiteralBlocks};
use crate::{Error, Result};

/// Booleanized samples with integer labels into a class table.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub samples: Vec<BooleanSample>,
    pub labels: Vec<usize>,
    pub classes: Vec<String>,
}

impl Dataset {
    pub fn new(samples: Vec<BooleanSample>, labels: Vec<usize>, classes: Vec<String>) -> Result<Self> {
        if samples.len() != labels.len() {
            return Err(Error::Dimension {
                expected: samples.len(),
                found: labels.len(),
            });
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= classes.len()) {
            return Err(Error::LabelOutOfRange {
                label,
                classes: classes.len(),
            });
        }
        if let Some(first) = samples.first() {
            let width = first.features();
            if let Some(bad) = samples.iter().find(|s| s.features() != width) {
                return Err(Error::Dimension {
                    expected: width,
                    found: bad.features(),
                });
            }
        }
        Ok(Self {
            samples,
            labels,
            classes,
        })
    }

    /// Class names `"0"`, `"1"`, ... for numeric labels.
    pub fn numeric_classes(count: usize) -> Vec<String> {
        (0..count).map(|c| c.to_string()).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Feature width, if any sample exists.
    pub fn width(&self) -> Option<usize> {
        self.samples.first().map(BooleanSample::features)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BooleanSample, usize)> {
        self.samples.iter().zip(self.labels.iter().copied())
    }

    /// Splits into `[0, at)` and `[at, len)`.
    pub fn split_at(&self, at: usize) -> (Dataset, Dataset) {
        let at = at.min(self.len());
        let head = Dataset {
            samples: self.samples[..at].to_vec(),
            labels: self.labels[..at].to_vec(),
            classes: self.classes.clone(),
        };
        let tail = Dataset {
            samples: self.samples[at..].to_vec(),
            labels: self.labels[at..].to_vec(),
            classes: self.classes.clone(),
        };
        (head, tail)
    }
}

/// Samples already packed into literal blocks for a particular model shape.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EncodedDataset {
    pub inputs: Vec<LiteralBlocks>,
    pub labels: Vec<usize>,
}

impl EncodedDataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}
