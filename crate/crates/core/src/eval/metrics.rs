use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::tm::{Dataset, EncodedDataset, MulticlassModel};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metrics {
    pub samples: usize,
    pub accuracy: f64,
    /// `None` for classes absent from the dataset.
    pub per_class: Vec<Option<f64>>,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    /// Mean wall time to encode and classify one sample.
    pub mean_inference_seconds: f64,
}

impl Metrics {
    fn from_predictions(classes: usize, labels: &[usize], predicted: &[usize], seconds: f64) -> Self {
        let mut confusion = vec![vec![0usize; classes]; classes];
        for (&y, &p) in labels.iter().zip(predicted) {
            confusion[y][p] += 1;
        }
        let correct: usize = (0..classes).map(|c| confusion[c][c]).sum();
        let per_class = confusion
            .iter()
            .enumerate()
            .map(|(c, row)| {
                let n: usize = row.iter().sum();
                (n > 0).then(|| row[c] as f64 / n as f64)
            })
            .collect();
        Self {
            samples: labels.len(),
            accuracy: correct as f64 / labels.len() as f64,
            per_class,
            confusion,
            mean_inference_seconds: seconds / labels.len() as f64,
        }
    }

    pub fn correct(&self) -> usize {
        (0..self.confusion.len()).map(|c| self.confusion[c][c]).sum()
    }
}

pub fn evaluate(model: &MulticlassModel, data: &Dataset) -> Result<Metrics> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_labels(model, &data.labels)?;
    let timed = data
        .samples
        .par_iter()
        .map(|s| {
            let start = Instant::now();
            let p = model.classify(s)?;
            Ok((p, start.elapsed().as_secs_f64()))
        })
        .collect::<Result<Vec<_>>>()?;
    let (predicted, times): (Vec<usize>, Vec<f64>) = timed.into_iter().unzip();
    Ok(Metrics::from_predictions(
        model.classes().len(),
        &data.labels,
        &predicted,
        times.iter().sum(),
    ))
}

/// Same as [`evaluate`] on inputs already encoded for `model`; the timing
/// then covers classification only.
pub fn evaluate_encoded(model: &MulticlassModel, data: &EncodedDataset) -> Result<Metrics> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    check_labels(model, &data.labels)?;
    let timed: Vec<(usize, f64)> = data
        .inputs
        .par_iter()
        .map(|x| {
            let start = Instant::now();
            let p = model.predict(x);
            (p, start.elapsed().as_secs_f64())
        })
        .collect();
    let (predicted, times): (Vec<usize>, Vec<f64>) = timed.into_iter().unzip();
    Ok(Metrics::from_predictions(
        model.classes().len(),
        &data.labels,
        &predicted,
        times.iter().sum(),
    ))
}

fn check_labels(model: &MulticlassModel, labels: &[usize]) -> Result<()> {
    match labels.iter().find(|&&l| l >= model.classes().len()) {
        Some(&label) => Err(Error::LabelOutOfRange {
            label,
            classes: model.classes().len(),
        }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_predictor_on_balanced_set() {
        let labels: Vec<usize> = (0..100).map(|i| i % 10).collect();
        let m = Metrics::from_predictions(10, &labels, &[3; 100], 1.0);
        assert!((m.accuracy - 0.1).abs() < 1e-12);
        assert_eq!(m.per_class[3], Some(1.0));
        assert_eq!(m.per_class[0], Some(0.0));
        for (c, row) in m.confusion.iter().enumerate() {
            let n = labels.iter().filter(|&&l| l == c).count();
            assert_eq!(row.iter().sum::<usize>(), n);
        }
        assert!((m.mean_inference_seconds - 0.01).abs() < 1e-12);
    }

    #[test]
    fn absent_class_has_no_accuracy() {
        let m = Metrics::from_predictions(3, &[0], &[0], 0.0);
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.per_class, vec![Some(1.0), None, None]);
    }
}
