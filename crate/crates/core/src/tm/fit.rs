use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::data::EncodedDataset;
use super::model::MulticlassModel;
use super::params::Hyperparams;
use crate::drop_clause::{DropMask, EpochReport};
use crate::{Error, Result};

/// Whether epochs draw clause masks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MaskPolicy {
    /// Plain training: no masks are ever constructed.
    Never,
    /// Draw one mask per class per epoch with drop probability `p`.
    DropClause(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitOptions {
    pub epochs: usize,
    pub masks: MaskPolicy,
}

impl FitOptions {
    /// Uses drop-clause masks whenever `p > 0`.
    pub fn from_params(params: &Hyperparams) -> Self {
        Self {
            epochs: params.epochs,
            masks: if params.drop_clause > 0.0 {
                MaskPolicy::DropClause(params.drop_clause)
            } else {
                MaskPolicy::Never
            },
        }
    }
}

/// Independent random streams for feedback, mask sampling, and sample order.
///
/// Keeping masks on their own stream means a `p = 0` run consumes exactly
/// the same feedback randomness as a run that never builds masks.
#[derive(Clone, Debug)]
pub struct TrainRngs {
    pub feedback: ChaCha8Rng,
    pub masks: ChaCha8Rng,
    pub order: ChaCha8Rng,
}

impl TrainRngs {
    pub fn from_seed(seed: u64) -> Self {
        let stream = |id: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(id);
            rng
        };
        Self {
            feedback: stream(1),
            masks: stream(2),
            order: stream(3),
        }
    }
}

/// Trains `model` for `options.epochs` epochs.
///
/// Each sample of class `c` trains machine `c` towards `y = 1` and one
/// uniformly drawn other machine towards `y = 0`; a binary model trains its
/// single machine towards the label.
pub fn fit(
    model: &mut MulticlassModel,
    train: &EncodedDataset,
    validation: Option<&EncodedDataset>,
    options: &FitOptions,
    rngs: &mut TrainRngs,
) -> Result<Vec<EpochReport>> {
    fit_observed(model, train, validation, options, rngs, |_, _, _| {})
}

/// [`fit`] calling `observe(epoch, machine, mask)` before every training step.
pub(crate) fn fit_observed<F>(
    model: &mut MulticlassModel,
    train: &EncodedDataset,
    validation: Option<&EncodedDataset>,
    options: &FitOptions,
    rngs: &mut TrainRngs,
    mut observe: F,
) -> Result<Vec<EpochReport>>
where
    F: FnMut(usize, usize, Option<&DropMask>),
{
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let classes = model.classes().len();
    if let Some(&label) = train.labels.iter().find(|&&l| l >= classes) {
        return Err(Error::LabelOutOfRange { label, classes });
    }
    let block_words = model.shape().layout().block_words();
    if let Some(bad) = train.inputs.iter().find(|x| x.block_words() != block_words) {
        return Err(Error::Dimension {
            expected: block_words,
            found: bad.block_words(),
        });
    }
    if let MaskPolicy::DropClause(p) = options.masks {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param(format!("drop probability {p} outside [0, 1]")));
        }
    }

    let params = model.params().clone();
    let binary = model.is_binary();
    let machine_count = model.machines().len();
    let mut order: Vec<usize> = Vec::with_capacity(train.len());
    let mut reports = Vec::with_capacity(options.epochs);

    for epoch in 1..=options.epochs {
        let masks = match options.masks {
            MaskPolicy::Never => None,
            MaskPolicy::DropClause(p) => Some(
                (0..machine_count)
                    .map(|_| DropMask::sample(params.clauses, p, epoch, &mut rngs.masks))
                    .collect::<Result<Vec<_>>>()?,
            ),
        };
        let mask_of = |m: usize| masks.as_ref().map(|all| &all[m]);

        order.clear();
        order.extend(0..train.len());
        order.shuffle(&mut rngs.order);

        let start = Instant::now();
        for &i in &order {
            let x = &train.inputs[i];
            let label = train.labels[i];
            let machines = model.machines_mut();
            if binary {
                observe(epoch, 0, mask_of(0));
                machines[0].train_step(x, label == 1, mask_of(0), &params, &mut rngs.feedback)?;
            } else {
                observe(epoch, label, mask_of(label));
                machines[label].train_step(x, true, mask_of(label), &params, &mut rngs.feedback)?;
                let mut other = rngs.order.random_range(0..machine_count - 1);
                if other >= label {
                    other += 1;
                }
                observe(epoch, other, mask_of(other));
                machines[other].train_step(x, false, mask_of(other), &params, &mut rngs.feedback)?;
            }
        }
        let seconds = start.elapsed().as_secs_f64();

        let active_fraction = masks.as_ref().map_or(1.0, |all| {
            all.iter().map(DropMask::active_fraction).sum::<f64>() / all.len() as f64
        });
        let validation_accuracy = validation.map(|v| accuracy(model, v));
        reports.push(EpochReport {
            epoch,
            active_fraction,
            seconds,
            validation_accuracy,
        });
    }
    Ok(reports)
}

fn accuracy(model: &MulticlassModel, data: &EncodedDataset) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let predictions = model.predict_all(data);
    let correct = predictions
        .iter()
        .zip(&data.labels)
        .filter(|(p, l)| p == l)
        .count();
    correct as f64 / data.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tm::{BooleanSample, Dataset, InputShape};

    fn xor_data() -> Dataset {
        let samples = [[0u8, 0], [0, 1], [1, 0], [1, 1]]
            .iter()
            .map(|b| BooleanSample::from_bytes(b))
            .collect();
        Dataset::new(samples, vec![0, 1, 1, 0], Dataset::numeric_classes(2)).unwrap()
    }

    fn random_data(n: usize, width: usize, classes: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..n)
            .map(|_| {
                let bits: Vec<u8> = (0..width).map(|_| rng.random_range(0..2)).collect();
                BooleanSample::from_bytes(&bits)
            })
            .collect();
        let labels = (0..n).map(|_| rng.random_range(0..classes)).collect();
        Dataset::new(samples, labels, Dataset::numeric_classes(classes)).unwrap()
    }

    fn model_for(data: &Dataset, params: Hyperparams) -> MulticlassModel {
        MulticlassModel::new(
            params,
            InputShape::Flat {
                features: data.width().unwrap(),
            },
            data.classes.clone(),
            false,
        )
        .unwrap()
    }

    #[test]
    fn xor_is_learned() {
        let data = xor_data();
        let params = Hyperparams {
            clauses: 20,
            threshold: 10,
            specificity: 3.9,
            states: 128,
            epochs: 100,
            seed: 1,
            ..Hyperparams::default()
        };
        let mut model = model_for(&data, params);
        model.fit(&data, None).unwrap();
        for (x, y) in data.iter() {
            assert_eq!(model.classify(x).unwrap(), y);
        }
    }

    #[test]
    fn zero_drop_matches_plain_training() {
        let data = random_data(300, 12, 3, 5);
        let params = Hyperparams {
            clauses: 10,
            threshold: 5,
            epochs: 3,
            ..Hyperparams::default()
        };
        let mut plain = model_for(&data, params.clone());
        let mut masked = plain.clone();
        let enc = plain.encode_dataset(&data).unwrap();
        let opts = |masks| FitOptions { epochs: 3, masks };
        fit(&mut plain, &enc, None, &opts(MaskPolicy::Never), &mut TrainRngs::from_seed(9)).unwrap();
        let reports = fit(
            &mut masked,
            &enc,
            None,
            &opts(MaskPolicy::DropClause(0.0)),
            &mut TrainRngs::from_seed(9),
        )
        .unwrap();
        assert_eq!(plain, masked);
        assert!(reports.iter().all(|r| r.active_fraction == 1.0));
    }

    #[test]
    fn empty_dataset_is_rejected_and_model_unchanged() {
        let data = xor_data();
        let mut model = model_for(&data, Hyperparams { epochs: 1, ..Hyperparams::default() });
        let before = model.clone();
        let empty = Dataset::new(vec![], vec![], data.classes.clone()).unwrap();
        assert!(matches!(model.fit(&empty, None), Err(Error::EmptyDataset)));
        assert_eq!(model, before);
    }

    #[test]
    fn label_outside_table_is_rejected() {
        let data = xor_data();
        let mut model = model_for(&data, Hyperparams::default());
        let mut enc = model.encode_dataset(&data).unwrap();
        enc.labels[0] = 7;
        let err = fit(
            &mut model,
            &enc,
            None,
            &FitOptions { epochs: 1, masks: MaskPolicy::Never },
            &mut TrainRngs::from_seed(0),
        );
        assert!(matches!(err, Err(Error::LabelOutOfRange { label: 7, .. })));
    }

    #[test]
    fn masks_are_fixed_within_an_epoch() {
        let data = random_data(200, 8, 4, 1);
        let mut model = model_for(&data, Hyperparams { clauses: 16, ..Hyperparams::default() });
        let enc = model.encode_dataset(&data).unwrap();
        let mut seen: std::collections::HashMap<(usize, usize), (*const DropMask, DropMask)> =
            Default::default();
        let mut steps = 0;
        let reports = fit_observed(
            &mut model,
            &enc,
            None,
            &FitOptions { epochs: 4, masks: MaskPolicy::DropClause(0.5) },
            &mut TrainRngs::from_seed(3),
            |epoch, machine, mask| {
                let mask = mask.expect("drop-clause run builds masks");
                steps += 1;
                let entry = seen
                    .entry((epoch, machine))
                    .or_insert_with(|| (mask as *const _, mask.clone()));
                assert_eq!(entry.0, mask as *const _);
                assert_eq!(&entry.1, mask);
                assert_eq!(mask.epoch(), epoch);
            },
        )
        .unwrap();
        assert_eq!(steps, 4 * 200 * 2);
        assert_eq!(reports.len(), 4);
        // consecutive epochs draw fresh masks
        assert_ne!(seen[&(1, 0)].1, seen[&(2, 0)].1);
    }

    #[test]
    fn same_seed_same_model() {
        let data = random_data(200, 10, 3, 2);
        let params = Hyperparams { clauses: 8, epochs: 2, drop_clause: 0.3, ..Hyperparams::default() };
        let mut a = model_for(&data, params.clone());
        let mut b = model_for(&data, params);
        a.fit(&data, None).unwrap();
        b.fit(&data, None).unwrap();
        assert_eq!(a, b);
    }
}
