use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{Dataset, EncodedDataset};
use super::fit::{fit, FitOptions, TrainRngs};
use super::machine::{ClassMachine, EvalMode};
use super::params::Hyperparams;
use super::sample::{BooleanSample, LiteralBlocks, LiteralLayout};
use crate::booleanize::Preprocessing;
use crate::conv::{extract_patches, PatchGeometry};
use crate::drop_clause::EpochReport;
use crate::{Error, Result};

/// How a booleanized sample is presented to the clauses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InputShape {
    /// Clauses see the whole sample as one literal vector.
    Flat { features: usize },
    /// Clauses see each patch of an image and OR the results.
    Conv(PatchGeometry),
}

impl InputShape {
    /// Width of the booleanized sample this shape accepts.
    pub fn sample_width(&self) -> usize {
        match self {
            InputShape::Flat { features } => *features,
            InputShape::Conv(g) => g.image_bits(),
        }
    }

    /// Layout of one literal block.
    pub fn layout(&self) -> LiteralLayout {
        match self {
            InputShape::Flat { features } => LiteralLayout::new(*features),
            InputShape::Conv(g) => g.layout(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InputShape::Flat { features } if *features == 0 => {
                Err(Error::param("feature count must be positive"))
            }
            InputShape::Flat { .. } => Ok(()),
            InputShape::Conv(g) => g.validate(),
        }
    }

    pub fn encode(&self, sample: &BooleanSample) -> Result<LiteralBlocks> {
        match self {
            InputShape::Flat { .. } => sample.encode(&self.layout()),
            InputShape::Conv(g) => Ok(extract_patches(sample, g)?.encode()),
        }
    }
}

/// One machine per class, or a single machine for a two-class problem.
///
/// A binary model predicts class 1 when its vote sum is `>= 0`. With more
/// machines the prediction is the argmax of the per-class vote sums, ties
/// going to the lowest class index. Inference never applies a drop mask.
#[derive(Clone, Debug, PartialEq)]
pub struct MulticlassModel {
    params: Hyperparams,
    shape: InputShape,
    classes: Vec<String>,
    machines: Vec<ClassMachine>,
    preprocessing: Preprocessing,
}

impl MulticlassModel {
    /// Fresh model with every automaton at `N`. Two classes get a single
    /// binary machine unless `one_vs_rest` is set.
    pub fn new(
        params: Hyperparams,
        shape: InputShape,
        classes: Vec<String>,
        one_vs_rest: bool,
    ) -> Result<Self> {
        params.validate()?;
        shape.validate()?;
        if classes.len() < 2 {
            return Err(Error::param(format!(
                "need at least two classes, got {}",
                classes.len()
            )));
        }
        let count = if classes.len() == 2 && !one_vs_rest {
            1
        } else {
            classes.len()
        };
        let layout = shape.layout();
        let machines = (0..count)
            .map(|_| ClassMachine::new(params.clauses, layout.clone(), params.states))
            .collect();
        Ok(Self {
            params,
            shape,
            classes,
            machines,
            preprocessing: Preprocessing::None,
        })
    }

    /// Reassembles a model, checking that every machine matches the shape.
    pub fn from_parts(
        params: Hyperparams,
        shape: InputShape,
        classes: Vec<String>,
        machines: Vec<ClassMachine>,
        preprocessing: Preprocessing,
    ) -> Result<Self> {
        params.validate()?;
        shape.validate()?;
        let expected = if classes.len() == 2 {
            [1, 2]
        } else {
            [classes.len(), classes.len()]
        };
        if machines.is_empty() {
            return Err(Error::Uninitialized);
        }
        if !expected.contains(&machines.len()) {
            return Err(Error::Dimension {
                expected: classes.len(),
                found: machines.len(),
            });
        }
        let layout = shape.layout();
        for m in &machines {
            if m.layout() != &layout || m.clauses() != params.clauses {
                return Err(Error::Dimension {
                    expected: layout.literals(),
                    found: m.layout().literals(),
                });
            }
            if m.states().half_states() != params.states {
                return Err(Error::Invariant("machine state count differs from N".into()));
            }
        }
        Ok(Self {
            params,
            shape,
            classes,
            machines,
            preprocessing,
        })
    }

    pub fn params(&self) -> &Hyperparams {
        &self.params
    }

    pub fn shape(&self) -> &InputShape {
        &self.shape
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn machines(&self) -> &[ClassMachine] {
        &self.machines
    }

    pub(crate) fn machines_mut(&mut self) -> &mut [ClassMachine] {
        &mut self.machines
    }

    pub fn is_binary(&self) -> bool {
        self.machines.len() == 1
    }

    /// Machine that votes for `class`: the class's own machine, or the single
    /// machine of a binary model.
    pub fn machine_index(&self, class: usize) -> Result<usize> {
        if class >= self.classes.len() {
            return Err(Error::LabelOutOfRange {
                label: class,
                classes: self.classes.len(),
            });
        }
        Ok(if self.is_binary() { 0 } else { class })
    }

    pub fn preprocessing(&self) -> &Preprocessing {
        &self.preprocessing
    }

    pub fn set_preprocessing(&mut self, preprocessing: Preprocessing) {
        self.preprocessing = preprocessing;
    }

    pub fn encode(&self, sample: &BooleanSample) -> Result<LiteralBlocks> {
        if sample.features() != self.shape.sample_width() {
            return Err(Error::Dimension {
                expected: self.shape.sample_width(),
                found: sample.features(),
            });
        }
        self.shape.encode(sample)
    }

    pub fn encode_dataset(&self, data: &Dataset) -> Result<EncodedDataset> {
        if let Some(&label) = data.labels.iter().find(|&&l| l >= self.classes.len()) {
            return Err(Error::LabelOutOfRange {
                label,
                classes: self.classes.len(),
            });
        }
        let inputs = data
            .samples
            .par_iter()
            .map(|s| self.encode(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(EncodedDataset {
            inputs,
            labels: data.labels.clone(),
        })
    }

    /// Inference vote sum of every machine.
    pub fn class_votes(&self, input: &LiteralBlocks) -> Vec<i64> {
        self.machines
            .iter()
            .map(|m| m.vote_unchecked(input, None, EvalMode::Infer))
            .collect()
    }

    /// Prediction for an encoded input.
    pub fn predict(&self, input: &LiteralBlocks) -> usize {
        let votes = self.class_votes(input);
        if self.is_binary() {
            usize::from(0 <= votes[0])
        } else {
            argmax_lowest(&votes)
        }
    }

    pub fn classify(&self, sample: &BooleanSample) -> Result<usize> {
        if self.machines.is_empty() {
            return Err(Error::Uninitialized);
        }
        let input = self.encode(sample)?;
        Ok(self.predict(&input))
    }

    pub fn predict_all(&self, data: &EncodedDataset) -> Vec<usize> {
        data.inputs.par_iter().map(|x| self.predict(x)).collect()
    }

    /// Trains with the model's own hyperparameters and seed.
    pub fn fit(&mut self, train: &Dataset, validation: Option<&Dataset>) -> Result<Vec<EpochReport>> {
        let train = self.encode_dataset(train)?;
        let validation = validation.map(|v| self.encode_dataset(v)).transpose()?;
        let options = FitOptions::from_params(&self.params);
        let mut rngs = TrainRngs::from_seed(self.params.seed);
        fit(self, &train, validation.as_ref(), &options, &mut rngs)
    }
}

/// Index of the largest value; ties resolve to the lowest index.
pub(crate) fn argmax_lowest(values: &[i64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
