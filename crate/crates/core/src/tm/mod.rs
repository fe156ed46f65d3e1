//! The flat Tsetlin Machine and its multiclass wrapper.
//!
//! A [`ClassMachine`] holds the automaton states of one class
//! ([`TaStateMatrix`]) together with the derived [`ClauseBank`]. Inputs are
//! handed to machines as [`LiteralBlocks`]: one packed literal vector per
//! patch. A flat sample is simply one block, so the convolutional machine
//! reuses the same evaluation and feedback code.

mod data;
mod feedback;
mod fit;
mod machine;
mod model;
mod params;
mod sample;

pub use data::{Dataset, EncodedDataset};
pub use feedback::{
    feedback_probability, sample_sparse_bernoulli, type_i_feedback, type_ii_feedback,
};
pub use fit::{fit, FitOptions, MaskPolicy, TrainRngs};
pub use machine::{
    clause_eval, ClassMachine, ClauseBank, EvalMode, Feedback, StepOutcome, TaStateMatrix,
};
pub use model::{InputShape, MulticlassModel};
pub use params::Hyperparams;
pub use sample::{BooleanSample, LiteralBlocks, LiteralLayout};
