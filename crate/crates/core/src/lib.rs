//! Tsetlin Machine learning engine with drop-clause regularization.
//!
//! The crate covers the full pipeline:
//!
//! * [`tm`]: automaton state storage, clause evaluation, vote aggregation,
//!   Type I/II feedback, weighted clauses and the multiclass wrapper.
//! * [`drop_clause`]: per-epoch Bernoulli clause masks and timing telemetry.
//! * [`conv`]: patch decomposition with thermometer-coded coordinates for the
//!   convolutional machine.
//! * [`booleanize`]: adaptive Gaussian thresholding, bag-of-words features and
//!   dataset loaders (IDX, CSV, binarized cache).
//! * [`interpret`]: clause listings, word-frequency maps and pixel heatmaps.
//! * [`eval`]: accuracy metrics, input corruptions, text perturbation and
//!   robustness reports.
//! * [`persist`]: the `TMDC` model container.

pub mod bits;
pub mod booleanize;
pub mod conv;
pub mod drop_clause;
mod error;
mod wire;
pub mod eval;
pub mod interpret;
pub mod persist;
pub mod tm;

pub use bits::BitVector;
pub use conv::{PatchGeometry, PatchSet};
pub use drop_clause::{DropMask, EpochReport};
pub use error::{Error, Result};
pub use tm::{
    BooleanSample, ClassMachine, ClauseBank, Dataset, FitOptions, Hyperparams, InputShape,
    MaskPolicy, MulticlassModel, TaStateMatrix, TrainRngs,
};
