//! Clause listings, word-frequency maps and pixel heatmaps.
//!
//! Clauses of a class are ranked by the vote they cast for that class:
//! polarity times weight, negated for class 0 of a binary model (whose single
//! machine votes for class 1). Ties go to the lower clause index.

mod clauses;
mod frequency;
mod heatmap;

pub use clauses::{export_clauses, literal_name, ClauseEntry, ClauseReport};
pub use frequency::{word_frequency_map, FeatureFrequency, LiteralCount};
pub use heatmap::{clause_heatmap, heatmap, Heatmap};

use crate::tm::MulticlassModel;
use crate::Result;

/// Sign applied to a machine's votes when reading them as votes for `class`.
pub fn class_sign(model: &MulticlassModel, class: usize) -> Result<i64> {
    model.machine_index(class)?;
    Ok(if model.is_binary() && class == 0 { -1 } else { 1 })
}

/// Machine index, sign, and the clause indices of `class` ordered by
/// signed weight (descending, ties by index), truncated to `k`.
pub fn top_clauses(model: &MulticlassModel, class: usize, k: usize) -> Result<(usize, i64, Vec<usize>)> {
    let m = model.machine_index(class)?;
    let sign = class_sign(model, class)?;
    let bank = model.machines()[m].bank();
    let mut order: Vec<usize> = (0..bank.len()).collect();
    order.sort_by_key(|&j| (std::cmp::Reverse(sign * bank.signed_weight(j)), j));
    order.truncate(k);
    Ok((m, sign, order))
}
