use serde::Serialize;

use super::top_clauses;
use crate::booleanize::Preprocessing;
use crate::conv::PatchFeature;
use crate::tm::{InputShape, MulticlassModel};
use crate::Result;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClauseEntry {
    pub clause: usize,
    /// Vote this clause casts for the reported class when it fires.
    pub weight: i64,
    pub literals: Vec<String>,
}

impl ClauseEntry {
    /// `7 · (x1 ∧ ¬x2)`, or `7 · TRUE (empty)` for a clause with no literals.
    pub fn render(&self) -> String {
        if self.literals.is_empty() {
            format!("{} · TRUE (empty)", self.weight)
        } else {
            format!("{} · ({})", self.weight, self.literals.join(" ∧ "))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClauseReport {
    pub class: usize,
    pub k: usize,
    pub entries: Vec<ClauseEntry>,
}

impl ClauseReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One rendered clause per line.
    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|e| format!("clause {}: {}\n", e.clause, e.render()))
            .collect()
    }
}

/// Human-readable name of literal `k` (features first, then negations).
///
/// Flat models name features `x1..xo`, bag-of-words models use vocabulary
/// tokens, and convolutional models name pixels `p(row,col)` relative to the
/// patch origin plus coordinate bits `row>t` / `col>t`.
pub fn literal_name(model: &MulticlassModel, k: usize) -> String {
    let features = model.shape().layout().features();
    let (feature, negated) = if k < features {
        (k, false)
    } else {
        (k - features, true)
    };
    match model.shape() {
        InputShape::Conv(g) => match g.feature(feature) {
            PatchFeature::Pixel { dr, dc, channel } => {
                let name = if g.channels > 1 {
                    format!("p({dr},{dc},{channel})")
                } else {
                    format!("p({dr},{dc})")
                };
                if negated {
                    format!("¬{name}")
                } else {
                    name
                }
            }
            PatchFeature::RowAbove(t) if negated => format!("row≤{t}"),
            PatchFeature::RowAbove(t) => format!("row>{t}"),
            PatchFeature::ColAbove(t) if negated => format!("col≤{t}"),
            PatchFeature::ColAbove(t) => format!("col>{t}"),
        },
        InputShape::Flat { .. } => {
            let name = match model.preprocessing() {
                Preprocessing::BagOfWords { vocabulary, .. } if feature < vocabulary.len() => {
                    vocabulary.token(feature).to_string()
                }
                _ => format!("x{}", feature + 1),
            };
            if negated {
                format!("¬{name}")
            } else {
                name
            }
        }
    }
}

/// The `k` highest-voting clauses of `class`; `k` beyond the clause count is
/// truncated.
pub fn export_clauses(model: &MulticlassModel, class: usize, k: usize) -> Result<ClauseReport> {
    let (m, sign, order) = top_clauses(model, class, k)?;
    let machine = &model.machines()[m];
    let entries = order
        .iter()
        .map(|&j| ClauseEntry {
            clause: j,
            weight: sign * machine.bank().signed_weight(j),
            literals: machine
                .bank()
                .included_literals(j, machine.layout())
                .into_iter()
                .map(|lit| literal_name(model, lit))
                .collect(),
        })
        .collect::<Vec<_>>();
    Ok(ClauseReport {
        class,
        k: entries.len(),
        entries,
    })
}
