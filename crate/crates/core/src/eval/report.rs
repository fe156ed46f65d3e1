use std::io::Write;

use serde::Serialize;

use super::metrics::evaluate;
use crate::tm::{Dataset, MulticlassModel};
use crate::{Error, Result};

/// First line of every robustness CSV.
pub const REPORT_NOTE: &str =
    "# corruptions are applied to binarized inputs, not raw pixels or raw text";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RobustnessRow {
    pub model: String,
    pub clean: f64,
    /// Mean corrupted accuracy over the draws.
    pub corrupt: f64,
    /// `clean - corrupt`.
    pub delta: f64,
    /// Sample standard deviation of the corrupted accuracy (0 for one draw).
    pub spread: f64,
    pub draws: usize,
}

/// Clean accuracy against the mean accuracy over one or more corrupted
/// versions of the same set.
pub fn robustness_report(
    name: &str,
    model: &MulticlassModel,
    clean: &Dataset,
    corrupted: &[Dataset],
) -> Result<RobustnessRow> {
    if corrupted.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let clean_acc = evaluate(model, clean)?.accuracy;
    let accs = corrupted
        .iter()
        .map(|d| {
            if d.len() != clean.len() {
                return Err(Error::Dimension {
                    expected: clean.len(),
                    found: d.len(),
                });
            }
            Ok(evaluate(model, d)?.accuracy)
        })
        .collect::<Result<Vec<_>>>()?;
    let n = accs.len() as f64;
    let mean = accs.iter().sum::<f64>() / n;
    let spread = if accs.len() > 1 {
        (accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(RobustnessRow {
        model: name.to_string(),
        clean: clean_acc,
        corrupt: mean,
        delta: clean_acc - mean,
        spread,
        draws: accs.len(),
    })
}

pub fn write_robustness_csv<W: Write>(rows: &[RobustnessRow], mut out: W) -> Result<()> {
    writeln!(out, "{REPORT_NOTE}")?;
    writeln!(out, "model,clean,corrupt,delta,spread,draws")?;
    for r in rows {
        writeln!(
            out,
            "{},{:.6},{:.6},{:.6},{:.6},{}",
            r.model, r.clean, r.corrupt, r.delta, r.spread, r.draws
        )?;
    }
    Ok(())
}
