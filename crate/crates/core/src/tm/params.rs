use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Training configuration shared by every machine of a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Clauses per class `n`; even, half of each polarity.
    pub clauses: usize,
    /// Voting margin `T`.
    pub threshold: u32,
    /// Specificity `s`.
    pub specificity: f64,
    /// States per action side `N`; automata live in `[1, 2N]`.
    pub states: u16,
    /// Replace the Type Ia probability `(s-1)/s` with 1.
    pub boost_true_positive: bool,
    /// Learn integer clause weights.
    pub weighted: bool,
    /// Drop probability `p` for per-epoch clause masks.
    pub drop_clause: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            clauses: 20,
            threshold: 10,
            specificity: 3.9,
            states: 128,
            boost_true_positive: false,
            weighted: false,
            drop_clause: 0.0,
            epochs: 100,
            seed: 42,
        }
    }
}

impl Hyperparams {
    pub const MAX_STATES: u16 = i16::MAX as u16;

    pub fn validate(&self) -> Result<()> {
        if self.clauses < 2 || self.clauses % 2 != 0 {
            return Err(Error::param(format!(
                "clause count must be even and >= 2, got {}",
                self.clauses
            )));
        }
        if self.threshold < 1 {
            return Err(Error::param("voting margin T must be >= 1"));
        }
        if !(self.specificity > 1.0) || !self.specificity.is_finite() {
            return Err(Error::param(format!(
                "specificity s must be > 1, got {}",
                self.specificity
            )));
        }
        if self.states < 1 || self.states > Self::MAX_STATES {
            return Err(Error::param(format!(
                "states N must be in 1..={}, got {}",
                Self::MAX_STATES,
                self.states
            )));
        }
        if !(0.0..=1.0).contains(&self.drop_clause) {
            return Err(Error::param(format!(
                "drop probability must be in [0, 1], got {}",
                self.drop_clause
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_values() {
        let ok = Hyperparams::default();
        assert!(ok.validate().is_ok());
        for bad in [
            Hyperparams { clauses: 3, ..ok.clone() },
            Hyperparams { threshold: 0, ..ok.clone() },
            Hyperparams { specificity: 1.0, ..ok.clone() },
            Hyperparams { specificity: f64::NAN, ..ok.clone() },
            Hyperparams { states: 0, ..ok.clone() },
            Hyperparams { drop_clause: 1.5, ..ok.clone() },
            Hyperparams { drop_clause: f64::NAN, ..ok.clone() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }
}
