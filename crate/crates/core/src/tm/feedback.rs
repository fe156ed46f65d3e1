//! Per-automaton feedback rules and the feedback probability.

use rand::Rng;

use crate::{Error, Result};

/// Probability that a clause is selected for feedback given vote sum `v`.
///
/// `v` is clamped to `[-T, T]` first; the voting error is `T - v` for
/// `y = 1` and `T + v` for `y = 0`, and the result is `error / 2T`.
pub fn feedback_probability(v: i64, threshold: u32, y: bool) -> f64 {
    let t = i64::from(threshold.max(1));
    let v = v.clamp(-t, t);
    let error = if y { t - v } else { t + v };
    error as f64 / (2 * t) as f64
}

fn check_state(state: u16, half_states: u16) -> Result<()> {
    if state < 1 || u32::from(state) > 2 * u32::from(half_states) {
        return Err(Error::Invariant(format!(
            "automaton state {state} outside [1, {}]",
            2 * u32::from(half_states)
        )));
    }
    Ok(())
}

/// Type I feedback for a single automaton.
///
/// With clause and literal both 1 the state rises with probability
/// `(s-1)/s` (or always, when boosting true positives). In every other
/// case it falls with probability `1/s`. The result is clipped to `[1, 2N]`.
pub fn type_i_feedback<R: Rng + ?Sized>(
    state: u16,
    half_states: u16,
    literal: bool,
    clause_out: bool,
    specificity: f64,
    boost: bool,
    rng: &mut R,
) -> Result<u16> {
    check_state(state, half_states)?;
    let max = 2 * half_states;
    let u: f64 = rng.random();
    let next = if clause_out && literal {
        if boost || u < (specificity - 1.0) / specificity {
            state.saturating_add(1).min(max)
        } else {
            state
        }
    } else if u < 1.0 / specificity {
        state.saturating_sub(1).max(1)
    } else {
        state
    };
    Ok(next)
}

/// Type II feedback for a single automaton: deterministic penalty of an
/// excluded 0-literal in a firing clause.
pub fn type_ii_feedback(
    state: u16,
    half_states: u16,
    literal: bool,
    clause_out: bool,
) -> Result<u16> {
    check_state(state, half_states)?;
    if clause_out && !literal && state <= half_states {
        Ok((state + 1).min(2 * half_states))
    } else {
        Ok(state)
    }
}

/// Fills `words` with independent Bernoulli(`prob`) bits.
///
/// Uses geometric gaps between successes so the cost scales with the
/// number of set bits rather than the number of positions.
pub fn sample_sparse_bernoulli<R: Rng + ?Sized>(words: &mut [u64], prob: f64, rng: &mut R) {
    words.fill(0);
    if prob <= 0.0 {
        return;
    }
    if prob >= 1.0 {
        words.fill(!0);
        return;
    }
    let total = words.len() * 64;
    let ln_q = (1.0 - prob).ln();
    let mut gap = || {
        let u = 1.0 - rng.random::<f64>();
        // u in (0, 1] so the ratio is finite and non-negative.
        (u.ln() / ln_q) as usize
    };
    let mut pos = gap();
    while pos < total {
        words[pos / 64] |= 1 << (pos % 64);
        pos = pos.saturating_add(1).saturating_add(gap());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn probability_examples() {
        assert_eq!(feedback_probability(1, 2, true), 0.25);
        assert_eq!(feedback_probability(5, 5, true), 0.0);
        assert_eq!(feedback_probability(30, 10, false), 1.0);
        assert_eq!(feedback_probability(-30, 10, true), 1.0);
        assert_eq!(feedback_probability(0, 4, false), 0.5);
    }

    #[test]
    fn type_i_clips_at_floor() {
        // s barely above 1 makes the decrement almost certain.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let next = type_i_feedback(1, 10, false, false, 1.000_001, false, &mut rng).unwrap();
            assert_eq!(next, 1);
        }
    }

    #[test]
    fn type_i_boost_always_increments() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            assert_eq!(type_i_feedback(5, 10, true, true, 4.0, true, &mut rng).unwrap(), 6);
        }
        assert_eq!(type_i_feedback(20, 10, true, true, 4.0, true, &mut rng).unwrap(), 20);
    }

    #[test]
    fn type_ii_cells() {
        let n = 100;
        assert_eq!(type_ii_feedback(n, n, false, true).unwrap(), n + 1);
        assert_eq!(type_ii_feedback(n + 1, n, false, true).unwrap(), n + 1);
        assert_eq!(type_ii_feedback(n, n, true, true).unwrap(), n);
        assert_eq!(type_ii_feedback(n, n, false, false).unwrap(), n);
        assert_eq!(type_ii_feedback(3, n, true, false).unwrap(), 3);
    }

    #[test]
    fn out_of_range_state_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(type_i_feedback(0, 10, true, true, 4.0, false, &mut rng).is_err());
        assert!(type_i_feedback(21, 10, true, true, 4.0, false, &mut rng).is_err());
        assert!(type_ii_feedback(21, 10, false, true).is_err());
    }

    #[test]
    fn sparse_bernoulli_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut words = vec![0u64; 16];
        let mut ones = 0usize;
        let trials = 2000;
        for _ in 0..trials {
            sample_sparse_bernoulli(&mut words, 0.25, &mut rng);
            ones += words.iter().map(|w| w.count_ones() as usize).sum::<usize>();
        }
        let rate = ones as f64 / (trials * 16 * 64) as f64;
        assert!((rate - 0.25).abs() < 0.005, "rate {rate}");

        sample_sparse_bernoulli(&mut words, 0.0, &mut rng);
        assert!(words.iter().all(|&w| w == 0));
        sample_sparse_bernoulli(&mut words, 1.0, &mut rng);
        assert!(words.iter().all(|&w| w == !0));
    }
}
