use rand::Rng;

use super::feedback::{feedback_probability, sample_sparse_bernoulli};
use super::params::Hyperparams;
use super::sample::{BooleanSample, LiteralBlocks, LiteralLayout};
use crate::bits::iter_set_bits;
use crate::drop_clause::DropMask;
use crate::{Error, Result};

/// Whether empty clauses (no included literal) output 1 or 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalMode {
    /// Empty clauses output 1 so they can start memorizing.
    Train,
    /// Empty clauses output 0 and cast no vote.
    Infer,
}

/// Reference evaluation of one clause from its raw automaton states.
///
/// Returns the conjunction over `k` of `include(a_k) => literal_k`.
pub fn clause_eval(
    ta_row: &[u16],
    half_states: u16,
    sample: &BooleanSample,
    mode: EvalMode,
) -> Result<bool> {
    if ta_row.len() != 2 * sample.features() {
        return Err(Error::Dimension {
            expected: 2 * sample.features(),
            found: ta_row.len(),
        });
    }
    let mut any_included = false;
    for (k, &state) in ta_row.iter().enumerate() {
        if state > half_states {
            any_included = true;
            if !sample.literal(k) {
                return Ok(false);
            }
        }
    }
    Ok(any_included || mode == EvalMode::Train)
}

/// The `n x 2o` automaton state matrix of one class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaStateMatrix {
    clauses: usize,
    literals: usize,
    half_states: u16,
    states: Vec<u16>,
}

impl TaStateMatrix {
    /// Every automaton starts at `N`, the last Exclude state.
    pub fn new(clauses: usize, literals: usize, half_states: u16) -> Self {
        Self {
            clauses,
            literals,
            half_states,
            states: vec![half_states; clauses * literals],
        }
    }

    /// Wraps raw states, checking shape and the `[1, 2N]` bound.
    pub fn from_raw(
        clauses: usize,
        literals: usize,
        half_states: u16,
        states: Vec<u16>,
    ) -> Result<Self> {
        if states.len() != clauses * literals {
            return Err(Error::Dimension {
                expected: clauses * literals,
                found: states.len(),
            });
        }
        let max = 2 * u32::from(half_states);
        if let Some((i, &a)) = states
            .iter()
            .enumerate()
            .find(|(_, &a)| a < 1 || u32::from(a) > max)
        {
            return Err(Error::Invariant(format!(
                "state {a} at ({}, {}) outside [1, {max}]",
                i / literals.max(1),
                i % literals.max(1)
            )));
        }
        Ok(Self {
            clauses,
            literals,
            half_states,
            states,
        })
    }

    #[inline]
    pub fn clauses(&self) -> usize {
        self.clauses
    }

    #[inline]
    pub fn literals(&self) -> usize {
        self.literals
    }

    /// `N`, the number of states per action.
    #[inline]
    pub fn half_states(&self) -> u16 {
        self.half_states
    }

    #[inline]
    pub fn get(&self, clause: usize, literal: usize) -> u16 {
        self.states[clause * self.literals + literal]
    }

    #[inline]
    pub fn row(&self, clause: usize) -> &[u16] {
        &self.states[clause * self.literals..(clause + 1) * self.literals]
    }

    #[inline]
    pub fn as_slice(&self) -> &[u16] {
        &self.states
    }

    /// Include action `g(a) = a > N`.
    #[inline]
    pub fn includes(&self, clause: usize, literal: usize) -> bool {
        self.get(clause, literal) > self.half_states
    }

    pub fn in_bounds(&self) -> bool {
        let max = 2 * self.half_states;
        self.states.iter().all(|&a| (1..=max).contains(&a))
    }
}

/// Clause polarity, weights, and the packed include view derived from the
/// state matrix.
///
/// With 1-based indexing odd clauses vote for the class and even clauses
/// against it, so 0-based index `j` is positive when `j` is even.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClauseBank {
    weights: Vec<u32>,
    include: Vec<u64>,
    block_words: usize,
}

impl ClauseBank {
    /// Recomputes the include view from `states`.
    pub fn derive(states: &TaStateMatrix, layout: &LiteralLayout, weights: Vec<u32>) -> Self {
        let block_words = layout.block_words();
        let mut include = vec![0u64; states.clauses() * block_words];
        for j in 0..states.clauses() {
            let row = &mut include[j * block_words..(j + 1) * block_words];
            for k in 0..states.literals() {
                if states.includes(j, k) {
                    let p = layout.position_of(k);
                    row[p / 64] |= 1 << (p % 64);
                }
            }
        }
        Self {
            weights,
            include,
            block_words,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn polarity(clause: usize) -> i32 {
        if clause % 2 == 0 {
            1
        } else {
            -1
        }
    }

    #[inline]
    pub fn weight(&self, clause: usize) -> u32 {
        self.weights[clause]
    }

    /// Polarity times weight.
    #[inline]
    pub fn signed_weight(&self, clause: usize) -> i64 {
        i64::from(Self::polarity(clause)) * i64::from(self.weights[clause])
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    #[inline]
    pub fn include_row(&self, clause: usize) -> &[u64] {
        &self.include[clause * self.block_words..(clause + 1) * self.block_words]
    }

    /// Literal indices included by `clause`, ascending.
    pub fn included_literals(&self, clause: usize, layout: &LiteralLayout) -> Vec<usize> {
        let mut lits: Vec<usize> = iter_set_bits(self.include_row(clause))
            .map(|p| layout.literal_of(p))
            .collect();
        lits.sort_unstable();
        lits
    }

    pub fn is_empty_clause(&self, clause: usize) -> bool {
        self.include_row(clause).iter().all(|&w| w == 0)
    }
}

/// Kind of feedback a clause received in a training step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Feedback {
    TypeI { fired: bool },
    TypeII { fired: bool },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOutcome {
    pub vote: i64,
    pub probability: f64,
    /// Clauses selected for feedback.
    pub selected: usize,
}

/// State matrix plus clause bank for one class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassMachine {
    layout: LiteralLayout,
    states: TaStateMatrix,
    bank: ClauseBank,
}

impl ClassMachine {
    pub fn new(clauses: usize, layout: LiteralLayout, half_states: u16) -> Self {
        let states = TaStateMatrix::new(clauses, layout.literals(), half_states);
        let bank = ClauseBank::derive(&states, &layout, vec![1; clauses]);
        Self {
            layout,
            states,
            bank,
        }
    }

    pub fn from_parts(layout: LiteralLayout, states: TaStateMatrix, weights: Vec<u32>) -> Result<Self> {
        if states.literals() != layout.literals() {
            return Err(Error::Dimension {
                expected: layout.literals(),
                found: states.literals(),
            });
        }
        if weights.len() != states.clauses() {
            return Err(Error::Dimension {
                expected: states.clauses(),
                found: weights.len(),
            });
        }
        if weights.contains(&0) {
            return Err(Error::Invariant("clause weight below 1".into()));
        }
        let bank = ClauseBank::derive(&states, &layout, weights);
        Ok(Self {
            layout,
            states,
            bank,
        })
    }

    #[inline]
    pub fn clauses(&self) -> usize {
        self.states.clauses()
    }

    #[inline]
    pub fn layout(&self) -> &LiteralLayout {
        &self.layout
    }

    #[inline]
    pub fn states(&self) -> &TaStateMatrix {
        &self.states
    }

    #[inline]
    pub fn bank(&self) -> &ClauseBank {
        &self.bank
    }

    /// Overwrites one automaton, keeping the include view in sync.
    pub fn set_state(&mut self, clause: usize, literal: usize, state: u16) -> Result<()> {
        let max = 2 * self.states.half_states;
        if !(1..=max).contains(&state) {
            return Err(Error::Invariant(format!("state {state} outside [1, {max}]")));
        }
        let idx = clause * self.states.literals + literal;
        self.states.states[idx] = state;
        let p = self.layout.position_of(literal);
        let word = &mut self.bank.include[clause * self.bank.block_words + p / 64];
        if state > self.states.half_states {
            *word |= 1 << (p % 64);
        } else {
            *word &= !(1 << (p % 64));
        }
        Ok(())
    }

    pub fn set_weight(&mut self, clause: usize, weight: u32) -> Result<()> {
        if weight == 0 {
            return Err(Error::Invariant("clause weight below 1".into()));
        }
        self.bank.weights[clause] = weight;
        Ok(())
    }

    fn check_input(&self, input: &LiteralBlocks) -> Result<()> {
        if input.block_words() != self.layout.block_words() || input.is_empty() {
            return Err(Error::Dimension {
                expected: self.layout.block_words(),
                found: input.block_words(),
            });
        }
        Ok(())
    }

    fn check_mask(&self, mask: Option<&DropMask>) -> Result<()> {
        match mask {
            Some(m) if m.len() != self.clauses() => Err(Error::Dimension {
                expected: self.clauses(),
                found: m.len(),
            }),
            _ => Ok(()),
        }
    }

    /// Clause output on a single literal block.
    #[inline]
    pub fn fires_on_block(&self, clause: usize, literals: &[u64], mode: EvalMode) -> bool {
        let mut any = 0u64;
        for (&inc, &lit) in self.bank.include_row(clause).iter().zip(literals) {
            if inc & !lit != 0 {
                return false;
            }
            any |= inc;
        }
        any != 0 || mode == EvalMode::Train
    }

    /// Clause output on an input: the OR over its blocks.
    #[inline]
    pub fn clause_output(&self, clause: usize, input: &LiteralBlocks, mode: EvalMode) -> bool {
        input
            .blocks()
            .any(|block| self.fires_on_block(clause, block, mode))
    }

    /// Indices of the blocks on which `clause` fires.
    pub fn matching_blocks(
        &self,
        clause: usize,
        input: &LiteralBlocks,
        mode: EvalMode,
        out: &mut Vec<usize>,
    ) {
        out.clear();
        out.extend(
            input
                .blocks()
                .enumerate()
                .filter(|(_, block)| self.fires_on_block(clause, block, mode))
                .map(|(b, _)| b),
        );
    }

    /// Weighted vote sum; masked clauses contribute nothing and are not
    /// evaluated.
    pub fn vote_sum(
        &self,
        input: &LiteralBlocks,
        mask: Option<&DropMask>,
        mode: EvalMode,
    ) -> Result<i64> {
        self.check_input(input)?;
        self.check_mask(mask)?;
        Ok(self.vote_unchecked(input, mask, mode))
    }

    pub(crate) fn vote_unchecked(
        &self,
        input: &LiteralBlocks,
        mask: Option<&DropMask>,
        mode: EvalMode,
    ) -> i64 {
        (0..self.clauses())
            .filter(|&j| mask.map_or(true, |m| m.is_active(j)))
            .filter(|&j| self.clause_output(j, input, mode))
            .map(|j| self.bank.signed_weight(j))
            .sum()
    }

    /// One online update on `(input, y)`.
    pub fn train_step<R: Rng + ?Sized>(
        &mut self,
        input: &LiteralBlocks,
        y: bool,
        mask: Option<&DropMask>,
        params: &Hyperparams,
        rng: &mut R,
    ) -> Result<StepOutcome> {
        self.train_step_observed(input, y, mask, params, rng, |_, _| {})
    }

    /// [`train_step`](Self::train_step) reporting each feedback event to
    /// `observe(clause, kind)`.
    pub fn train_step_observed<R, F>(
        &mut self,
        input: &LiteralBlocks,
        y: bool,
        mask: Option<&DropMask>,
        params: &Hyperparams,
        rng: &mut R,
        mut observe: F,
    ) -> Result<StepOutcome>
    where
        R: Rng + ?Sized,
        F: FnMut(usize, Feedback),
    {
        self.check_input(input)?;
        self.check_mask(mask)?;
        let n = self.clauses();
        let active = |j: usize| mask.map_or(true, |m| m.is_active(j));

        let mut outputs = vec![false; n];
        let mut vote = 0i64;
        for j in (0..n).filter(|&j| active(j)) {
            let out = self.clause_output(j, input, EvalMode::Train);
            outputs[j] = out;
            if out {
                vote += self.bank.signed_weight(j);
            }
        }

        let probability = feedback_probability(vote, params.threshold, y);
        let mut hits = vec![0u64; self.layout.block_words()];
        let mut matches = Vec::new();
        let mut selected = 0;
        for j in (0..n).filter(|&j| active(j)) {
            if rng.random::<f64>() >= probability {
                continue;
            }
            selected += 1;
            let out = outputs[j];
            let positive = ClauseBank::polarity(j) > 0;
            if positive == y {
                if out {
                    let b = self.pick_block(j, input, &mut matches, rng)?;
                    self.type_i_update(j, Some(input.block(b)), params, &mut hits, rng);
                    if params.weighted {
                        self.bank.weights[j] = self.bank.weights[j].saturating_add(1);
                    }
                } else {
                    self.type_i_update(j, None, params, &mut hits, rng);
                }
                observe(j, Feedback::TypeI { fired: out });
            } else {
                if out {
                    let b = self.pick_block(j, input, &mut matches, rng)?;
                    self.type_ii_update(j, input.block(b));
                    if params.weighted {
                        self.bank.weights[j] = self.bank.weights[j].saturating_sub(1).max(1);
                    }
                }
                observe(j, Feedback::TypeII { fired: out });
            }
        }
        Ok(StepOutcome {
            vote,
            probability,
            selected,
        })
    }

    /// Type I feedback to every automaton of `clause`. `fired_on` is the
    /// literal block the clause fired on, or `None` when it output 0.
    pub fn apply_type_i<R: Rng + ?Sized>(
        &mut self,
        clause: usize,
        fired_on: Option<&[u64]>,
        params: &Hyperparams,
        rng: &mut R,
    ) -> Result<()> {
        self.check_feedback_target(clause, fired_on)?;
        let mut hits = vec![0u64; self.layout.block_words()];
        self.type_i_update(clause, fired_on, params, &mut hits, rng);
        Ok(())
    }

    /// Type II feedback to `clause`, which fired on block `fired_on`.
    pub fn apply_type_ii(&mut self, clause: usize, fired_on: &[u64]) -> Result<()> {
        self.check_feedback_target(clause, Some(fired_on))?;
        self.type_ii_update(clause, fired_on);
        Ok(())
    }

    fn check_feedback_target(&self, clause: usize, block: Option<&[u64]>) -> Result<()> {
        if clause >= self.clauses() {
            return Err(Error::param(format!("clause {clause} out of range")));
        }
        match block {
            Some(b) if b.len() != self.layout.block_words() => Err(Error::Dimension {
                expected: self.layout.block_words(),
                found: b.len(),
            }),
            _ => Ok(()),
        }
    }

    /// Uniform choice among the blocks the clause fires on.
    fn pick_block<R: Rng + ?Sized>(
        &self,
        clause: usize,
        input: &LiteralBlocks,
        matches: &mut Vec<usize>,
        rng: &mut R,
    ) -> Result<usize> {
        if input.len() == 1 {
            return Ok(0);
        }
        self.matching_blocks(clause, input, EvalMode::Train, matches);
        crate::conv::select_feedback_patch(matches, rng)
    }

    /// Type Ia/Ib on every automaton of `clause`. `literals` is the block
    /// the clause fired on, or `None` when the clause output 0.
    fn type_i_update<R: Rng + ?Sized>(
        &mut self,
        clause: usize,
        literals: Option<&[u64]>,
        params: &Hyperparams,
        hits: &mut [u64],
        rng: &mut R,
    ) {
        // `hits` marks the automata whose 1/s event occurred: Ib decrements
        // there, and Ia increments everywhere else.
        sample_sparse_bernoulli(hits, 1.0 / params.specificity, rng);
        let Self { layout, states, bank } = self;
        let valid = layout.valid();
        for w in 0..hits.len() {
            let (inc, dec) = match literals {
                Some(lits) => {
                    let ia = if params.boost_true_positive { !0 } else { !hits[w] };
                    (lits[w] & ia & valid[w], !lits[w] & hits[w] & valid[w])
                }
                None => (0, hits[w] & valid[w]),
            };
            Self::apply_word(layout, states, bank, clause, w, inc, dec);
        }
    }

    /// Type II: include excluded 0-literals of a firing clause.
    fn type_ii_update(&mut self, clause: usize, literals: &[u64]) {
        let Self { layout, states, bank } = self;
        let valid = layout.valid();
        for w in 0..literals.len() {
            let inc = !literals[w] & !bank.include_row(clause)[w] & valid[w];
            Self::apply_word(layout, states, bank, clause, w, inc, 0);
        }
    }

    #[inline]
    fn apply_word(
        layout: &LiteralLayout,
        states: &mut TaStateMatrix,
        bank: &mut ClauseBank,
        clause: usize,
        w: usize,
        inc: u64,
        dec: u64,
    ) {
        let half = states.half_states;
        let max = 2 * half;
        let base = clause * states.literals;
        let inc_word = clause * bank.block_words + w;
        for bit in iter_set_bits(std::slice::from_ref(&inc)) {
            let k = layout.literal_of(w * 64 + bit);
            let a = &mut states.states[base + k];
            if *a < max {
                *a += 1;
                if *a == half + 1 {
                    bank.include[inc_word] |= 1 << bit;
                }
            }
        }
        for bit in iter_set_bits(std::slice::from_ref(&dec)) {
            let k = layout.literal_of(w * 64 + bit);
            let a = &mut states.states[base + k];
            if *a > 1 {
                *a -= 1;
                if *a == half {
                    bank.include[inc_word] &= !(1 << bit);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::BitVector;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const N: u16 = 100;

    fn sample(bits: &[u8]) -> BooleanSample {
        BooleanSample::from_bytes(bits)
    }

    fn encode(x: &BooleanSample) -> LiteralBlocks {
        x.encode(&LiteralLayout::new(x.features())).unwrap()
    }

    /// Builds a machine whose clause `j` includes exactly `includes[j]`.
    fn machine_with(features: usize, includes: &[&[usize]]) -> ClassMachine {
        let mut m = ClassMachine::new(includes.len(), LiteralLayout::new(features), N);
        for (j, lits) in includes.iter().enumerate() {
            for &k in *lits {
                m.set_state(j, k, N + 1).unwrap();
            }
        }
        m
    }

    fn params() -> Hyperparams {
        Hyperparams {
            clauses: 2,
            threshold: 2,
            specificity: 3.9,
            states: N,
            ..Hyperparams::default()
        }
    }

    #[test]
    fn clause_eval_examples() {
        // include x1 (literal 0) and NOT x2 (literal 3) over two features
        let mut row = vec![N; 4];
        row[0] = N + 1;
        row[3] = N + 1;
        assert!(!clause_eval(&row, N, &sample(&[0, 1]), EvalMode::Infer).unwrap());
        assert!(clause_eval(&row, N, &sample(&[1, 0]), EvalMode::Infer).unwrap());

        let empty = vec![N; 4];
        assert!(!clause_eval(&empty, N, &sample(&[1, 0]), EvalMode::Infer).unwrap());
        assert!(clause_eval(&empty, N, &sample(&[1, 0]), EvalMode::Train).unwrap());

        assert!(matches!(
            clause_eval(&row, N, &sample(&[1, 0, 1]), EvalMode::Infer),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn vote_with_two_silent_positive_clauses_is_zero() {
        // both positive-polarity clauses (index 0 and 2) reject x=[0,1];
        // negative clauses are empty and silent at inference.
        let m = machine_with(2, &[&[0], &[], &[0, 1], &[]]);
        let x = encode(&sample(&[0, 1]));
        let v = m.vote_sum(&x, None, EvalMode::Infer).unwrap();
        assert_eq!(v, 0);
        assert!(0 <= v, "tie rule predicts class 1");
    }

    #[test]
    fn balanced_firing_clauses_cancel() {
        let m = machine_with(2, &[&[0], &[0], &[3], &[3]]);
        let x = encode(&sample(&[1, 0]));
        assert_eq!(m.vote_sum(&x, None, EvalMode::Infer).unwrap(), 0);
    }

    #[test]
    fn masked_weighted_vote() {
        // outputs [1, 1, 1, 0] on x = [1, 1]
        let mut m = machine_with(2, &[&[0], &[1], &[0, 1], &[2]]);
        m.set_weight(0, 3).unwrap();
        let x = encode(&sample(&[1, 1]));
        let outs: Vec<bool> = (0..4)
            .map(|j| m.clause_output(j, &x, EvalMode::Infer))
            .collect();
        assert_eq!(outs, vec![true, true, true, false]);
        let mask = DropMask::from_bits(BitVector::from_bytes(&[1, 1, 0, 1]), 0.5, 0);
        assert_eq!(m.vote_sum(&x, Some(&mask), EvalMode::Infer).unwrap(), 2);
        assert_eq!(m.vote_sum(&x, None, EvalMode::Infer).unwrap(), 3);
    }

    #[test]
    fn mask_length_is_checked() {
        let m = machine_with(2, &[&[0], &[1]]);
        let x = encode(&sample(&[1, 1]));
        let mask = DropMask::from_bits(BitVector::ones(3), 0.0, 0);
        assert!(m.vote_sum(&x, Some(&mask), EvalMode::Infer).is_err());
    }

    #[test]
    fn zero_mask_leaves_machine_untouched() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut m = machine_with(3, &[&[0], &[4], &[], &[1, 2]]);
        let before = m.clone();
        let mask = DropMask::from_bits(BitVector::zeros(4), 1.0, 0);
        let x = encode(&sample(&[1, 0, 1]));
        let p = Hyperparams { clauses: 4, ..params() };
        for y in [true, false, true] {
            let out = m.train_step(&x, y, Some(&mask), &p, &mut rng).unwrap();
            assert_eq!(out.selected, 0);
        }
        assert_eq!(m, before);
    }

    #[test]
    fn single_positive_clause_learns_the_pattern() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut m = ClassMachine::new(2, LiteralLayout::new(2), N);
        let x = encode(&sample(&[0, 1]));
        let p = params();
        for _ in 0..5000 {
            m.train_step(&x, true, None, &p, &mut rng).unwrap();
        }
        // literals: 0 = x1, 1 = x2, 2 = NOT x1, 3 = NOT x2
        assert_eq!(m.bank().included_literals(0, m.layout()), vec![1, 2]);
    }

    #[test]
    fn feedback_probability_reported_for_step() {
        // one positive clause fires (v = +1), T = 2, y = 1
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut m = machine_with(2, &[&[1], &[0], &[0], &[0]]);
        let x = encode(&sample(&[0, 1]));
        let p = Hyperparams { clauses: 4, ..params() };
        let out = m.train_step(&x, true, None, &p, &mut rng).unwrap();
        assert_eq!(out.vote, 1);
        assert_eq!(out.probability, 0.25);
    }

    #[test]
    fn masked_clauses_receive_no_feedback() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut m = ClassMachine::new(20, LiteralLayout::new(8), 16);
        let p = Hyperparams {
            clauses: 20,
            threshold: 5,
            states: 16,
            weighted: true,
            ..Hyperparams::default()
        };
        let mask = DropMask::sample(20, 0.5, 0, &mut rng).unwrap();
        let before = m.clone();
        let mut seen = vec![0usize; 20];
        for i in 0..2000u32 {
            let bits: Vec<u8> = (0..8).map(|b| (i.wrapping_mul(2654435761) >> b & 1) as u8).collect();
            let x = encode(&sample(&bits));
            m.train_step_observed(&x, i % 3 == 0, Some(&mask), &p, &mut rng, |j, _| {
                seen[j] += 1
            })
            .unwrap();
        }
        for j in 0..20 {
            if mask.is_active(j) {
                assert!(seen[j] > 0);
            } else {
                assert_eq!(seen[j], 0);
                assert_eq!(m.states().row(j), before.states().row(j));
                assert_eq!(m.bank().weight(j), 1);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn packed_eval_matches_reference(
            features in 1usize..130,
            seed in any::<u64>(),
            train in any::<bool>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut m = ClassMachine::new(4, LiteralLayout::new(features), N);
            for j in 0..4 {
                for k in 0..2 * features {
                    if rng.random_bool(0.03) {
                        m.set_state(j, k, rng.random_range(N + 1..=2 * N)).unwrap();
                    }
                }
            }
            let x = BooleanSample::new(BitVector::from_bools((0..features).map(|_| rng.random_bool(0.5))));
            let mode = if train { EvalMode::Train } else { EvalMode::Infer };
            let enc = x.encode(m.layout()).unwrap();
            for j in 0..4 {
                let reference = clause_eval(m.states().row(j), N, &x, mode).unwrap();
                prop_assert_eq!(m.clause_output(j, &enc, mode), reference);
            }
        }

        #[test]
        fn training_keeps_invariants(
            seed in any::<u64>(),
            weighted in any::<bool>(),
            boost in any::<bool>(),
            drop in 0.0f64..1.0,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let half = 4;
            let p = Hyperparams {
                clauses: 10,
                threshold: 3,
                specificity: 2.5,
                states: half,
                weighted,
                boost_true_positive: boost,
                ..Hyperparams::default()
            };
            let mut m = ClassMachine::new(10, LiteralLayout::new(5), half);
            let mask = DropMask::sample(10, drop, 0, &mut rng).unwrap();
            for _ in 0..300 {
                let x = BooleanSample::new(BitVector::from_bools((0..5).map(|_| rng.random_bool(0.5))));
                let enc = x.encode(m.layout()).unwrap();
                m.train_step(&enc, rng.random_bool(0.5), Some(&mask), &p, &mut rng).unwrap();
                prop_assert!(m.states().in_bounds());
                prop_assert!(m.bank().weights().iter().all(|&w| w >= 1));
            }
            let rebuilt = ClauseBank::derive(m.states(), m.layout(), m.bank().weights().to_vec());
            prop_assert_eq!(&rebuilt, m.bank());
        }

        #[test]
        fn mask_equals_sub_bank(seed in any::<u64>(), drop in 0.0f64..1.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut m = ClassMachine::new(12, LiteralLayout::new(6), N);
            for j in 0..12 {
                m.set_weight(j, rng.random_range(1..5)).unwrap();
                for k in 0..12 {
                    if rng.random_bool(0.15) {
                        m.set_state(j, k, N + 1).unwrap();
                    }
                }
            }
            let mask = DropMask::sample(12, drop, 0, &mut rng).unwrap();
            let x = BooleanSample::new(BitVector::from_bools((0..6).map(|_| rng.random_bool(0.5))));
            let enc = x.encode(m.layout()).unwrap();
            let sub: i64 = (0..12)
                .filter(|&j| mask.is_active(j))
                .filter(|&j| clause_eval(m.states().row(j), N, &x, EvalMode::Infer).unwrap())
                .map(|j| i64::from(ClauseBank::polarity(j)) * i64::from(m.bank().weight(j)))
                .sum();
            prop_assert_eq!(m.vote_sum(&enc, Some(&mask), EvalMode::Infer).unwrap(), sub);
        }
    }
}
