use crate::bits::{words_for, BitVector};
use crate::{Error, Result};

/// A fixed-width boolean input `x` of `o` features.
///
/// The literal view has `2o` entries: literal `k` is `x[k]` for `k < o` and
/// `NOT x[k - o]` otherwise.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BooleanSample {
    bits: BitVector,
}

impl BooleanSample {
    pub fn new(bits: BitVector) -> Self {
        Self { bits }
    }

    pub fn from_bytes(bytes: &[u8]) -> Self {
        Self::new(BitVector::from_bytes(bytes))
    }

    pub fn zeros(features: usize) -> Self {
        Self::new(BitVector::zeros(features))
    }

    /// Feature count `o`.
    #[inline]
    pub fn features(&self) -> usize {
        self.bits.len()
    }

    #[inline]
    pub fn bits(&self) -> &BitVector {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut BitVector {
        &mut self.bits
    }

    #[inline]
    pub fn get(&self, k: usize) -> bool {
        self.bits.get(k)
    }

    /// Literal `k` of the `2o` literal view.
    #[inline]
    pub fn literal(&self, k: usize) -> bool {
        let o = self.features();
        if k < o {
            self.bits.get(k)
        } else {
            !self.bits.get(k - o)
        }
    }

    pub fn literals(&self) -> BitVector {
        let o = self.features();
        BitVector::from_bools((0..2 * o).map(|k| self.literal(k)))
    }

    /// Packs the literal view into a single block using `layout`.
    pub fn encode(&self, layout: &LiteralLayout) -> Result<LiteralBlocks> {
        if self.features() != layout.features() {
            return Err(Error::Dimension {
                expected: layout.features(),
                found: self.features(),
            });
        }
        let mut blocks = LiteralBlocks::with_capacity(layout, 1);
        blocks.push(layout, &self.bits);
        Ok(blocks)
    }
}

impl From<BitVector> for BooleanSample {
    fn from(bits: BitVector) -> Self {
        Self::new(bits)
    }
}

/// Maps literal indices to positions in a packed literal block.
///
/// A block is `2 * half_words` words: the plain features occupy the first
/// half and their negations the second, each half padded to a word boundary.
/// Padding positions are never valid and never included.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiteralLayout {
    features: usize,
    half_words: usize,
    valid: Vec<u64>,
}

impl LiteralLayout {
    pub fn new(features: usize) -> Self {
        let half_words = words_for(features);
        let half = BitVector::ones(features);
        let mut valid = half.words().to_vec();
        valid.extend_from_slice(half.words());
        Self {
            features,
            half_words,
            valid,
        }
    }

    #[inline]
    pub fn features(&self) -> usize {
        self.features
    }

    #[inline]
    pub fn literals(&self) -> usize {
        2 * self.features
    }

    #[inline]
    pub fn block_words(&self) -> usize {
        2 * self.half_words
    }

    /// Mask of positions that correspond to real literals.
    #[inline]
    pub fn valid(&self) -> &[u64] {
        &self.valid
    }

    /// Packed bit position of literal `k`.
    #[inline]
    pub fn position_of(&self, k: usize) -> usize {
        if k < self.features {
            k
        } else {
            self.half_words * 64 + (k - self.features)
        }
    }

    /// Literal index stored at packed position `pos`. `pos` must be valid.
    #[inline]
    pub fn literal_of(&self, pos: usize) -> usize {
        let split = self.half_words * 64;
        if pos < split {
            pos
        } else {
            self.features + (pos - split)
        }
    }
}

/// Packed literal vectors for one input, one block per patch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiteralBlocks {
    words: Vec<u64>,
    block_words: usize,
}

impl LiteralBlocks {
    pub fn with_capacity(layout: &LiteralLayout, blocks: usize) -> Self {
        Self {
            words: Vec::with_capacity(blocks * layout.block_words()),
            block_words: layout.block_words(),
        }
    }

    /// Appends the literal block for the feature vector `x`.
    pub fn push(&mut self, layout: &LiteralLayout, x: &BitVector) {
        debug_assert_eq!(x.len(), layout.features());
        let half = layout.block_words() / 2;
        self.words.extend_from_slice(x.words());
        for (w, valid) in x.words().iter().zip(&layout.valid()[half..]) {
            self.words.push(!w & valid);
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        if self.block_words == 0 {
            0
        } else {
            self.words.len() / self.block_words
        }
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    #[inline]
    pub fn block_words(&self) -> usize {
        self.block_words
    }

    #[inline]
    pub fn block(&self, b: usize) -> &[u64] {
        &self.words[b * self.block_words..(b + 1) * self.block_words]
    }

    pub fn blocks(&self) -> impl Iterator<Item = &[u64]> {
        self.words.chunks_exact(self.block_words.max(1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn literal_view_appends_negations() {
        let x = BooleanSample::from_bytes(&[1, 0, 1]);
        let lits: Vec<bool> = x.literals().iter().collect();
        assert_eq!(lits, vec![true, false, true, false, true, false]);
    }

    #[test]
    fn layout_round_trips_positions() {
        let layout = LiteralLayout::new(70);
        assert_eq!(layout.block_words(), 4);
        for k in 0..layout.literals() {
            assert_eq!(layout.literal_of(layout.position_of(k)), k);
        }
        assert_eq!(layout.position_of(70), 128);
    }

    #[test]
    fn encode_rejects_wrong_width() {
        let layout = LiteralLayout::new(4);
        assert!(BooleanSample::zeros(3).encode(&layout).is_err());
    }

    proptest! {
        #[test]
        fn literal_pairs_are_complementary(bits in proptest::collection::vec(any::<bool>(), 1..200)) {
            let x = BooleanSample::new(BitVector::from_bools(bits.iter().copied()));
            let o = x.features();
            let lits = x.literals();
            prop_assert_eq!(lits.len(), 2 * o);
            for k in 0..o {
                prop_assert!(lits.get(k) ^ lits.get(k + o));
            }
            let layout = LiteralLayout::new(o);
            let enc = x.encode(&layout).unwrap();
            for k in 0..2 * o {
                let p = layout.position_of(k);
                prop_assert_eq!((enc.block(0)[p / 64] >> (p % 64)) & 1 == 1, lits.get(k));
            }
        }
    }
}
