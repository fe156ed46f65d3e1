//! Patch decomposition for the convolutional machine.
//!
//! An image of `rows x cols x channels` bits is cut into `window x window`
//! patches with stride `step`. Along each axis there are
//! `ceil((dim - window) / step) + 1` window positions; the last origin is
//! pulled back to `dim - window` so the last window touches the far edge. Each patch vector
//! holds its pixels (row-major, channel innermost) followed by thermometer
//! codes of its row and column position: bit `t` of a code is 1 iff the
//! position index is greater than `t`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitVector;
use crate::tm::{clause_eval, BooleanSample, EvalMode, LiteralBlocks, LiteralLayout};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchGeometry {
    pub rows: usize,
    pub cols: usize,
    pub channels: usize,
    pub window: usize,
    pub step: usize,
    /// Append thermometer-coded patch coordinates.
    pub coordinates: bool,
}

/// What a single position of a patch vector encodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PatchFeature {
    Pixel { dr: usize, dc: usize, channel: usize },
    /// True iff the patch row position is greater than the value.
    RowAbove(usize),
    /// True iff the patch column position is greater than the value.
    ColAbove(usize),
}

impl PatchGeometry {
    pub fn new(rows: usize, cols: usize, channels: usize, window: usize) -> Self {
        Self {
            rows,
            cols,
            channels,
            window,
            step: 1,
            coordinates: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 || self.channels == 0 {
            return Err(Error::param("image dimensions must be positive"));
        }
        if self.window == 0 || self.window > self.rows.min(self.cols) {
            return Err(Error::param(format!(
                "window {} does not fit a {}x{} image",
                self.window, self.rows, self.cols
            )));
        }
        if self.step == 0 {
            return Err(Error::param("step must be >= 1"));
        }
        Ok(())
    }

    fn positions(&self, dim: usize) -> usize {
        (dim - self.window).div_ceil(self.step) + 1
    }

    pub fn row_positions(&self) -> usize {
        self.positions(self.rows)
    }

    pub fn col_positions(&self) -> usize {
        self.positions(self.cols)
    }

    /// `B`, the number of patches per image.
    pub fn patch_count(&self) -> usize {
        self.row_positions() * self.col_positions()
    }

    /// Pixel origin of window position `index` along an axis of length `dim`.
    pub fn origin(&self, index: usize, dim: usize) -> usize {
        (index * self.step).min(dim - self.window)
    }

    pub fn coordinate_bits(&self) -> usize {
        if self.coordinates {
            (self.row_positions() - 1) + (self.col_positions() - 1)
        } else {
            0
        }
    }

    pub fn pixel_features(&self) -> usize {
        self.window * self.window * self.channels
    }

    /// Length of one patch vector.
    pub fn patch_features(&self) -> usize {
        self.pixel_features() + self.coordinate_bits()
    }

    /// Bits in a flattened image.
    pub fn image_bits(&self) -> usize {
        self.rows * self.cols * self.channels
    }

    #[inline]
    pub fn pixel_index(&self, row: usize, col: usize, channel: usize) -> usize {
        (row * self.cols + col) * self.channels + channel
    }

    pub fn layout(&self) -> LiteralLayout {
        LiteralLayout::new(self.patch_features())
    }

    /// Meaning of patch feature `k`.
    pub fn feature(&self, k: usize) -> PatchFeature {
        let pixels = self.pixel_features();
        if k < pixels {
            let channel = k % self.channels;
            let cell = k / self.channels;
            PatchFeature::Pixel {
                dr: cell / self.window,
                dc: cell % self.window,
                channel,
            }
        } else {
            let t = k - pixels;
            let row_bits = self.row_positions() - 1;
            if t < row_bits {
                PatchFeature::RowAbove(t)
            } else {
                PatchFeature::ColAbove(t - row_bits)
            }
        }
    }
}

/// The `B` patch vectors of one image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatchSet {
    geometry: PatchGeometry,
    patches: Vec<BitVector>,
    coords: Vec<(usize, usize)>,
}

impl PatchSet {
    pub fn geometry(&self) -> &PatchGeometry {
        &self.geometry
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    pub fn patches(&self) -> &[BitVector] {
        &self.patches
    }

    /// `(row, col)` window position of each patch.
    pub fn coords(&self) -> &[(usize, usize)] {
        &self.coords
    }

    /// Pixel origin of patch `b`.
    pub fn origin(&self, b: usize) -> (usize, usize) {
        let (r, c) = self.coords[b];
        (
            self.geometry.origin(r, self.geometry.rows),
            self.geometry.origin(c, self.geometry.cols),
        )
    }

    pub fn encode(&self) -> LiteralBlocks {
        let layout = self.geometry.layout();
        let mut blocks = LiteralBlocks::with_capacity(&layout, self.len());
        for p in &self.patches {
            blocks.push(&layout, p);
        }
        blocks
    }
}

/// Splits a flattened binary image into its patch vectors.
pub fn extract_patches(image: &BooleanSample, geometry: &PatchGeometry) -> Result<PatchSet> {
    geometry.validate()?;
    if image.features() != geometry.image_bits() {
        return Err(Error::Dimension {
            expected: geometry.image_bits(),
            found: image.features(),
        });
    }
    let (rp, cp) = (geometry.row_positions(), geometry.col_positions());
    let w = geometry.window;
    let mut patches = Vec::with_capacity(rp * cp);
    let mut coords = Vec::with_capacity(rp * cp);
    let mut buf = Vec::with_capacity(geometry.patch_features());
    for ri in 0..rp {
        let r0 = geometry.origin(ri, geometry.rows);
        for ci in 0..cp {
            let c0 = geometry.origin(ci, geometry.cols);
            buf.clear();
            for dr in 0..w {
                for dc in 0..w {
                    for z in 0..geometry.channels {
                        buf.push(image.get(geometry.pixel_index(r0 + dr, c0 + dc, z)));
                    }
                }
            }
            if geometry.coordinates {
                buf.extend((0..rp - 1).map(|t| ri > t));
                buf.extend((0..cp - 1).map(|t| ci > t));
            }
            patches.push(BitVector::from_bools(buf.iter().copied()));
            coords.push((ri, ci));
        }
    }
    Ok(PatchSet {
        geometry: *geometry,
        patches,
        coords,
    })
}

/// Reference convolutional clause evaluation: the OR of the clause over all
/// patches, plus the indices of the patches it matched.
pub fn conv_clause_eval(
    ta_row: &[u16],
    half_states: u16,
    patches: &PatchSet,
    mode: EvalMode,
) -> Result<(bool, Vec<usize>)> {
    let expected = 2 * patches.geometry.patch_features();
    if ta_row.len() != expected {
        return Err(Error::Dimension {
            expected,
            found: ta_row.len(),
        });
    }
    let mut matches = Vec::new();
    for (b, p) in patches.patches.iter().enumerate() {
        let x = BooleanSample::new(p.clone());
        if clause_eval(ta_row, half_states, &x, mode)? {
            matches.push(b);
        }
    }
    Ok((!matches.is_empty(), matches))
}

/// Uniform choice of the patch that supplies literals for Type Ia / II
/// feedback.
pub fn select_feedback_patch<R: Rng + ?Sized>(matches: &[usize], rng: &mut R) -> Result<usize> {
    match matches.len() {
        0 => Err(Error::Invariant(
            "firing clause has no matching patch".into(),
        )),
        1 => Ok(matches[0]),
        n => Ok(matches[rng.random_range(0..n)]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tm::ClassMachine;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn geom(rows: usize, cols: usize, window: usize, step: usize) -> PatchGeometry {
        PatchGeometry {
            rows,
            cols,
            channels: 1,
            window,
            step,
            coordinates: true,
        }
    }

    /// Distinct clamped origins found by scanning every pixel offset.
    fn brute_force_count(rows: usize, cols: usize, window: usize, step: usize) -> usize {
        let axis = |dim: usize| {
            (0..=dim - window)
                .filter(|&o| o % step == 0 || o == dim - window)
                .count()
        };
        axis(rows) * axis(cols)
    }

    #[test]
    fn six_by_six_window_three() {
        let g = geom(6, 6, 3, 1);
        assert_eq!(g.patch_count(), 16);
        let set = extract_patches(&BooleanSample::zeros(36), &g).unwrap();
        assert_eq!(set.len(), 16);
        assert_eq!(set.patches()[0].len(), 9 + 3 + 3);
    }

    #[test]
    fn full_window_has_single_patch_without_coordinates() {
        let g = geom(5, 5, 5, 1);
        assert_eq!(g.patch_count(), 1);
        assert_eq!(g.coordinate_bits(), 0);
    }

    #[test]
    fn mnist_sized_window_ten() {
        let g = geom(28, 28, 10, 1);
        assert_eq!(g.patch_count(), 361);
        assert_eq!(brute_force_count(28, 28, 10, 1), 361);
    }

    #[test]
    fn window_larger_than_image_is_rejected() {
        let g = geom(4, 4, 5, 1);
        assert!(extract_patches(&BooleanSample::zeros(16), &g).is_err());
    }

    #[test]
    fn thermometer_codes() {
        let g = geom(4, 4, 2, 1);
        let set = extract_patches(&BooleanSample::zeros(16), &g).unwrap();
        // positions 3x3 -> 2 row bits and 2 column bits after 4 pixels
        for (b, &(r, c)) in set.coords().iter().enumerate() {
            let p = &set.patches()[b];
            assert_eq!(p.get(4), r > 0);
            assert_eq!(p.get(5), r > 1);
            assert_eq!(p.get(6), c > 0);
            assert_eq!(p.get(7), c > 1);
        }
        assert_eq!(g.feature(5), PatchFeature::RowAbove(1));
        assert_eq!(g.feature(6), PatchFeature::ColAbove(0));
        assert_eq!(g.feature(3), PatchFeature::Pixel { dr: 1, dc: 1, channel: 0 });
    }

    #[test]
    fn clause_matching_upper_left_patch() {
        let g = PatchGeometry { coordinates: false, ..geom(3, 3, 2, 1) };
        let image = BooleanSample::from_bytes(&[1, 1, 0, 0, 0, 0, 0, 0, 0]);
        let set = extract_patches(&image, &g).unwrap();
        let n = 10;
        let mut row = vec![n; 8];
        row[0] = n + 1;
        row[1] = n + 1;
        let (out, matches) = conv_clause_eval(&row, n, &set, EvalMode::Infer).unwrap();
        assert!(out);
        assert_eq!(matches, vec![0]);

        let none = BooleanSample::zeros(9);
        let set = extract_patches(&none, &g).unwrap();
        assert_eq!(conv_clause_eval(&row, n, &set, EvalMode::Infer).unwrap(), (false, vec![]));

        let empty = vec![n; 8];
        let (out, matches) = conv_clause_eval(&empty, n, &set, EvalMode::Train).unwrap();
        assert!(out);
        assert_eq!(matches, vec![0, 1, 2, 3]);
    }

    #[test]
    fn feedback_patch_selection() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(select_feedback_patch(&[3], &mut rng).unwrap(), 3);
        assert!(select_feedback_patch(&[], &mut rng).is_err());

        let matches: Vec<usize> = (0..16).collect();
        let mut counts = [0usize; 16];
        let draws = 100_000;
        for _ in 0..draws {
            counts[select_feedback_patch(&matches, &mut rng).unwrap()] += 1;
        }
        let expected = draws as f64 / 16.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // chi-square 99.9% quantile with 15 degrees of freedom
        assert!(chi2 < 37.70, "chi2 = {chi2}");
        for c in counts {
            assert!((c as f64 / draws as f64 - 1.0 / 16.0).abs() < 0.005);
        }
    }

    proptest! {
        #[test]
        fn patch_count_matches_enumeration(
            rows in 1usize..12, cols in 1usize..12, window in 1usize..6, step in 1usize..5,
        ) {
            prop_assume!(window <= rows.min(cols));
            let g = geom(rows, cols, window, step);
            prop_assert_eq!(g.patch_count(), brute_force_count(rows, cols, window, step));
            let set = extract_patches(&BooleanSample::zeros(rows * cols), &g).unwrap();
            prop_assert_eq!(set.len(), g.patch_count());
            // with step <= window every pixel is covered by some patch
            for r in (0..rows).filter(|_| step <= window) {
                for c in 0..cols {
                    let covered = (0..set.len()).any(|b| {
                        let (r0, c0) = set.origin(b);
                        (r0..r0 + window).contains(&r) && (c0..c0 + window).contains(&c)
                    });
                    prop_assert!(covered);
                }
            }
        }

        #[test]
        fn or_composition_and_coordinate_soundness(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = PatchGeometry { channels: 2, ..geom(6, 5, 2, 1) };
            let layout = g.layout();
            let half = 8;
            let mut m = ClassMachine::new(6, layout.clone(), half);
            for j in 0..6 {
                for k in 0..layout.literals() {
                    if rng.random_bool(0.08) {
                        m.set_state(j, k, half + 1).unwrap();
                    }
                }
            }
            let image = BooleanSample::new(BitVector::from_bools((0..g.image_bits()).map(|_| rng.random_bool(0.6))));
            let set = extract_patches(&image, &g).unwrap();
            let enc = set.encode();
            for j in 0..6 {
                for mode in [EvalMode::Train, EvalMode::Infer] {
                    let (out, matches) = conv_clause_eval(m.states().row(j), half, &set, mode).unwrap();
                    let per_patch: Vec<usize> = (0..set.len())
                        .filter(|&b| clause_eval(m.states().row(j), half, &BooleanSample::new(set.patches()[b].clone()), mode).unwrap())
                        .collect();
                    prop_assert_eq!(&matches, &per_patch);
                    prop_assert_eq!(out, !per_patch.is_empty());
                    prop_assert_eq!(m.clause_output(j, &enc, mode), out);
                    let mut fast = Vec::new();
                    m.matching_blocks(j, &enc, mode, &mut fast);
                    prop_assert_eq!(&fast, &matches);
                }
                // a clause including "row > t" never matches a patch at row <= t
                for k in 0..g.patch_features() {
                    if let PatchFeature::RowAbove(t) = g.feature(k) {
                        if m.states().includes(j, k) {
                            let (_, matches) = conv_clause_eval(m.states().row(j), half, &set, EvalMode::Infer).unwrap();
                            prop_assert!(matches.iter().all(|&b| set.coords()[b].0 > t));
                        }
                    }
                }
            }
        }
    }
}
