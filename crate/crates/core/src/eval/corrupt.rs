use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::tm::{BooleanSample, Dataset};
use crate::{Error, Result};

/// Image dimensions of a flattened binary image, channel innermost.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ImageDims {
    pub rows: usize,
    pub cols: usize,
    pub channels: usize,
}

impl ImageDims {
    pub fn bits(&self) -> usize {
        self.rows * self.cols * self.channels
    }
}

/// A corruption of a binary image.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Corruption {
    /// Flip each bit independently with probability `rate` in `[0, 1]`.
    ImpulseNoise { rate: f64 },
    /// Shift by `(dr, dc)` pixels, filling with 0.
    Translate { dr: i64, dc: i64 },
    /// Zero a `size x size` block at a uniform random position.
    BlockOcclusion { size: usize },
    /// Set one uniform random row to 1.
    Stripe,
}

impl Corruption {
    pub fn validate(&self, dims: ImageDims) -> Result<()> {
        match *self {
            Corruption::ImpulseNoise { rate } if !(0.0..=1.0).contains(&rate) => {
                Err(Error::param(format!("impulse rate {rate} outside [0, 1]")))
            }
            Corruption::Translate { dr, dc }
                if dr.unsigned_abs() as usize >= dims.rows || dc.unsigned_abs() as usize >= dims.cols =>
            {
                Err(Error::param(format!(
                    "translation ({dr}, {dc}) does not fit a {}x{} image",
                    dims.rows, dims.cols
                )))
            }
            Corruption::BlockOcclusion { size } if size == 0 || size > dims.rows.min(dims.cols) => {
                Err(Error::param(format!(
                    "occlusion size {size} outside [1, {}]",
                    dims.rows.min(dims.cols)
                )))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for Corruption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Corruption::ImpulseNoise { rate } => write!(f, "impulse:{rate}"),
            Corruption::Translate { dr, dc } => write!(f, "translate:{dr},{dc}"),
            Corruption::BlockOcclusion { size } => write!(f, "occlusion:{size}"),
            Corruption::Stripe => write!(f, "stripe"),
        }
    }
}

/// Parses `impulse:RATE`, `translate:DR,DC`, `occlusion:SIZE` or `stripe`.
impl FromStr for Corruption {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
        let bad = || Error::param(format!("bad corruption {s:?}"));
        match kind.trim() {
            "impulse" | "impulse_noise" => Ok(Corruption::ImpulseNoise {
                rate: arg.trim().parse().map_err(|_| bad())?,
            }),
            "translate" => {
                let (dr, dc) = arg.split_once(',').ok_or_else(bad)?;
                Ok(Corruption::Translate {
                    dr: dr.trim().parse().map_err(|_| bad())?,
                    dc: dc.trim().parse().map_err(|_| bad())?,
                })
            }
            "occlusion" | "block_occlusion" => Ok(Corruption::BlockOcclusion {
                size: arg.trim().parse().map_err(|_| bad())?,
            }),
            "stripe" if arg.is_empty() => Ok(Corruption::Stripe),
            _ => Err(bad()),
        }
    }
}

/// Kinds to draw from and the per-image probability of corrupting at all.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorruptionSpec {
    pub kinds: Vec<Corruption>,
    pub apply_probability: f64,
}

impl Default for CorruptionSpec {
    fn default() -> Self {
        Self {
            kinds: vec![
                Corruption::ImpulseNoise { rate: 0.02 },
                Corruption::Translate { dr: 2, dc: 2 },
                Corruption::BlockOcclusion { size: 7 },
                Corruption::Stripe,
            ],
            apply_probability: 0.5,
        }
    }
}

impl CorruptionSpec {
    pub fn validate(&self, dims: ImageDims) -> Result<()> {
        if !(0.0..=1.0).contains(&self.apply_probability) {
            return Err(Error::param(format!(
                "apply probability {} outside [0, 1]",
                self.apply_probability
            )));
        }
        self.kinds.iter().try_for_each(|k| k.validate(dims))
    }
}

pub fn corrupt_image<R: Rng + ?Sized>(
    image: &BooleanSample,
    dims: ImageDims,
    corruption: &Corruption,
    rng: &mut R,
) -> Result<BooleanSample> {
    if image.features() != dims.bits() {
        return Err(Error::Dimension {
            expected: dims.bits(),
            found: image.features(),
        });
    }
    corruption.validate(dims)?;
    let idx = |r: usize, c: usize, z: usize| (r * dims.cols + c) * dims.channels + z;
    let mut out = image.clone();
    match *corruption {
        Corruption::ImpulseNoise { rate } => {
            if rate > 0.0 {
                let bits = out.bits_mut();
                for i in 0..dims.bits() {
                    if rng.random_bool(rate) {
                        bits.flip(i);
                    }
                }
            }
        }
        Corruption::Translate { dr, dc } => {
            let mut shifted = BooleanSample::zeros(dims.bits());
            for r in 0..dims.rows {
                for c in 0..dims.cols {
                    let (sr, sc) = (r as i64 - dr, c as i64 - dc);
                    if sr < 0 || sc < 0 || sr >= dims.rows as i64 || sc >= dims.cols as i64 {
                        continue;
                    }
                    for z in 0..dims.channels {
                        if image.get(idx(sr as usize, sc as usize, z)) {
                            shifted.bits_mut().set(idx(r, c, z), true);
                        }
                    }
                }
            }
            out = shifted;
        }
        Corruption::BlockOcclusion { size } => {
            let r0 = rng.random_range(0..=dims.rows - size);
            let c0 = rng.random_range(0..=dims.cols - size);
            for r in r0..r0 + size {
                for c in c0..c0 + size {
                    for z in 0..dims.channels {
                        out.bits_mut().set(idx(r, c, z), false);
                    }
                }
            }
        }
        Corruption::Stripe => {
            let r = rng.random_range(0..dims.rows);
            for c in 0..dims.cols {
                for z in 0..dims.channels {
                    out.bits_mut().set(idx(r, c, z), true);
                }
            }
        }
    }
    Ok(out)
}

/// Corrupts each image with the spec's probability, picking the kind
/// uniformly; labels are kept.
pub fn corrupt_dataset<R: Rng + ?Sized>(
    data: &Dataset,
    dims: ImageDims,
    spec: &CorruptionSpec,
    rng: &mut R,
) -> Result<Dataset> {
    spec.validate(dims)?;
    let mut samples = Vec::with_capacity(data.len());
    for s in &data.samples {
        let hit = !spec.kinds.is_empty() && rng.random_bool(spec.apply_probability);
        samples.push(if hit {
            let kind = &spec.kinds[rng.random_range(0..spec.kinds.len())];
            corrupt_image(s, dims, kind, rng)?
        } else {
            s.clone()
        });
    }
    Dataset::new(samples, data.labels.clone(), data.classes.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const D: ImageDims = ImageDims {
        rows: 28,
        cols: 28,
        channels: 1,
    };

    fn random_image(rng: &mut ChaCha8Rng) -> BooleanSample {
        let bytes: Vec<u8> = (0..D.bits()).map(|_| rng.random_range(0..2)).collect();
        BooleanSample::from_bytes(&bytes)
    }

    #[test]
    fn identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let img = random_image(&mut rng);
        let same = |c: Corruption, rng: &mut ChaCha8Rng| corrupt_image(&img, D, &c, rng).unwrap();
        assert_eq!(same(Corruption::ImpulseNoise { rate: 0.0 }, &mut rng), img);
        assert_eq!(same(Corruption::Translate { dr: 0, dc: 0 }, &mut rng), img);
    }

    #[test]
    fn impulse_expected_flips() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let img = BooleanSample::zeros(D.bits());
        let c = Corruption::ImpulseNoise { rate: 0.02 };
        let draws = 10_000;
        let total: usize = (0..draws)
            .map(|_| corrupt_image(&img, D, &c, &mut rng).unwrap().bits().count_ones())
            .sum();
        let mean = total as f64 / draws as f64;
        assert!((mean - 15.68).abs() <= 1.0, "mean {mean}");
    }

    #[test]
    fn translate_occlude_stripe() {
        let dims = ImageDims {
            rows: 3,
            cols: 3,
            channels: 1,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let img = BooleanSample::from_bytes(&[1, 0, 0, 0, 0, 0, 0, 0, 1]);
        let t = corrupt_image(&img, dims, &Corruption::Translate { dr: 1, dc: 1 }, &mut rng).unwrap();
        assert_eq!(t, BooleanSample::from_bytes(&[0, 0, 0, 0, 1, 0, 0, 0, 0]));

        let full = BooleanSample::from_bytes(&[1; 9]);
        let o = corrupt_image(&full, dims, &Corruption::BlockOcclusion { size: 2 }, &mut rng).unwrap();
        assert_eq!(o.bits().count_ones(), 5);

        let s = corrupt_image(&BooleanSample::zeros(9), dims, &Corruption::Stripe, &mut rng).unwrap();
        assert_eq!(s.bits().count_ones(), 3);
        let row = (0..9).find(|&i| s.get(i)).unwrap() / 3;
        assert!((0..3).all(|c| s.get(row * 3 + c)));
    }

    #[test]
    fn range_checks() {
        let img = BooleanSample::zeros(D.bits());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for bad in [
            Corruption::ImpulseNoise { rate: 1.5 },
            Corruption::Translate { dr: 28, dc: 0 },
            Corruption::BlockOcclusion { size: 0 },
            Corruption::BlockOcclusion { size: 29 },
        ] {
            assert!(corrupt_image(&img, D, &bad, &mut rng).is_err(), "{bad:?}");
        }
        assert!(corrupt_image(&BooleanSample::zeros(5), D, &Corruption::Stripe, &mut rng).is_err());
    }

    #[test]
    fn parse_round_trip() {
        for c in CorruptionSpec::default().kinds {
            assert_eq!(c.to_string().parse::<Corruption>().unwrap(), c);
        }
        assert!("blur:3".parse::<Corruption>().is_err());
        assert!("translate:1".parse::<Corruption>().is_err());
    }

    #[test]
    fn dataset_corruption_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let samples: Vec<_> = (0..50).map(|_| random_image(&mut rng)).collect();
        let data = Dataset::new(samples, vec![0; 50], Dataset::numeric_classes(2)).unwrap();
        let spec = CorruptionSpec::default();
        let a = corrupt_dataset(&data, D, &spec, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = corrupt_dataset(&data, D, &spec, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        let changed = a.samples.iter().zip(&data.samples).filter(|(x, y)| x != y).count();
        assert!(changed > 10 && changed < 40, "{changed}");

        let none = CorruptionSpec {
            kinds: vec![],
            apply_probability: 0.5,
        };
        assert_eq!(corrupt_dataset(&data, D, &none, &mut rng).unwrap(), data);
    }
}
