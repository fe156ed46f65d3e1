//! Per-epoch Bernoulli clause masks and training-time telemetry.
//!
//! Each class draws one [`DropMask`] at the start of every epoch. A clause
//! whose bit is 0 is skipped entirely for that epoch: it neither votes nor
//! receives feedback. Inference always uses every clause.

use std::io::Write;

use rand::Rng;

use crate::bits::BitVector;
use crate::{Error, Result};

/// Clause mask `pi` for one class and one epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct DropMask {
    bits: BitVector,
    p: f64,
    epoch: usize,
}

impl DropMask {
    /// Samples a mask over `clauses` clauses where each bit is 0 with
    /// probability `p`.
    pub fn sample<R: Rng + ?Sized>(clauses: usize, p: f64, epoch: usize, rng: &mut R) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param(format!("drop probability {p} outside [0, 1]")));
        }
        if clauses == 0 {
            return Err(Error::param("mask needs at least one clause"));
        }
        let bits = BitVector::from_bools((0..clauses).map(|_| rng.random::<f64>() >= p));
        Ok(Self { bits, p, epoch })
    }

    pub fn from_bits(bits: BitVector, p: f64, epoch: usize) -> Self {
        Self { bits, p, epoch }
    }

    /// All clauses active.
    pub fn full(clauses: usize, epoch: usize) -> Self {
        Self::from_bits(BitVector::ones(clauses), 0.0, epoch)
    }

    #[inline]
    pub fn is_active(&self, clause: usize) -> bool {
        self.bits.get(clause)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &BitVector {
        &self.bits
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn active_count(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn active_fraction(&self) -> f64 {
        self.active_count() as f64 / self.len() as f64
    }
}

/// Telemetry for one training epoch.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct EpochReport {
    pub epoch: usize,
    /// Mean fraction of active clauses over all classes.
    pub active_fraction: f64,
    /// Wall time of the training pass, excluding validation.
    pub seconds: f64,
    pub validation_accuracy: Option<f64>,
}

/// Writes `epoch,active_fraction,seconds` rows.
pub fn write_timing_csv<W: Write>(reports: &[EpochReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "active_fraction", "seconds"])?;
    for r in reports {
        w.write_record([
            r.epoch.to_string(),
            format!("{:.6}", r.active_fraction),
            format!("{:.6}", r.seconds),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Median epoch time, the statistic used for time-reduction comparisons.
pub fn median_seconds(reports: &[EpochReport]) -> Option<f64> {
    if reports.is_empty() {
        return None;
    }
    let mut t: Vec<f64> = reports.iter().map(|r| r.seconds).collect();
    t.sort_by(f64::total_cmp);
    let mid = t.len() / 2;
    Some(if t.len() % 2 == 1 {
        t[mid]
    } else {
        (t[mid - 1] + t[mid]) / 2.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn extreme_probabilities() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let keep = DropMask::sample(100, 0.0, 0, &mut rng).unwrap();
        assert_eq!(keep.active_count(), 100);
        let drop = DropMask::sample(100, 1.0, 0, &mut rng).unwrap();
        assert_eq!(drop.active_count(), 0);
    }

    #[test]
    fn rejects_bad_probability() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(DropMask::sample(10, -0.1, 0, &mut rng).is_err());
        assert!(DropMask::sample(10, 1.1, 0, &mut rng).is_err());
        assert!(DropMask::sample(10, f64::NAN, 0, &mut rng).is_err());
        assert!(DropMask::sample(0, 0.5, 0, &mut rng).is_err());
    }

    #[test]
    fn dropped_fraction_concentrates() {
        // Exact Binomial(10000, 0.75) mass of [7400, 7600] is 0.9797.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 200;
        let inside = (0..draws)
            .filter(|_| {
                let m = DropMask::sample(10_000, 0.75, 0, &mut rng).unwrap();
                let dropped = 1.0 - m.active_fraction();
                (0.74..=0.76).contains(&dropped)
            })
            .count();
        assert!(inside >= 190, "{inside}/{draws} draws inside the band");
    }

    #[test]
    fn timing_csv_format() {
        let reports = vec![
            EpochReport { epoch: 1, active_fraction: 1.0, seconds: 0.5, validation_accuracy: None },
            EpochReport { epoch: 2, active_fraction: 0.5, seconds: 0.25, validation_accuracy: Some(0.9) },
        ];
        let mut buf = Vec::new();
        write_timing_csv(&reports, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "epoch,active_fraction,seconds\n1,1.000000,0.500000\n2,0.500000,0.250000\n"
        );
        assert_eq!(median_seconds(&reports), Some(0.375));
    }
}
