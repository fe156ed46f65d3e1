//! Binarized dataset cache.
//!
//! Layout (little-endian): magic `TMBC`, u16 version, u32 width, u32 sample
//! count, u32 class count, each class name as u32 length + UTF-8, one u32
//! label per sample, then each sample as `ceil(width / 64)` u64 words.

use std::fs;
use std::path::Path;

use crate::bits::{words_for, BitVector};
use crate::tm::{BooleanSample, Dataset};
use crate::wire::{WireReader, WireWriter};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"TMBC";
const VERSION: u16 = 1;

pub fn write_cache(path: impl AsRef<Path>, data: &Dataset) -> Result<()> {
    let width = data.width().unwrap_or(0);
    let mut w = WireWriter::new();
    w.bytes(MAGIC);
    w.u16(VERSION);
    w.len_u32(width)?;
    w.len_u32(data.len())?;
    w.len_u32(data.classes.len())?;
    for c in &data.classes {
        w.str(c)?;
    }
    for &l in &data.labels {
        w.len_u32(l)?;
    }
    for s in &data.samples {
        for &word in s.bits().words() {
            w.u64(word);
        }
    }
    fs::write(path, w.finish())?;
    Ok(())
}

pub fn read_cache(path: impl AsRef<Path>) -> Result<Dataset> {
    let bytes = fs::read(path)?;
    let mut r = WireReader::new(&bytes, "binarized cache");
    if r.take(4)? != MAGIC {
        return Err(Error::format("binarized cache", "bad magic"));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::format(
            "binarized cache",
            format!("unsupported version {version}"),
        ));
    }
    let width = r.usize()?;
    let count = r.usize()?;
    let classes = (0..r.usize()?)
        .map(|_| r.string())
        .collect::<Result<Vec<_>>>()?;
    let labels = (0..count).map(|_| r.usize()).collect::<Result<Vec<_>>>()?;
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        let words = (0..words_for(width))
            .map(|_| r.u64())
            .collect::<Result<Vec<_>>>()?;
        samples.push(BooleanSample::new(BitVector::from_words(words, width)));
    }
    r.finish()?;
    Dataset::new(samples, labels, classes)
}
