//! The `TMDC` model container.
//!
//! Every integer is little-endian. Layout:
//!
//! ```text
//! magic        4 bytes  "TMDC"
//! version      u16      1
//! hyperparams  u32 clauses, u32 T, f64 s, u16 N, u8 boost, u8 weighted,
//!              f64 drop probability, u32 epochs, u64 seed
//! shape        u8 kind; 0 = flat: u32 features
//!                       1 = conv: u32 rows, cols, channels, window, step,
//!                                 u8 coordinates
//! preprocess   u8 kind; 0 = none
//!                       1 = adaptive gaussian: u32 window, f64 sigma, i32 C
//!                       2 = bag of words: u8 stem, u32 min_freq,
//!                           str corpus hash, u32 V, V x str token
//! classes      u32 count, count x str
//! machines     u32 count, then per machine:
//!              n x u32 clause weights, n x 2o x u16 automaton states
//!              (row-major by clause)
//! ```
//!
//! Strings are a u32 byte length followed by UTF-8.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::booleanize::{BinarizationConfig, Preprocessing, Vocabulary};
use crate::conv::PatchGeometry;
use crate::tm::{ClassMachine, Hyperparams, InputShape, MulticlassModel, TaStateMatrix};
use crate::wire::{WireReader, WireWriter};
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"TMDC";
pub const VERSION: u16 = 1;

pub fn to_bytes(model: &MulticlassModel) -> Result<Vec<u8>> {
    let mut w = WireWriter::new();
    w.bytes(MAGIC);
    w.u16(VERSION);

    let p = model.params();
    w.len_u32(p.clauses)?;
    w.u32(p.threshold);
    w.f64(p.specificity);
    w.u16(p.states);
    w.u8(u8::from(p.boost_true_positive));
    w.u8(u8::from(p.weighted));
    w.f64(p.drop_clause);
    w.len_u32(p.epochs)?;
    w.u64(p.seed);

    match model.shape() {
        InputShape::Flat { features } => {
            w.u8(0);
            w.len_u32(*features)?;
        }
        InputShape::Conv(g) => {
            w.u8(1);
            for v in [g.rows, g.cols, g.channels, g.window, g.step] {
                w.len_u32(v)?;
            }
            w.u8(u8::from(g.coordinates));
        }
    }

    match model.preprocessing() {
        Preprocessing::None => w.u8(0),
        Preprocessing::AdaptiveGaussian(cfg) => {
            w.u8(1);
            w.len_u32(cfg.window)?;
            w.f64(cfg.sigma);
            w.bytes(&cfg.offset.to_le_bytes());
        }
        Preprocessing::BagOfWords { vocabulary, stem } => {
            w.u8(2);
            w.u8(u8::from(*stem));
            w.len_u32(vocabulary.min_freq)?;
            w.str(&vocabulary.corpus_hash)?;
            w.len_u32(vocabulary.len())?;
            for t in vocabulary.tokens() {
                w.str(t)?;
            }
        }
    }

    w.len_u32(model.classes().len())?;
    for c in model.classes() {
        w.str(c)?;
    }

    w.len_u32(model.machines().len())?;
    for m in model.machines() {
        for &weight in m.bank().weights() {
            w.u32(weight);
        }
        for &a in m.states().as_slice() {
            w.u16(a);
        }
    }
    Ok(w.finish())
}

pub fn from_bytes(bytes: &[u8]) -> Result<MulticlassModel> {
    let mut r = WireReader::new(bytes, "model file");
    if r.take(4)? != MAGIC {
        return Err(Error::format("model file", "bad magic"));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::format(
            "model file",
            format!("unsupported format version {version}"),
        ));
    }

    let params = Hyperparams {
        clauses: r.usize()?,
        threshold: r.u32()?,
        specificity: r.f64()?,
        states: r.u16()?,
        boost_true_positive: r.bool()?,
        weighted: r.bool()?,
        drop_clause: r.f64()?,
        epochs: r.usize()?,
        seed: r.u64()?,
    };
    params.validate()?;

    let shape = match r.u8()? {
        0 => InputShape::Flat {
            features: r.usize()?,
        },
        1 => {
            let mut dims = [0usize; 5];
            for d in &mut dims {
                *d = r.usize()?;
            }
            let [rows, cols, channels, window, step] = dims;
            InputShape::Conv(PatchGeometry {
                rows,
                cols,
                channels,
                window,
                step,
                coordinates: r.bool()?,
            })
        }
        k => return Err(Error::format("model file", format!("unknown shape kind {k}"))),
    };
    shape.validate()?;

    let preprocessing = match r.u8()? {
        0 => Preprocessing::None,
        1 => Preprocessing::AdaptiveGaussian(BinarizationConfig {
            window: r.usize()?,
            sigma: r.f64()?,
            offset: i32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes")),
        }),
        2 => {
            let stem = r.bool()?;
            let min_freq = r.usize()?;
            let corpus_hash = r.string()?;
            let tokens = (0..r.usize()?)
                .map(|_| r.string())
                .collect::<Result<Vec<_>>>()?;
            Preprocessing::BagOfWords {
                vocabulary: Vocabulary::from_tokens(tokens, min_freq, corpus_hash)?,
                stem,
            }
        }
        k => {
            return Err(Error::format(
                "model file",
                format!("unknown preprocessing kind {k}"),
            ))
        }
    };

    let classes = (0..r.usize()?)
        .map(|_| r.string())
        .collect::<Result<Vec<_>>>()?;

    let layout = shape.layout();
    let machine_count = r.usize()?;
    if machine_count > classes.len().max(1) {
        return Err(Error::format("model file", "more machines than classes"));
    }
    let mut machines = Vec::with_capacity(machine_count);
    for _ in 0..machine_count {
        let weights = (0..params.clauses)
            .map(|_| r.u32())
            .collect::<Result<Vec<_>>>()?;
        let raw = r.take(params.clauses * layout.literals() * 2)?;
        let states = raw
            .chunks_exact(2)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect();
        let states = TaStateMatrix::from_raw(params.clauses, layout.literals(), params.states, states)?;
        machines.push(ClassMachine::from_parts(layout.clone(), states, weights)?);
    }
    r.finish()?;
    MulticlassModel::from_parts(params, shape, classes, machines, preprocessing)
}

pub fn save_model(model: &MulticlassModel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_bytes(model)?)?;
    Ok(())
}

/// Reads and fully validates a model; nothing is returned on any error.
pub fn load_model(path: impl AsRef<Path>) -> Result<MulticlassModel> {
    from_bytes(&fs::read(path)?)
}

/// Hex SHA-256 of the serialized model.
pub fn model_hash(model: &MulticlassModel) -> Result<String> {
    let digest = Sha256::digest(to_bytes(model)?);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}
