//! IDX files (the MNIST container): big-endian header `0 0 type ndims`,
//! then `ndims` u32 dimensions, then the payload. Only unsigned-byte
//! payloads are supported. Gzip-compressed files are detected by magic.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use super::ImageDataset;
use crate::tm::Dataset;
use crate::{Error, Result};

const UBYTE: u8 = 0x08;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxArray {
    pub dims: Vec<usize>,
    pub data: Vec<u8>,
}

pub fn parse_idx(bytes: &[u8]) -> Result<IdxArray> {
    if bytes.len() < 4 || bytes[0] != 0 || bytes[1] != 0 {
        return Err(Error::format("IDX", "bad magic"));
    }
    if bytes[2] != UBYTE {
        return Err(Error::format(
            "IDX",
            format!("unsupported element type 0x{:02x}", bytes[2]),
        ));
    }
    let ndims = bytes[3] as usize;
    let header = 4 + 4 * ndims;
    if bytes.len() < header {
        return Err(Error::format("IDX", "truncated header"));
    }
    let dims: Vec<usize> = bytes[4..header]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes(c.try_into().expect("4 bytes")) as usize)
        .collect();
    let expected = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::format("IDX", "dimension overflow"))?;
    let payload = &bytes[header..];
    if payload.len() < expected {
        return Err(Error::format(
            "IDX",
            format!("truncated payload: {} of {expected} bytes", payload.len()),
        ));
    }
    if payload.len() > expected {
        return Err(Error::format("IDX", "trailing bytes after payload"));
    }
    Ok(IdxArray {
        dims,
        data: payload.to_vec(),
    })
}

pub fn read_idx(path: impl AsRef<Path>) -> Result<IdxArray> {
    let raw = fs::read(path)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut bytes = Vec::new();
        GzDecoder::new(&raw[..]).read_to_end(&mut bytes)?;
        parse_idx(&bytes)
    } else {
        parse_idx(&raw)
    }
}

/// Writes an IDX file, gzip-compressed when the path ends in `.gz`.
pub fn write_idx(path: impl AsRef<Path>, array: &IdxArray) -> Result<()> {
    let mut bytes = vec![0, 0, UBYTE, array.dims.len() as u8];
    for &d in &array.dims {
        let d = u32::try_from(d).map_err(|_| Error::param("IDX dimension exceeds u32"))?;
        bytes.extend_from_slice(&d.to_be_bytes());
    }
    bytes.extend_from_slice(&array.data);
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e == "gz") {
        let mut enc = GzEncoder::new(fs::File::create(path)?, Compression::default());
        enc.write_all(&bytes)?;
        enc.finish()?;
    } else {
        fs::write(path, bytes)?;
    }
    Ok(())
}

/// Loads an image file (`n x rows x cols [x channels]`) with its label file
/// (`n`). With `classes` given, labels at or above it are rejected;
/// otherwise the class table is `0..=max_label`.
pub fn load_idx(
    images: impl AsRef<Path>,
    labels: impl AsRef<Path>,
    classes: Option<usize>,
) -> Result<ImageDataset> {
    let img = read_idx(images)?;
    let lab = read_idx(labels)?;
    let (n, rows, cols, channels) = match img.dims[..] {
        [n, r, c] => (n, r, c, 1),
        [n, r, c, z] => (n, r, c, z),
        _ => {
            return Err(Error::format(
                "IDX",
                format!("image file has {} dimensions", img.dims.len()),
            ))
        }
    };
    if lab.dims.len() != 1 || lab.dims[0] != n {
        return Err(Error::format(
            "IDX",
            format!("label file shape {:?} does not match {n} images", lab.dims),
        ));
    }
    let labels: Vec<usize> = lab.data.iter().map(|&l| l as usize).collect();
    let class_count = match classes {
        Some(c) => {
            if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
                return Err(Error::LabelOutOfRange {
                    label: bad,
                    classes: c,
                });
            }
            c
        }
        None => labels.iter().max().map_or(0, |m| m + 1),
    };
    let size = rows * cols * channels;
    let images = if size == 0 {
        vec![Vec::new(); n]
    } else {
        img.data.chunks_exact(size).map(<[u8]>::to_vec).collect()
    };
    Ok(ImageDataset {
        rows,
        cols,
        channels,
        images,
        labels,
        classes: Dataset::numeric_classes(class_count),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn images(n: usize) -> IdxArray {
        IdxArray {
            dims: vec![n, 2, 3],
            data: (0..n * 6).map(|i| (i * 7 % 256) as u8).collect(),
        }
    }

    #[test]
    fn round_trip_plain_and_gzip() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["a.idx", "a.idx.gz"] {
            let p = dir.path().join(name);
            write_idx(&p, &images(4)).unwrap();
            assert_eq!(read_idx(&p).unwrap(), images(4));
        }
    }

    #[test]
    fn zero_items() {
        let dir = tempfile::tempdir().unwrap();
        let (i, l) = (dir.path().join("i"), dir.path().join("l"));
        write_idx(&i, &images(0)).unwrap();
        write_idx(&l, &IdxArray { dims: vec![0], data: vec![] }).unwrap();
        let d = load_idx(&i, &l, None).unwrap();
        assert!(d.is_empty());
        assert_eq!((d.rows, d.cols), (2, 3));
    }

    #[test]
    fn dataset_pixels_survive() {
        let dir = tempfile::tempdir().unwrap();
        let (i, l) = (dir.path().join("i"), dir.path().join("l"));
        write_idx(&i, &images(3)).unwrap();
        write_idx(&l, &IdxArray { dims: vec![3], data: vec![0, 2, 1] }).unwrap();
        let d = load_idx(&i, &l, None).unwrap();
        assert_eq!(d.len(), 3);
        assert_eq!(d.classes.len(), 3);
        assert_eq!(d.images[1], images(3).data[6..12].to_vec());
        assert!(matches!(
            load_idx(&i, &l, Some(2)),
            Err(Error::LabelOutOfRange { label: 2, classes: 2 })
        ));
    }

    #[test]
    fn malformed_headers() {
        assert!(parse_idx(&[1, 0, 8, 1, 0, 0, 0, 0]).is_err());
        assert!(parse_idx(&[0, 0, 0x0d, 1, 0, 0, 0, 0]).is_err());
        assert!(parse_idx(&[0, 0, 8, 2, 0, 0, 0]).is_err());
        // declares 3 bytes, carries 2
        assert!(parse_idx(&[0, 0, 8, 1, 0, 0, 0, 3, 9, 9]).is_err());
    }
}
