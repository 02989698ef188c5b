use std::path::Path;

use super::{Dataset, Examples};
use crate::error::{Error, Result};
use crate::features::Image;

pub const CIFAR_SIDE: usize = 32;
pub const CIFAR_PIXELS: usize = CIFAR_SIDE * CIFAR_SIDE * 3;
pub const CIFAR10_RECORD: usize = 1 + CIFAR_PIXELS;
pub const CIFAR100_RECORD: usize = 2 + CIFAR_PIXELS;

const CIFAR10_TRAIN: [&str; 5] = [
    "data_batch_1.bin",
    "data_batch_2.bin",
    "data_batch_3.bin",
    "data_batch_4.bin",
    "data_batch_5.bin",
];

#[derive(Debug, Clone)]
pub struct CifarData {
    pub train: Dataset,
    pub test: Option<Dataset>,
}

fn parse_records(
    bytes: &[u8],
    record: usize,
    n_classes: usize,
    what: &str,
    label_of: impl Fn(&[u8]) -> Result<usize>,
) -> Result<(Vec<Image>, Vec<usize>)> {
    if !bytes.len().is_multiple_of(record) {
        return Err(Error::Format(format!(
            "{what}: {} bytes is not a multiple of the {record}-byte record",
            bytes.len()
        )));
    }
    let mut images = Vec::with_capacity(bytes.len() / record);
    let mut labels = Vec::with_capacity(bytes.len() / record);
    for (i, rec) in bytes.chunks_exact(record).enumerate() {
        let label = label_of(rec).map_err(|e| Error::Format(format!("{what} record {i}: {e}")))?;
        debug_assert!(label < n_classes);
        let px = &rec[record - CIFAR_PIXELS..];
        images.push(Image::from_planar_bytes(CIFAR_SIDE, CIFAR_SIDE, 3, px)?);
        labels.push(label);
    }
    Ok((images, labels))
}

fn bounded(byte: u8, limit: usize, name: &str) -> Result<usize> {
    if usize::from(byte) < limit {
        Ok(usize::from(byte))
    } else {
        Err(Error::Format(format!("{name} byte {byte} exceeds {}", limit - 1)))
    }
}

/// One CIFAR-10 batch: `[label][3072 planar pixels]` per record.
pub fn parse_cifar10(bytes: &[u8], provenance: &str) -> Result<Dataset> {
    let (images, labels) = parse_records(bytes, CIFAR10_RECORD, 10, provenance, |r| {
        bounded(r[0], 10, "label")
    })?;
    Dataset::new(Examples::Images(images), Some(labels), 10, provenance)
}

/// One CIFAR-100 file: `[coarse][fine][3072 planar pixels]`; fine labels are kept.
pub fn parse_cifar100(bytes: &[u8], provenance: &str) -> Result<Dataset> {
    let (images, labels) = parse_records(bytes, CIFAR100_RECORD, 100, provenance, |r| {
        bounded(r[0], 20, "coarse label")?;
        bounded(r[1], 100, "fine label")
    })?;
    Dataset::new(Examples::Images(images), Some(labels), 100, provenance)
}

/// Builds one CIFAR-10 record, for fixtures.
pub fn cifar10_record(label: u8, pixels: &[u8]) -> Result<Vec<u8>> {
    if pixels.len() != CIFAR_PIXELS {
        return Err(Error::DimensionMismatch { expected: CIFAR_PIXELS, found: pixels.len() });
    }
    let mut r = Vec::with_capacity(CIFAR10_RECORD);
    r.push(label);
    r.extend_from_slice(pixels);
    Ok(r)
}

pub fn cifar100_record(coarse: u8, fine: u8, pixels: &[u8]) -> Result<Vec<u8>> {
    if pixels.len() != CIFAR_PIXELS {
        return Err(Error::DimensionMismatch { expected: CIFAR_PIXELS, found: pixels.len() });
    }
    let mut r = Vec::with_capacity(CIFAR100_RECORD);
    r.extend_from_slice(&[coarse, fine]);
    r.extend_from_slice(pixels);
    Ok(r)
}

fn concat(parts: Vec<Dataset>, n_classes: usize, provenance: String) -> Result<Dataset> {
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for p in parts {
        labels.extend_from_slice(p.labels().unwrap_or_default());
        if let Examples::Images(v) = p.examples {
            images.extend(v);
        }
    }
    Dataset::new(Examples::Images(images), Some(labels), n_classes, provenance)
}

/// Reads whichever `data_batch_{1..5}.bin` exist (at least one) plus `test_batch.bin` if present.
pub fn load_cifar10(dir: impl AsRef<Path>) -> Result<CifarData> {
    let dir = dir.as_ref();
    let mut parts = Vec::new();
    for name in CIFAR10_TRAIN {
        let path = dir.join(name);
        if path.exists() {
            parts.push(parse_cifar10(&std::fs::read(&path)?, name)?);
        }
    }
    if parts.is_empty() {
        return Err(Error::Format(format!("no CIFAR-10 training batches in {}", dir.display())));
    }
    let train = concat(parts, 10, format!("cifar10:{}", dir.display()))?;
    let test_path = dir.join("test_batch.bin");
    let test = if test_path.exists() {
        Some(parse_cifar10(&std::fs::read(&test_path)?, "test_batch.bin")?)
    } else {
        None
    };
    Ok(CifarData { train, test })
}

/// Reads `train.bin` and, if present, `test.bin`.
pub fn load_cifar100(dir: impl AsRef<Path>) -> Result<CifarData> {
    let dir = dir.as_ref();
    let train_path = dir.join("train.bin");
    if !train_path.exists() {
        return Err(Error::Format(format!("no CIFAR-100 train.bin in {}", dir.display())));
    }
    let train = parse_cifar100(&std::fs::read(&train_path)?, "train.bin")?;
    let test_path = dir.join("test.bin");
    let test = if test_path.exists() {
        Some(parse_cifar100(&std::fs::read(&test_path)?, "test.bin")?)
    } else {
        None
    };
    Ok(CifarData { train, test })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Pixels chosen so every corner and channel boundary is distinct.
    fn fixture_pixels(seed: u8) -> Vec<u8> {
        let mut px: Vec<u8> = (0..CIFAR_PIXELS).map(|i| (i * 7 + usize::from(seed)) as u8).collect();
        px[0] = 255;
        px[1023] = 1;
        px[1024] = 254;
        px[3071] = 0;
        px
    }

    #[test]
    fn two_record_round_trip() {
        let (a, b) = (fixture_pixels(3), fixture_pixels(200));
        let mut bytes = cifar10_record(7, &a).unwrap();
        bytes.extend(cifar10_record(0, &b).unwrap());
        assert_eq!(bytes.len(), 2 * 3073);
        let ds = parse_cifar10(&bytes, "fixture").unwrap();
        assert_eq!(ds.labels().unwrap(), &[7, 0]);
        let imgs = ds.images().unwrap();
        assert_eq!(imgs[0].to_planar_bytes(), a);
        assert_eq!(imgs[1].to_planar_bytes(), b);
        // red top-left, red bottom-right, green top-left, blue bottom-right
        assert_eq!(imgs[0].get(0, 0, 0), 1.0);
        assert_eq!(imgs[0].get(0, 31, 31), 1.0 / 255.0);
        assert_eq!(imgs[0].get(1, 0, 0), 254.0 / 255.0);
        assert_eq!(imgs[0].get(2, 31, 31), 0.0);
    }

    #[test]
    fn bad_label_and_truncation() {
        let px = fixture_pixels(0);
        let bad = cifar10_record(17, &px).unwrap();
        assert!(matches!(parse_cifar10(&bad, "f"), Err(Error::Format(_))));
        let good = cifar10_record(1, &px).unwrap();
        assert!(matches!(parse_cifar10(&good[..3072], "f"), Err(Error::Format(_))));
    }

    #[test]
    fn cifar100_layout() {
        let px = fixture_pixels(9);
        let rec = cifar100_record(19, 99, &px).unwrap();
        assert_eq!(rec.len(), 3074);
        let ds = parse_cifar100(&rec, "f").unwrap();
        assert_eq!(ds.labels().unwrap(), &[99]);
        assert_eq!(ds.images().unwrap()[0].to_planar_bytes(), px);
        assert!(parse_cifar100(&cifar100_record(20, 5, &px).unwrap(), "f").is_err());
        assert!(parse_cifar100(&cifar100_record(3, 100, &px).unwrap(), "f").is_err());
        // a CIFAR-10 sized record is not a CIFAR-100 record
        assert!(parse_cifar100(&cifar10_record(1, &px).unwrap(), "f").is_err());
    }

    #[test]
    fn directory_loading() {
        let dir = tempfile::tempdir().unwrap();
        let px = fixture_pixels(1);
        let mut b1 = cifar10_record(2, &px).unwrap();
        b1.extend(cifar10_record(3, &px).unwrap());
        std::fs::write(dir.path().join("data_batch_1.bin"), &b1).unwrap();
        std::fs::write(dir.path().join("data_batch_2.bin"), cifar10_record(4, &px).unwrap()).unwrap();
        std::fs::write(dir.path().join("test_batch.bin"), cifar10_record(9, &px).unwrap()).unwrap();
        let data = load_cifar10(dir.path()).unwrap();
        assert_eq!(data.train.labels().unwrap(), &[2, 3, 4]);
        assert_eq!(data.test.unwrap().labels().unwrap(), &[9]);
        assert!(load_cifar10(dir.path().join("missing")).is_err());
        assert!(load_cifar100(dir.path()).is_err());
    }
}
