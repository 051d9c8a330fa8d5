//! Bit-exact CIFAR-10 binary batch loader.
//!
//! Each record is 3073 bytes: one label byte (0..=9) followed by 3072 pixel
//! bytes in channel-planar order (1024 red, 1024 green, 1024 blue, row-major
//! 32x32). Pixels are scaled to `[0, 1]` by dividing by 255. The 50000
//! training images get a seeded 90/10 train/validation split; the test batch
//! becomes the test split unchanged.

use super::{DataError, DatasetBundle, LabeledImage, Provenance};
use crate::seeding::derive_seed;
use crate::spectral::ImageTensor;
use sha2::{Digest, Sha256};
use std::path::Path;

pub const RECORD_BYTES: usize = 3073;
pub const RECORDS_PER_BATCH: usize = 10_000;
pub const TRAIN_BATCHES: [&str; 5] = [
    "data_batch_1.bin",
    "data_batch_2.bin",
    "data_batch_3.bin",
    "data_batch_4.bin",
    "data_batch_5.bin",
];
pub const TEST_BATCH: &str = "test_batch.bin";
pub const CLASS_COUNT: usize = 10;

fn parse_batch(
    path: &Path,
    bytes: &[u8],
    expected_records: usize,
) -> Result<Vec<(usize, ImageTensor)>, DataError> {
    let display = path.display().to_string();
    if bytes.len() % RECORD_BYTES != 0 {
        return Err(DataError::Format {
            path: display,
            offset: bytes.len() - bytes.len() % RECORD_BYTES,
            message: format!(
                "truncated record: file length {} is not a multiple of {RECORD_BYTES}",
                bytes.len()
            ),
        });
    }
    let records = bytes.len() / RECORD_BYTES;
    if records != expected_records {
        return Err(DataError::Format {
            path: display,
            offset: bytes.len(),
            message: format!("expected {expected_records} records, found {records}"),
        });
    }
    let mut out = Vec::with_capacity(records);
    for r in 0..records {
        let offset = r * RECORD_BYTES;
        let label = bytes[offset] as usize;
        if label >= CLASS_COUNT {
            return Err(DataError::Format {
                path: display,
                offset,
                message: format!("label byte {label} exceeds 9"),
            });
        }
        let pixels: Vec<f64> = bytes[offset + 1..offset + RECORD_BYTES]
            .iter()
            .map(|&b| b as f64 / 255.0)
            .collect();
        out.push((
            label,
            ImageTensor::new(3, 32, 32, pixels).expect("record is 3x32x32"),
        ));
    }
    Ok(out)
}

fn read_file(path: &Path) -> Result<Vec<u8>, DataError> {
    std::fs::read(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Load the six standard binary batches from `dir` and build a bundle with
/// a seeded 90/10 train/validation split of the 50000 training records.
pub fn load_cifar10(dir: &Path, seed: u64) -> Result<DatasetBundle, DataError> {
    let mut digest = Sha256::new();
    let mut train_records = Vec::with_capacity(5 * RECORDS_PER_BATCH);
    for name in TRAIN_BATCHES {
        let path = dir.join(name);
        let bytes = read_file(&path)?;
        digest.update(&bytes);
        train_records.extend(parse_batch(&path, &bytes, RECORDS_PER_BATCH)?);
    }
    let test_path = dir.join(TEST_BATCH);
    let test_bytes = read_file(&test_path)?;
    digest.update(&test_bytes);
    let test_records = parse_batch(&test_path, &test_bytes, RECORDS_PER_BATCH)?;

    let (train_ix, val_ix) = super::split_indices(
        train_records.len(),
        0.10,
        derive_seed(seed, "cifar-split", &[]),
    );
    let build = |indices: &[usize]| -> Vec<LabeledImage> {
        indices
            .iter()
            .enumerate()
            .map(|(pos, &ix)| LabeledImage {
                image: train_records[ix].1.clone(),
                class: train_records[ix].0,
                index: pos,
            })
            .collect()
    };
    let train = build(&train_ix);
    let val = build(&val_ix);
    let test: Vec<LabeledImage> = test_records
        .into_iter()
        .enumerate()
        .map(|(pos, (class, image))| LabeledImage {
            image,
            class,
            index: pos,
        })
        .collect();

    let hex: String = digest
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    Ok(DatasetBundle {
        train,
        val,
        test,
        class_count: CLASS_COUNT,
        provenance: Provenance::File {
            digest: hex,
            summary: format!("cifar10 from {}", dir.display()),
        },
    })
}
