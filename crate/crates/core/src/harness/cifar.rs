//! CIFAR-10 binary batches: records of one label byte followed by the 1024
//! red, 1024 green and 1024 blue bytes of a 32x32 image, each plane row-major.

use std::path::Path;

use thiserror::Error;

use crate::image::Image;

pub const CIFAR_SIDE: usize = 32;
pub const CIFAR_RECORD_LEN: usize = 1 + 3 * CIFAR_SIDE * CIFAR_SIDE;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read dataset: {0}")]
    Io(#[from] std::io::Error),
    #[error("CIFAR-10 batch has {0} bytes, not a multiple of 3073")]
    Length(usize),
    #[error("record {record} has label {label}, expected 0..=9")]
    Label { record: usize, label: u8 },
    #[error("cannot decode image: {0}")]
    Decode(String),
}

pub fn parse_cifar10_batch(bytes: &[u8]) -> Result<Vec<(Image, usize)>, DatasetError> {
    if !bytes.len().is_multiple_of(CIFAR_RECORD_LEN) {
        return Err(DatasetError::Length(bytes.len()));
    }
    let plane = CIFAR_SIDE * CIFAR_SIDE;
    bytes
        .chunks_exact(CIFAR_RECORD_LEN)
        .enumerate()
        .map(|(record, rec)| {
            let label = rec[0];
            if label > 9 {
                return Err(DatasetError::Label { record, label });
            }
            let pixels = &rec[1..];
            let image = Image::from_fn(CIFAR_SIDE, CIFAR_SIDE, |r, c| {
                let i = r * CIFAR_SIDE + c;
                [0, 1, 2].map(|ch| pixels[ch * plane + i] as f64 / 255.0)
            });
            Ok((image, label as usize))
        })
        .collect()
}

pub fn load_cifar10_batch(path: impl AsRef<Path>) -> Result<Vec<(Image, usize)>, DatasetError> {
    parse_cifar10_batch(&std::fs::read(path)?)
}
