//! RGB images with real-valued intensities in `[0, 1]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of colour channels. Only RGB is supported.
pub const CHANNELS: usize = 3;

#[derive(Debug, Error, PartialEq)]
pub enum ImageError {
    #[error("image data has {got} values, expected {expected} for {height}x{width}x3")]
    Length {
        height: usize,
        width: usize,
        expected: usize,
        got: usize,
    },
    #[error("intensity {value} at offset {offset} is outside [0, 1]")]
    OutOfRange { offset: usize, value: f64 },
    #[error("image dimensions differ: {0:?} vs {1:?}")]
    DimensionMismatch((usize, usize), (usize, usize)),
    #[error("image must have at least one pixel")]
    Empty,
}

/// An `height x width x 3` image stored row-major as (row, col, channel).
///
/// Every intensity is guaranteed to lie in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawImage", into = "RawImage")]
pub struct Image {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawImage {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl TryFrom<RawImage> for Image {
    type Error = ImageError;

    fn try_from(raw: RawImage) -> Result<Self, Self::Error> {
        Image::new(raw.height, raw.width, raw.data)
    }
}

impl From<Image> for RawImage {
    fn from(img: Image) -> Self {
        RawImage {
            height: img.height,
            width: img.width,
            data: img.data,
        }
    }
}

impl Image {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self, ImageError> {
        if height == 0 || width == 0 {
            return Err(ImageError::Empty);
        }
        let expected = height * width * CHANNELS;
        if data.len() != expected {
            return Err(ImageError::Length {
                height,
                width,
                expected,
                got: data.len(),
            });
        }
        if let Some((offset, &value)) = data
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(ImageError::OutOfRange { offset, value });
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    /// An image with every intensity set to `value` (clamped into `[0, 1]`).
    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        assert!(height > 0 && width > 0, "image must have at least one pixel");
        Self {
            height,
            width,
            data: vec![value.clamp(0.0, 1.0); height * width * CHANNELS],
        }
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, 0.0)
    }

    /// Builds an image from a per-pixel function returning RGB; values are clamped.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> [f64; 3]) -> Self {
        assert!(height > 0 && width > 0, "image must have at least one pixel");
        let mut data = Vec::with_capacity(height * width * CHANNELS);
        for row in 0..height {
            for col in 0..width {
                data.extend(f(row, col).iter().map(|v| v.clamp(0.0, 1.0)));
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    /// Number of scalar values, `height * width * 3`.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Flattened intensities in (row, col, channel) order.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn offset(&self, row: usize, col: usize) -> usize {
        (row * self.width + col) * CHANNELS
    }

    pub fn pixel(&self, row: usize, col: usize) -> [f64; 3] {
        let o = self.offset(row, col);
        [self.data[o], self.data[o + 1], self.data[o + 2]]
    }

    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.data[self.offset(row, col) + channel]
    }

    /// Mutable access for crate-internal writers that keep values in `[0, 1]`.
    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn check_same_dims(&self, other: &Image) -> Result<(), ImageError> {
        if self.dims() == other.dims() {
            Ok(())
        } else {
            Err(ImageError::DimensionMismatch(self.dims(), other.dims()))
        }
    }

    /// Largest absolute per-channel difference.
    pub fn linf_distance(&self, other: &Image) -> Result<f64, ImageError> {
        self.check_same_dims(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Mean of squared per-channel differences.
    pub fn mse(&self, other: &Image) -> Result<f64, ImageError> {
        self.check_same_dims(other)?;
        let sum: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok(sum / self.data.len() as f64)
    }
}
