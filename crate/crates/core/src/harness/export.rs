//! PNG import and export. Export quantizes each channel to
//! `round(v * 255)` with halves rounded up, so a round trip moves a value
//! by at most 1/510.

use std::path::Path;

use image::{ImageBuffer, Rgb, RgbImage};

use super::DatasetError;
use crate::image::Image;

pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

pub fn export_png(img: &Image, path: impl AsRef<Path>) -> std::io::Result<()> {
    let buf: Vec<u8> = img.as_slice().iter().map(|&v| quantize(v)).collect();
    let out: RgbImage = ImageBuffer::from_raw(img.width() as u32, img.height() as u32, buf)
        .expect("buffer length matches dimensions");
    out.save_with_format(path, image::ImageFormat::Png)
        .map_err(std::io::Error::other)
}

/// Loads any PNG as RGB with intensities divided by 255.
pub fn load_png(path: impl AsRef<Path>) -> Result<Image, DatasetError> {
    let decoded = image::open(path)
        .map_err(|e| DatasetError::Decode(e.to_string()))?
        .to_rgb8();
    let (w, h) = decoded.dimensions();
    Ok(Image::from_fn(h as usize, w as usize, |r, c| {
        let Rgb(px) = *decoded.get_pixel(c as u32, r as u32);
        px.map(|b| b as f64 / 255.0)
    }))
}
