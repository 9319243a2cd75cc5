//! Deterministic stand-in images for runs without a real dataset.

use std::f64::consts::PI;

use crate::image::Image;
use crate::rng::RandomStream;

/// `count` smooth colour images: each channel is a sum of three random
/// low-frequency waves mapped into `[0.15, 0.85]`.
pub fn synthetic_images(seed: u64, count: usize, height: usize, width: usize) -> Vec<Image> {
    let mut rng = RandomStream::new(seed);
    (0..count)
        .map(|_| {
            let waves: Vec<[f64; 4]> = (0..9)
                .map(|_| {
                    [
                        rng.uniform(0.5, 3.0),
                        rng.uniform(0.5, 3.0),
                        rng.uniform(0.0, 2.0 * PI),
                        rng.uniform(0.3, 1.0),
                    ]
                })
                .collect();
            Image::from_fn(height, width, |r, c| {
                let (y, x) = (r as f64 / height as f64, c as f64 / width as f64);
                [0, 1, 2].map(|ch| {
                    let (sum, norm) = waves[ch * 3..ch * 3 + 3].iter().fold((0.0, 0.0), |(s, n), w| {
                        (s + w[3] * (2.0 * PI * (w[0] * y + w[1] * x) + w[2]).sin(), n + w[3])
                    });
                    0.5 + 0.35 * sum / norm
                })
            })
        })
        .collect()
}

/// Smooth diagonal colour gradient.
pub fn gradient_image(height: usize, width: usize) -> Image {
    let hy = (height.max(2) - 1) as f64;
    let wx = (width.max(2) - 1) as f64;
    Image::from_fn(height, width, |r, c| {
        let (y, x) = (r as f64 / hy, c as f64 / wx);
        [x, y, 1.0 - 0.5 * (x + y)]
    })
}
