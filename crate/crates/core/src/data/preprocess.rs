//! Resize, patch normalization and rescaling of raw grayscale images.

use image::DynamicImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const FLAT_STD: f64 = 1e-6;

/// A grayscale image with intensities on the 0–255 scale, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RawImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl RawImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput("zero-size image".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::Dimension {
                what: "pixel buffer vs width*height",
                expected: width * height,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Converts any decoded image to grayscale using luminance weights.
    pub fn from_dynamic(img: &DynamicImage) -> Result<Self> {
        let luma = img.to_luma8();
        let (w, h) = luma.dimensions();
        Self::new(
            w as usize,
            h as usize,
            luma.into_raw().into_iter().map(f64::from).collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub width: usize,
    pub height: usize,
    pub patch: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            width: 28,
            height: 28,
            patch: 7,
        }
    }
}

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.patch == 0 {
            return Err(Error::Config("preprocess sizes must be nonzero".into()));
        }
        if self.width % self.patch != 0 || self.height % self.patch != 0 {
            return Err(Error::Config(format!(
                "{}x{} is not divisible into {}x{} patches",
                self.width, self.height, self.patch, self.patch
            )));
        }
        Ok(())
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }
}

/// Bilinear resize with half-pixel centers and edge clamping.
pub fn resize_bilinear(img: &RawImage, width: usize, height: usize) -> Vec<f64> {
    let sx = img.width as f64 / width as f64;
    let sy = img.height as f64 / height as f64;
    let sample_axis = |i: usize, scale: f64, len: usize| -> (usize, usize, f64) {
        let src = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (len - 1) as f64);
        let i0 = src.floor() as usize;
        let i1 = (i0 + 1).min(len - 1);
        (i0, i1, src - i0 as f64)
    };
    let mut out = Vec::with_capacity(width * height);
    for y in 0..height {
        let (y0, y1, fy) = sample_axis(y, sy, img.height);
        for x in 0..width {
            let (x0, x1, fx) = sample_axis(x, sx, img.width);
            let p = |yy: usize, xx: usize| img.pixels[yy * img.width + xx];
            let top = p(y0, x0) * (1.0 - fx) + p(y0, x1) * fx;
            let bottom = p(y1, x0) * (1.0 - fx) + p(y1, x1) * fx;
            out.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    out
}

/// Normalizes every `patch`×`patch` tile of a `width`×`height` image in
/// place and maps the result onto [0, 255].
///
/// Each tile is standardized with its own mean and standard deviation, its
/// extremes are then stretched onto [-1, 1], and the whole image is mapped
/// linearly from [-1, 1] to [0, 255]. Flat tiles become 127.5.
pub fn patch_normalize(pixels: &mut [f64], width: usize, height: usize, patch: usize) {
    let mut tile = Vec::with_capacity(patch * patch);
    for ty in (0..height).step_by(patch) {
        for tx in (0..width).step_by(patch) {
            tile.clear();
            for y in ty..ty + patch {
                tile.extend_from_slice(&pixels[y * width + tx..y * width + tx + patch]);
            }
            let n = tile.len() as f64;
            let mean = tile.iter().sum::<f64>() / n;
            let var = tile.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let std = var.sqrt();
            let flat = std < FLAT_STD;
            let z: Vec<f64> = tile.iter().map(|v| (v - mean) / std.max(FLAT_STD)).collect();
            let lo = z.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut k = 0;
            for y in ty..ty + patch {
                for x in tx..tx + patch {
                    pixels[y * width + x] = if flat || hi <= lo {
                        127.5
                    } else {
                        let unit = 2.0 * (z[k] - lo) / (hi - lo) - 1.0;
                        (unit + 1.0) / 2.0 * 255.0
                    };
                    k += 1;
                }
            }
        }
    }
}

/// Full preprocessing chain: bilinear resize, patch normalization, 0–255 scaling.
pub fn preprocess_image(raw: &RawImage, config: &PreprocessConfig) -> Result<Vec<f64>> {
    config.validate()?;
    if raw.width == 0 || raw.height == 0 || raw.pixels.is_empty() {
        return Err(Error::InvalidInput("zero-size image".into()));
    }
    let mut out = resize_bilinear(raw, config.width, config.height);
    patch_normalize(&mut out, config.width, config.height, config.patch);
    Ok(out)
}

pub fn preprocess_dynamic(img: &DynamicImage, config: &PreprocessConfig) -> Result<Vec<f64>> {
    preprocess_image(&RawImage::from_dynamic(img)?, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_maps_to_mid_gray() {
        let raw = RawImage::new(40, 30, vec![93.0; 1200]).unwrap();
        let out = preprocess_image(&raw, &PreprocessConfig::default()).unwrap();
        assert_eq!(out.len(), 784);
        assert!(out.iter().all(|&v| v == 127.5));
    }

    #[test]
    fn tile_extremes_hit_range_ends_exactly() {
        let mut px: Vec<f64> = (0..49).map(f64::from).collect();
        patch_normalize(&mut px, 7, 7, 7);
        assert_eq!(px[0], 0.0);
        assert_eq!(px[48], 255.0);
        // affine oracle: v -> v / 48 * 255
        for (i, v) in px.iter().enumerate() {
            assert!((v - i as f64 / 48.0 * 255.0).abs() < 1e-9);
        }
    }

    #[test]
    fn checkerboard_downsized_keeps_contract() {
        let pixels = (0..56 * 56)
            .map(|i| if ((i / 56) + (i % 56)) % 2 == 0 { 255.0 } else { 0.0 })
            .collect();
        let raw = RawImage::new(56, 56, pixels).unwrap();
        let out = preprocess_image(&raw, &PreprocessConfig::default()).unwrap();
        assert_eq!(out.len(), 784);
        assert!(out.iter().all(|&v| (0.0..=255.0).contains(&v)));
    }

    #[test]
    fn same_size_resize_is_identity() {
        let pixels: Vec<f64> = (0..784).map(|i| (i * 37 % 256) as f64).collect();
        let raw = RawImage::new(28, 28, pixels.clone()).unwrap();
        assert_eq!(resize_bilinear(&raw, 28, 28), pixels);
    }

    #[test]
    fn rejects_empty_and_indivisible() {
        assert!(RawImage::new(0, 3, vec![]).is_err());
        let raw = RawImage::new(4, 4, vec![1.0; 16]).unwrap();
        let bad = PreprocessConfig {
            width: 28,
            height: 28,
            patch: 5,
        };
        assert!(matches!(preprocess_image(&raw, &bad), Err(Error::Config(_))));
    }

    #[test]
    fn color_input_is_converted_to_luma() {
        let rgb = image::RgbImage::from_pixel(14, 14, image::Rgb([200, 10, 10]));
        let out = preprocess_dynamic(&DynamicImage::ImageRgb8(rgb), &PreprocessConfig::default()).unwrap();
        assert!(out.iter().all(|&v| v == 127.5));
    }
}
