//! Image and label-map file IO (PNG, PGM/PPM).

use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma, Rgb};

use super::{AugmentError, Image};
use crate::geometry::BinaryMask;

/// Sample depth of a file, kept so a round trip writes what it read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    fn max(self) -> f64 {
        match self {
            BitDepth::Eight => 255.0,
            BitDepth::Sixteen => 65535.0,
        }
    }
}

fn open(path: &Path) -> Result<DynamicImage, AugmentError> {
    image::open(path).map_err(|source| AugmentError::Image {
        path: path.display().to_string(),
        source,
    })
}

fn scaled<T: Into<f64> + Copy>(raw: &[T], max: f64) -> Vec<f64> {
    raw.iter().map(|&v| v.into() / max).collect()
}

pub fn read_image(path: &Path) -> Result<(Image, BitDepth), AugmentError> {
    let img = open(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let (channels, samples, depth) = match img {
        DynamicImage::ImageLuma8(b) => (1, scaled(b.as_raw(), 255.0), BitDepth::Eight),
        DynamicImage::ImageLuma16(b) => (1, scaled(b.as_raw(), 65535.0), BitDepth::Sixteen),
        DynamicImage::ImageRgb16(b) => (3, scaled(b.as_raw(), 65535.0), BitDepth::Sixteen),
        DynamicImage::ImageLumaA16(_) | DynamicImage::ImageRgba16(_) => {
            (3, scaled(img.into_rgb16().as_raw(), 65535.0), BitDepth::Sixteen)
        }
        // alpha is dropped
        other => (3, scaled(other.into_rgb8().as_raw(), 255.0), BitDepth::Eight),
    };
    Ok((Image::new(w, h, channels, samples)?, depth))
}

pub fn write_image(path: &Path, img: &Image, depth: BitDepth) -> Result<(), AugmentError> {
    let (w, h) = (img.width() as u32, img.height() as u32);
    let max = depth.max();
    let quant = |v: f64| (v.clamp(0.0, 1.0) * max).round();
    let dynamic = match (img.channels(), depth) {
        (1, BitDepth::Eight) => DynamicImage::ImageLuma8(
            ImageBuffer::<Luma<u8>, _>::from_raw(w, h, img.samples().iter().map(|&v| quant(v) as u8).collect())
                .expect("buffer size"),
        ),
        (1, BitDepth::Sixteen) => DynamicImage::ImageLuma16(
            ImageBuffer::<Luma<u16>, _>::from_raw(w, h, img.samples().iter().map(|&v| quant(v) as u16).collect())
                .expect("buffer size"),
        ),
        (_, BitDepth::Eight) => DynamicImage::ImageRgb8(
            ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, img.samples().iter().map(|&v| quant(v) as u8).collect())
                .expect("buffer size"),
        ),
        (_, BitDepth::Sixteen) => DynamicImage::ImageRgb16(
            ImageBuffer::<Rgb<u16>, _>::from_raw(w, h, img.samples().iter().map(|&v| quant(v) as u16).collect())
                .expect("buffer size"),
        ),
    };
    dynamic.save(path).map_err(|source| AugmentError::Image {
        path: path.display().to_string(),
        source,
    })
}

/// Per-pixel object labels: 0 is background, `k` is the k-th object (1-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u16>,
}

impl LabelMap {
    pub fn mask(&self, label: u16) -> BinaryMask {
        let bits = self.labels.iter().map(|&l| l == label).collect();
        BinaryMask::from_bits(self.width, self.height, bits).expect("dimensions agree")
    }
}

pub fn read_label_map(path: &Path) -> Result<LabelMap, AugmentError> {
    let img = open(path)?;
    let (width, height) = (img.width() as usize, img.height() as usize);
    let labels = match img {
        DynamicImage::ImageLuma16(b) => b.into_raw(),
        DynamicImage::ImageLuma8(b) => b.into_raw().into_iter().map(u16::from).collect(),
        other => other.into_luma16().into_raw(),
    };
    Ok(LabelMap { width, height, labels })
}
