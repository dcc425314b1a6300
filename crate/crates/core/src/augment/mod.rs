//! Non-linear motion blur with mask-based box correction.
//!
//! A blur kernel traces a seeded piecewise-linear camera trajectory. The same
//! kernel is applied to the frame and to every object mask; each blurred mask
//! is re-binarized and its tight box replaces the object's box.

mod raster;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{BBox, BinaryMask};

pub use raster::{read_image, read_label_map, write_image, BitDepth, LabelMap};

/// Kernel weights must sum to one within this tolerance.
pub const KERNEL_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("kernel size {0} must be 1 or an odd number >= 3")]
    BadKernelSize(usize),
    #[error("trajectory needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("kernel weights invalid: {0}")]
    BadWeights(String),
    #[error("image buffer has {got} samples, expected {expected}")]
    ImageSize { expected: usize, got: usize },
    #[error("images must have 1 or 3 channels, got {0}")]
    Channels(usize),
    #[error("mask {index} is {got_w}x{got_h}, image is {width}x{height}")]
    MaskMismatch {
        index: usize,
        width: usize,
        height: usize,
        got_w: usize,
        got_h: usize,
    },
    #[error("threshold {0} must lie in [0, 1]")]
    BadThreshold(f64),
    #[error("{path}: {source}")]
    Image {
        path: String,
        #[source]
        source: image::ImageError,
    },
}

/// Square, odd-sized, non-negative weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct BlurKernel {
    size: usize,
    weights: Vec<f64>,
}

impl BlurKernel {
    pub fn new(size: usize, weights: Vec<f64>) -> Result<Self, AugmentError> {
        if size.is_multiple_of(2) {
            return Err(AugmentError::BadKernelSize(size));
        }
        if weights.len() != size * size {
            return Err(AugmentError::BadWeights(format!(
                "{} weights for a {size}x{size} kernel",
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(AugmentError::BadWeights(format!("weight {w} is negative or not finite")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > KERNEL_SUM_TOLERANCE {
            return Err(AugmentError::BadWeights(format!("weights sum to {sum}")));
        }
        Ok(Self { size, weights })
    }

    /// Identity kernel of the given odd size.
    pub fn delta(size: usize) -> Result<Self, AugmentError> {
        let mut w = vec![0.0; size * size];
        if size % 2 == 1 {
            w[size * size / 2] = 1.0;
        }
        Self::new(size, w)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn radius(&self) -> usize {
        self.size / 2
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.size + col]
    }

    /// Plain-text grid, one row per line, whitespace separated.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for row in self.weights.chunks(self.size) {
            let cells: Vec<String> = row.iter().map(|w| format!("{w:.8}")).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        out
    }
}

fn splat(grid: &mut [f64], size: usize, x: f64, y: f64, w: f64) {
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (x0, y0) = (x0 as isize, y0 as isize);
    for (dy, wy) in [(0, 1.0 - fy), (1, fy)] {
        for (dx, wx) in [(0, 1.0 - fx), (1, fx)] {
            let (cx, cy) = (x0 + dx, y0 + dy);
            let share = w * wx * wy;
            if share > 0.0 && cx >= 0 && cy >= 0 && (cx as usize) < size && (cy as usize) < size {
                grid[cy as usize * size + cx as usize] += share;
            }
        }
    }
}

/// Seeded non-linear motion kernel.
///
/// `points` control points are drawn uniformly in the kernel square and the
/// kernel center is spliced into the middle of the sequence. The resulting
/// polyline is sampled at four samples per pixel of arc length, each sample
/// bilinearly splatted, and the grid normalized to unit sum. Size 1 yields the
/// identity kernel.
pub fn generate_kernel(size: usize, points: usize, seed: u64) -> Result<BlurKernel, AugmentError> {
    if size == 1 {
        return BlurKernel::delta(1);
    }
    if size < 3 || size.is_multiple_of(2) {
        return Err(AugmentError::BadKernelSize(size));
    }
    if points < 2 {
        return Err(AugmentError::TooFewPoints(points));
    }
    let radius = (size / 2) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut path: Vec<(f64, f64)> = (0..points)
        .map(|_| {
            (
                rng.random_range(-radius..=radius),
                rng.random_range(-radius..=radius),
            )
        })
        .collect();
    path.insert(points / 2, (0.0, 0.0));

    let mut grid = vec![0.0; size * size];
    for seg in path.windows(2) {
        let ((ax, ay), (bx, by)) = (seg[0], seg[1]);
        let len = (bx - ax).hypot(by - ay);
        let steps = ((len * 4.0).ceil() as usize).max(1);
        for i in 0..steps {
            let t = (i as f64 + 0.5) / steps as f64;
            let (x, y) = (ax + t * (bx - ax), ay + t * (by - ay));
            splat(&mut grid, size, x + radius, y + radius, len.max(1e-12) / steps as f64);
        }
    }
    let sum: f64 = grid.iter().sum();
    if sum.is_nan() || sum <= 0.0 {
        return BlurKernel::delta(size);
    }
    grid.iter_mut().for_each(|w| *w /= sum);
    BlurKernel::new(size, grid)
}

/// Row-major interleaved samples in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    samples: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, samples: Vec<f64>) -> Result<Self, AugmentError> {
        if channels != 1 && channels != 3 {
            return Err(AugmentError::Channels(channels));
        }
        let expected = width * height * channels;
        if samples.len() != expected {
            return Err(AugmentError::ImageSize {
                expected,
                got: samples.len(),
            });
        }
        Ok(Self {
            width,
            height,
            channels,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self, AugmentError> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    pub fn from_mask(mask: &BinaryMask) -> Self {
        Self {
            width: mask.width(),
            height: mask.height(),
            channels: 1,
            samples: mask.bits().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.samples[(y * self.width + x) * self.channels + c]
    }

    pub fn mean(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            self.samples.iter().sum::<f64>() / self.samples.len() as f64
        }
    }

    /// Pixels at or above `threshold` in the first channel.
    pub fn threshold(&self, threshold: f64) -> BinaryMask {
        let bits = self
            .samples
            .chunks(self.channels)
            .map(|px| px[0] >= threshold)
            .collect();
        BinaryMask::from_bits(self.width, self.height, bits).expect("dimensions agree")
    }
}

/// 2D correlation per channel with replicated borders. Output has the input's shape.
pub fn convolve(img: &Image, kernel: &BlurKernel) -> Image {
    let r = kernel.radius() as isize;
    let taps: Vec<(isize, isize, f64)> = (0..kernel.size())
        .flat_map(|row| (0..kernel.size()).map(move |col| (row, col)))
        .map(|(row, col)| (row as isize - r, col as isize - r, kernel.weight(row, col)))
        .filter(|&(_, _, w)| w != 0.0)
        .collect();
    let (w, h, ch) = (img.width as isize, img.height as isize, img.channels);
    let mut out = vec![0.0; img.samples.len()];
    for y in 0..h {
        for x in 0..w {
            let base = (y * w + x) as usize * ch;
            for &(dy, dx, wt) in &taps {
                let sy = (y + dy).clamp(0, h - 1);
                let sx = (x + dx).clamp(0, w - 1);
                let src = (sy * w + sx) as usize * ch;
                for c in 0..ch {
                    out[base + c] += wt * img.samples[src + c];
                }
            }
        }
    }
    Image {
        samples: out,
        ..*img
    }
}

/// Blurs the frame and every object mask with `kernel`, re-binarizes each mask
/// at `threshold` and returns the tight box of what remains (`None` when the
/// blurred mask vanishes).
pub fn blur_frame(
    img: &Image,
    masks: &[BinaryMask],
    kernel: &BlurKernel,
    threshold: f64,
) -> Result<(Image, Vec<Option<BBox>>), AugmentError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(AugmentError::BadThreshold(threshold));
    }
    for (index, m) in masks.iter().enumerate() {
        if m.width() != img.width || m.height() != img.height {
            return Err(AugmentError::MaskMismatch {
                index,
                width: img.width,
                height: img.height,
                got_w: m.width(),
                got_h: m.height(),
            });
        }
    }
    let blurred = convolve(img, kernel);
    let boxes = masks
        .iter()
        .map(|m| convolve(&Image::from_mask(m), kernel).threshold(threshold).bounding_box())
        .collect();
    Ok((blurred, boxes))
}

/// Derives a per-frame kernel seed from the run seed.
pub fn frame_seed(seed: u64, frame: u64) -> u64 {
    // splitmix64 finalizer over the combined value
    let mut z = seed ^ frame.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
