//! Axis-aligned boxes and binary masks.
//!
//! Boxes are stored as `(x, y, w, h)` in pixel units with a top-left origin.
//! All arithmetic is continuous; on integer-aligned boxes it coincides with
//! counting pixels.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("box has non-finite coordinate: ({x}, {y}, {w}, {h})")]
    NonFinite { x: f64, y: f64, w: f64, h: f64 },
    #[error("box has negative extent: w={w}, h={h}")]
    NegativeExtent { w: f64, h: f64 },
    #[error("mask data has {got} entries, expected {width}x{height}")]
    MaskSize { width: usize, height: usize, got: usize },
    #[error("image dimensions must be positive, got {width}x{height}")]
    EmptyImage { width: u32, height: u32 },
}

/// A point in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_squared(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// Width and height of an image in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImageSize {
    pub width: u32,
    pub height: u32,
}

impl ImageSize {
    pub fn new(width: u32, height: u32) -> Result<Self, GeometryError> {
        if width == 0 || height == 0 {
            return Err(GeometryError::EmptyImage { width, height });
        }
        Ok(Self { width, height })
    }

    pub fn diagonal(self) -> f64 {
        f64::from(self.width).hypot(f64::from(self.height))
    }
}

/// Axis-aligned rectangle, `(x, y)` is the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    /// Builds a box without validation. Use [`BBox::try_new`] for untrusted input.
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn try_new(x: f64, y: f64, w: f64, h: f64) -> Result<Self, GeometryError> {
        let b = Self { x, y, w, h };
        b.validate()?;
        Ok(b)
    }

    /// Converts corner format `(x1, y1, x2, y2)`.
    pub fn from_corners(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self, GeometryError> {
        Self::try_new(x1, y1, x2 - x1, y2 - y1)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let Self { x, y, w, h } = *self;
        if !(x.is_finite() && y.is_finite() && w.is_finite() && h.is_finite()) {
            return Err(GeometryError::NonFinite { x, y, w, h });
        }
        if w < 0.0 || h < 0.0 {
            return Err(GeometryError::NegativeExtent { w, h });
        }
        Ok(())
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn center(&self) -> Point {
        Point::new(self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn to_corners(&self) -> [f64; 4] {
        [self.x, self.y, self.right(), self.bottom()]
    }

    pub fn translate(&self, dx: f64, dy: f64) -> Self {
        Self::new(self.x + dx, self.y + dy, self.w, self.h)
    }

    /// Scales every coordinate (position and extent) by `k`.
    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.x * k, self.y * k, self.w * k, self.h * k)
    }

    pub fn intersection_area(&self, other: &BBox) -> f64 {
        let iw = self.right().min(other.right()) - self.x.max(other.x);
        let ih = self.bottom().min(other.bottom()) - self.y.max(other.y);
        if iw <= 0.0 || ih <= 0.0 {
            0.0
        } else {
            iw * ih
        }
    }

    /// Intersection over union; zero when the union is empty.
    pub fn iou(&self, other: &BBox) -> f64 {
        let inter = self.intersection_area(other);
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            (inter / union).clamp(0.0, 1.0)
        }
    }

    /// True iff the overlap has strictly positive area. Shared edges do not count.
    pub fn intersects(&self, other: &BBox) -> bool {
        self.intersection_area(other) > 0.0
    }

    pub fn contains_point(&self, p: Point) -> bool {
        p.x >= self.x && p.x <= self.right() && p.y >= self.y && p.y <= self.bottom()
    }

    /// Grows width and height by `1 + factor` about the center, then clips to the image.
    pub fn enlarge(&self, factor: f64, bounds: ImageSize) -> Self {
        let c = self.center();
        let w = self.w * (1.0 + factor);
        let h = self.h * (1.0 + factor);
        let x1 = (c.x - w / 2.0).max(0.0);
        let y1 = (c.y - h / 2.0).max(0.0);
        let x2 = (c.x + w / 2.0).min(f64::from(bounds.width));
        let y2 = (c.y + h / 2.0).min(f64::from(bounds.height));
        Self::new(x1, y1, (x2 - x1).max(0.0), (y2 - y1).max(0.0))
    }
}

/// Row-major boolean grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, GeometryError> {
        if bits.len() != width * height {
            return Err(GeometryError::MaskSize {
                width,
                height,
                got: bits.len(),
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn set(&mut self, col: usize, row: usize, value: bool) {
        self.bits[row * self.width + col] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Tightest box covering every set pixel, `None` for an empty mask.
    ///
    /// Extents are inclusive: a single pixel at `(c, r)` yields `(c, r, 1, 1)`.
    pub fn bounding_box(&self) -> Option<BBox> {
        let mut min_col = usize::MAX;
        let mut min_row = usize::MAX;
        let mut max_col = 0;
        let mut max_row = 0;
        let mut any = false;
        for (row, line) in self.bits.chunks_exact(self.width.max(1)).enumerate() {
            for (col, _) in line.iter().enumerate().filter(|(_, &b)| b) {
                any = true;
                min_col = min_col.min(col);
                max_col = max_col.max(col);
                min_row = min_row.min(row);
                max_row = max_row.max(row);
            }
        }
        any.then(|| {
            BBox::new(
                min_col as f64,
                min_row as f64,
                (max_col - min_col + 1) as f64,
                (max_row - min_row + 1) as f64,
            )
        })
    }
}
