//! Image containers shared by every stage of the pipeline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest gray value of an 8-bit image.
pub const MAX_GRAY: f64 = 255.0;

/// A grayscale frame with real-valued intensities in `[0, 255]`.
///
/// Intensities stay real because shift compensation produces fractional
/// values; they are clamped whenever a frame is constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    index: usize,
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Frame {
    pub fn new(index: usize, width: usize, height: usize, mut pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::Dimension(format!(
                "{} pixels for a {}x{} frame",
                pixels.len(),
                width,
                height
            )));
        }
        for p in &mut pixels {
            *p = if p.is_finite() { p.clamp(0.0, MAX_GRAY) } else { 0.0 };
        }
        Ok(Self {
            index,
            width,
            height,
            pixels,
        })
    }

    pub fn filled(index: usize, width: usize, height: usize, value: f64) -> Self {
        Self::new(index, width, height, vec![value; width * height])
            .expect("length matches by construction")
    }

    pub fn from_gray8(index: usize, width: usize, height: usize, data: &[u8]) -> Result<Self> {
        Self::new(index, width, height, data.iter().map(|&v| v as f64).collect())
    }

    /// 1-based position in the sequence.
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn with_index(mut self, index: usize) -> Self {
        self.index = index;
        self
    }

    /// Intensities rounded half-up to 8-bit.
    pub fn to_gray8(&self) -> Vec<u8> {
        self.pixels.iter().map(|&p| round_gray(p)).collect()
    }

    pub fn same_shape(&self, other: &Frame) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Round half-up into `0..=255`.
#[inline]
pub fn round_gray(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, MAX_GRAY) as u8
}

/// A row-major 2-D buffer used for intermediate per-pixel maps.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane<T> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<T>,
}

impl<T: Clone> Plane<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<T: Copy> Plane<T> {
    #[inline]
    pub fn at(&self, row: usize, col: usize) -> T {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.data[row * self.width + col] = value;
    }
}

/// Axis-aligned box. `x`/`y` is the top-left pixel, 1-based when read from
/// or written to disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w.max(0.0) * self.h.max(0.0)
    }

    pub fn intersection_area(&self, other: &BoundingBox) -> f64 {
        let iw = (self.x + self.w).min(other.x + other.w) - self.x.max(other.x);
        let ih = (self.y + self.h).min(other.y + other.h) - self.y.max(other.y);
        if iw <= 0.0 || ih <= 0.0 {
            0.0
        } else {
            iw * ih
        }
    }
}
