//! Foreground differencing and moving-pixel classification.

use crate::background::ActingBackground;
use crate::error::{Error, Result};
use crate::frame::{Frame, Plane};

/// Highest gray value.
pub const CHI: u32 = 255;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Level {
    Low,
    Medium,
    High,
}

/// Three-level banding of weights and intensities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelBands {
    /// Weights at or below this are low.
    pub weight_low_max: u8,
    /// The only high weight, `eta - 1`.
    pub weight_high: u8,
    /// Intensities at or below this are low (`floor(chi/3)`).
    pub intensity_low_max: f64,
    /// Intensities at or above this are high (`floor(2 chi/3)`).
    pub intensity_high_min: f64,
}

impl LevelBands {
    pub fn new(eta: usize) -> Result<Self> {
        if eta < 2 || eta > u8::MAX as usize {
            return Err(Error::Config(format!("eta must be in 2..=255, got {eta}")));
        }
        let top = (eta - 1) as u8;
        Ok(Self {
            weight_low_max: top / 3,
            weight_high: top,
            intensity_low_max: (CHI / 3) as f64,
            intensity_high_min: (2 * CHI / 3) as f64,
        })
    }

    pub fn weight_level(&self, w: u8) -> Level {
        if w >= self.weight_high {
            Level::High
        } else if w <= self.weight_low_max {
            Level::Low
        } else {
            Level::Medium
        }
    }

    pub fn intensity_level(&self, v: f64) -> Level {
        if v <= self.intensity_low_max {
            Level::Low
        } else if v >= self.intensity_high_min {
            Level::High
        } else {
            Level::Medium
        }
    }

    /// The moving-pixel decision for one pixel's weight, dissimilarity and
    /// foreground levels. Combinations without a positive rule are 0.
    pub fn decide(&self, w: Level, d: Level, f: Level) -> bool {
        match (w, d) {
            (Level::Medium, _) => f >= d,
            (Level::Low, Level::Low) => f > d,
            _ => false,
        }
    }
}

/// `|v_t - B|`, with pixels of weight `eta - 1` zeroed in both operands.
pub fn difference_foreground(current: &Frame, bg: &ActingBackground) -> Result<Plane<f64>> {
    if current.width() != bg.width() || current.height() != bg.height() {
        return Err(Error::Dimension("frame and background differ in size".into()));
    }
    let stable = (bg.eta - 1) as u8;
    let data = current
        .pixels()
        .iter()
        .zip(&bg.background.data)
        .zip(&bg.weight.data)
        .map(|((&v, &b), &w)| if w >= stable { 0.0 } else { (v - b).abs() })
        .collect();
    Ok(Plane {
        width: current.width(),
        height: current.height(),
        data,
    })
}

/// Binary mask of pixels judged to belong to moving objects.
pub fn classify_moving(
    foreground: &Plane<f64>,
    weight: &Plane<u8>,
    dissimilarity: &Plane<f64>,
    bands: &LevelBands,
) -> Plane<u8> {
    let data = foreground
        .data
        .iter()
        .zip(&weight.data)
        .zip(&dissimilarity.data)
        .map(|((&f, &w), &d)| {
            let moving = bands.decide(
                bands.weight_level(w),
                bands.intensity_level(d),
                bands.intensity_level(f),
            );
            moving as u8
        })
        .collect();
    Plane {
        width: foreground.width,
        height: foreground.height,
        data,
    }
}
