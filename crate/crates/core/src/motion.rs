//! Global translation estimation by phase correlation and shift
//! compensation of history frames.
//!
//! A frame `moved` that is the `reference` circularly shifted by `(dx, dy)`
//! has spectrum `R(m,n) * exp(-i2pi(m dx/M + n dy/N))`. The normalized
//! cross-power spectrum `conj(R) * Moved / |conj(R) * Moved|` is a pure
//! phase ramp whose inverse transform is an impulse at `(dx, dy)`, and
//! multiplying `Moved` by the conjugate ramp undoes the shift.

use std::f64::consts::TAU;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::background::HistoryWindow;
use crate::error::{Error, Result};
use crate::frame::Frame;

/// Denominator guard for the cross-power normalization.
pub const NORM_EPSILON: f64 = 1e-12;

/// The 2-D DFT of a frame, row-major over frequency indices `(n, m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub frame_index: usize,
    pub width: usize,
    pub height: usize,
    pub coeffs: Vec<Complex64>,
}

impl Spectrum {
    fn same_shape(&self, other: &Spectrum) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Integer translation of one frame relative to another.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftEstimate {
    /// Columns, positive to the right.
    pub dx: i64,
    /// Rows, positive downward.
    pub dy: i64,
    /// Height of the correlation peak.
    pub peak_value: f64,
}

impl ShiftEstimate {
    pub fn zero() -> Self {
        Self {
            dx: 0,
            dy: 0,
            peak_value: 1.0,
        }
    }
}

/// Planned forward/inverse 2-D transforms for one frame size.
pub struct Fft2d {
    width: usize,
    height: usize,
    row_forward: Arc<dyn Fft<f64>>,
    row_inverse: Arc<dyn Fft<f64>>,
    col_forward: Arc<dyn Fft<f64>>,
    col_inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2d {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2d")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish()
    }
}

impl Fft2d {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::Dimension(format!(
                "frame must be at least 2x2 to transform, got {width}x{height}"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            width,
            height,
            row_forward: planner.plan_fft_forward(width),
            row_inverse: planner.plan_fft_inverse(width),
            col_forward: planner.plan_fft_forward(height),
            col_inverse: planner.plan_fft_inverse(height),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let (w, h) = (self.width, self.height);
        let (rows, cols) = if inverse {
            (&self.row_inverse, &self.col_inverse)
        } else {
            (&self.row_forward, &self.col_forward)
        };
        rows.process(data);

        let mut transposed = vec![Complex64::default(); w * h];
        for r in 0..h {
            for c in 0..w {
                transposed[c * h + r] = data[r * w + c];
            }
        }
        cols.process(&mut transposed);
        for c in 0..w {
            for r in 0..h {
                data[r * w + c] = transposed[c * h + r];
            }
        }
    }

    pub fn forward(&self, frame: &Frame) -> Result<Spectrum> {
        self.check(frame.width(), frame.height())?;
        let mut coeffs: Vec<Complex64> = frame.pixels().iter().map(|&p| Complex64::new(p, 0.0)).collect();
        self.transform(&mut coeffs, false);
        Ok(Spectrum {
            frame_index: frame.index(),
            width: self.width,
            height: self.height,
            coeffs,
        })
    }

    /// Inverse transform including the `1/(M N)` normalization.
    pub fn inverse(&self, spectrum: &Spectrum) -> Result<Vec<Complex64>> {
        self.check(spectrum.width, spectrum.height)?;
        let mut data = spectrum.coeffs.clone();
        self.transform(&mut data, true);
        let scale = 1.0 / (self.width * self.height) as f64;
        for v in &mut data {
            *v *= scale;
        }
        Ok(data)
    }

    fn check(&self, width: usize, height: usize) -> Result<()> {
        if width != self.width || height != self.height {
            return Err(Error::Dimension(format!(
                "transform planned for {}x{}, got {width}x{height}",
                self.width, self.height
            )));
        }
        Ok(())
    }

    /// Normalized cross-power spectrum `conj(R) * Moved / |conj(R) * Moved|`.
    /// Bins whose product magnitude falls below [`NORM_EPSILON`] are zeroed.
    pub fn cross_power(&self, reference: &Spectrum, moved: &Spectrum) -> Result<Spectrum> {
        if !reference.same_shape(moved) {
            return Err(Error::Dimension(format!(
                "spectra differ: {}x{} vs {}x{}",
                reference.width, reference.height, moved.width, moved.height
            )));
        }
        self.check(reference.width, reference.height)?;
        let mut live = 0usize;
        let coeffs = reference
            .coeffs
            .iter()
            .zip(&moved.coeffs)
            .map(|(r, m)| {
                let p = r.conj() * m;
                let mag = p.norm();
                if mag < NORM_EPSILON {
                    Complex64::default()
                } else {
                    live += 1;
                    p / mag
                }
            })
            .collect();
        if live == 0 {
            return Err(Error::NoSignal);
        }
        Ok(Spectrum {
            frame_index: moved.frame_index,
            width: reference.width,
            height: reference.height,
            coeffs,
        })
    }

    /// Estimate how far `moved` is shifted relative to `reference`.
    pub fn phase_correlate(&self, reference: &Spectrum, moved: &Spectrum) -> Result<ShiftEstimate> {
        let cross = self.cross_power(reference, moved)?;
        let surface = self.inverse(&cross)?;

        // strict `>` keeps the smallest row-major index on ties
        let mut best = 0usize;
        let mut best_val = f64::NEG_INFINITY;
        for (i, v) in surface.iter().enumerate() {
            if v.re > best_val {
                best_val = v.re;
                best = i;
            }
        }
        let peak_x = best % self.width + 1;
        let peak_y = best / self.width + 1;
        Ok(ShiftEstimate {
            dx: unwrap_peak(peak_x, self.width),
            dy: unwrap_peak(peak_y, self.height),
            peak_value: best_val,
        })
    }

    /// Undo `shift` on a spectrum and return the aligned frame.
    pub fn compensate(&self, moved: &Spectrum, shift: ShiftEstimate) -> Result<Frame> {
        self.check(moved.width, moved.height)?;
        let (w, h) = (self.width as i64, self.height as i64);
        if shift.dx.abs() >= w || shift.dy.abs() >= h {
            return Err(Error::Dimension(format!(
                "shift ({}, {}) exceeds frame {}x{}",
                shift.dx, shift.dy, w, h
            )));
        }
        let ramp_x = phase_ramp(self.width, shift.dx);
        let ramp_y = phase_ramp(self.height, shift.dy);
        let mut coeffs = moved.coeffs.clone();
        for (n, row) in coeffs.chunks_mut(self.width).enumerate() {
            let fy = ramp_y[n];
            for (m, v) in row.iter_mut().enumerate() {
                *v *= ramp_x[m] * fy;
            }
        }
        let shifted = Spectrum {
            coeffs,
            ..moved.clone()
        };
        let pixels = self.inverse(&shifted)?.into_iter().map(|v| v.re).collect();
        Frame::new(moved.frame_index, self.width, self.height, pixels)
    }

    /// Align each predecessor spectrum (most recent first) to `current`.
    pub fn align_spectra(&self, current: &Spectrum, predecessors: &[&Spectrum]) -> Result<HistoryWindow> {
        let mut frames = Vec::with_capacity(predecessors.len());
        let mut shifts = Vec::with_capacity(predecessors.len());
        for pred in predecessors {
            let shift = self.phase_correlate(current, pred).map_err(|e| e.at_frame(pred.frame_index))?;
            frames.push(self.compensate(pred, shift)?);
            shifts.push(shift);
        }
        Ok(HistoryWindow::from_aligned(frames, shifts))
    }
}

/// `exp(+i 2 pi k s / len)` for `k in 0..len`, with the phase reduced modulo
/// `len` before scaling.
fn phase_ramp(len: usize, shift: i64) -> Vec<Complex64> {
    let n = len as i64;
    (0..n)
        .map(|k| {
            let turns = (k * shift).rem_euclid(n) as f64 / len as f64;
            Complex64::from_polar(1.0, TAU * turns)
        })
        .collect()
}

/// Map a 1-based peak coordinate to a signed shift: `p - len - 1` past the
/// half-way point, `p - 1` otherwise.
pub fn unwrap_peak(peak: usize, len: usize) -> i64 {
    let (p, l) = (peak as i64, len as i64);
    if 2 * p > l {
        p - l - 1
    } else {
        p - 1
    }
}

pub fn forward_transform(frame: &Frame) -> Result<Spectrum> {
    Fft2d::new(frame.width(), frame.height())?.forward(frame)
}

pub fn inverse_transform(spectrum: &Spectrum) -> Result<Vec<Complex64>> {
    Fft2d::new(spectrum.width, spectrum.height)?.inverse(spectrum)
}

pub fn phase_correlate(reference: &Spectrum, moved: &Spectrum) -> Result<ShiftEstimate> {
    Fft2d::new(reference.width, reference.height)?.phase_correlate(reference, moved)
}

pub fn compensate(moved: &Spectrum, shift: ShiftEstimate) -> Result<Frame> {
    Fft2d::new(moved.width, moved.height)?.compensate(moved, shift)
}

/// Align `predecessors` (most recent first) to `current` and quantize them.
pub fn align_history(current: &Frame, predecessors: &[Frame]) -> Result<HistoryWindow> {
    let fft = Fft2d::new(current.width(), current.height())?;
    let cur = fft.forward(current)?;
    let mut spectra = Vec::with_capacity(predecessors.len());
    for p in predecessors {
        if !p.same_shape(current) {
            return Err(Error::Dimension(format!(
                "frame {} is {}x{}, current is {}x{}",
                p.index(),
                p.width(),
                p.height(),
                current.width(),
                current.height()
            )));
        }
        spectra.push(fft.forward(p)?);
    }
    let refs: Vec<&Spectrum> = spectra.iter().collect();
    fft.align_spectra(&cur, &refs)
}
