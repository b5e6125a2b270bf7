//! Acting background built from the commonality of aligned history frames.

use crate::error::{Error, Result};
use crate::frame::{Frame, Plane, MAX_GRAY};
use crate::motion::ShiftEstimate;

/// Number of quantization buckets.
pub const BUCKETS: u8 = 10;

/// Largest bucket difference at which two history pixels still agree.
pub const AGREEMENT_TOLERANCE: u8 = 1;

/// The aligned predecessors of the current frame, most recent first, with
/// their bucket images.
#[derive(Debug, Clone)]
pub struct HistoryWindow {
    frames: Vec<Frame>,
    quantized: Vec<Plane<u8>>,
    shifts: Vec<ShiftEstimate>,
}

impl HistoryWindow {
    /// Wrap frames that are already aligned to the current frame.
    pub fn from_aligned(frames: Vec<Frame>, shifts: Vec<ShiftEstimate>) -> Self {
        let quantized = frames.iter().map(quantize).collect();
        Self {
            frames,
            quantized,
            shifts,
        }
    }

    /// A window of frames that need no alignment.
    pub fn from_frames(frames: Vec<Frame>) -> Self {
        let shifts = vec![ShiftEstimate::zero(); frames.len()];
        Self::from_aligned(frames, shifts)
    }

    pub fn eta(&self) -> usize {
        self.frames.len()
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn quantized(&self) -> &[Plane<u8>] {
        &self.quantized
    }

    pub fn shifts(&self) -> &[ShiftEstimate] {
        &self.shifts
    }
}

/// Background image, dissimilarity history and agreement weights for one
/// frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ActingBackground {
    pub eta: usize,
    pub background: Plane<f64>,
    pub dissimilarity: Plane<f64>,
    pub weight: Plane<u8>,
}

impl ActingBackground {
    pub fn width(&self) -> usize {
        self.background.width
    }

    pub fn height(&self) -> usize {
        self.background.height
    }
}

/// Bucket of one intensity: the smallest `j` in `1..=10` with
/// `h / 255 <= j / 10`. Zero falls in bucket 1.
#[inline]
pub fn bucket(intensity: f64) -> u8 {
    let normalized = intensity / MAX_GRAY;
    (1..=BUCKETS)
        .find(|&j| normalized <= j as f64 / BUCKETS as f64)
        .unwrap_or(BUCKETS)
}

pub fn quantize(frame: &Frame) -> Plane<u8> {
    Plane {
        width: frame.width(),
        height: frame.height(),
        data: frame.pixels().iter().map(|&p| bucket(p)).collect(),
    }
}

#[inline]
fn agree(a: u8, b: u8) -> bool {
    a.abs_diff(b) <= AGREEMENT_TOLERANCE
}

/// Per-pixel mean of two history frames where their buckets agree, else 0.
pub fn intersect_pair(h_a: &Frame, h_b: &Frame, q_a: &Plane<u8>, q_b: &Plane<u8>) -> Plane<f64> {
    let data = h_a
        .pixels()
        .iter()
        .zip(h_b.pixels())
        .zip(q_a.data.iter().zip(&q_b.data))
        .map(|((&a, &b), (&qa, &qb))| if agree(qa, qb) { (a + b) / 2.0 } else { 0.0 })
        .collect();
    Plane {
        width: h_a.width(),
        height: h_a.height(),
        data,
    }
}

/// Build the acting background from `eta >= 2` aligned history frames.
///
/// * background: mean of the non-zero pairwise intersections (0 if none)
/// * dissimilarity: sum of `|H_i - H_{i+1}|` over disagreeing pairs, divided by `eta`
/// * weight: number of consecutive pairs that agree, in `0..=eta-1`
pub fn build_background(window: &HistoryWindow) -> Result<ActingBackground> {
    let eta = window.eta();
    if eta < 2 {
        return Err(Error::InsufficientHistory(eta));
    }
    let frames = window.frames();
    let (w, h) = (frames[0].width(), frames[0].height());
    if frames.iter().any(|f| f.width() != w || f.height() != h) {
        return Err(Error::Dimension("history frames differ in size".into()));
    }
    let q = window.quantized();

    let mut sum = vec![0.0f64; w * h];
    let mut nonzero = vec![0u32; w * h];
    let mut dissim = vec![0.0f64; w * h];
    let mut weight = vec![0u8; w * h];

    for i in 0..eta - 1 {
        let (ha, hb) = (frames[i].pixels(), frames[i + 1].pixels());
        let (qa, qb) = (&q[i].data, &q[i + 1].data);
        for l in 0..w * h {
            if agree(qa[l], qb[l]) {
                weight[l] += 1;
                let common = (ha[l] + hb[l]) / 2.0;
                if common != 0.0 {
                    sum[l] += common;
                    nonzero[l] += 1;
                }
            } else {
                dissim[l] += (ha[l] - hb[l]).abs();
            }
        }
    }

    let background = sum
        .iter()
        .zip(&nonzero)
        .map(|(&s, &n)| if n == 0 { 0.0 } else { s / n as f64 })
        .collect();
    let eta_f = eta as f64;
    for d in &mut dissim {
        *d /= eta_f;
    }

    Ok(ActingBackground {
        eta,
        background: Plane { width: w, height: h, data: background },
        dissimilarity: Plane { width: w, height: h, data: dissim },
        weight: Plane { width: w, height: h, data: weight },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column(values: &[f64]) -> HistoryWindow {
        let frames = values
            .iter()
            .enumerate()
            .map(|(i, &v)| Frame::filled(i + 1, 1, 1, v))
            .collect();
        HistoryWindow::from_frames(frames)
    }

    #[test]
    fn bucket_boundaries() {
        assert_eq!(bucket(255.0), 10);
        assert_eq!(bucket(0.0), 1);
        // 128 / 255 = 0.50196, in (0.5, 0.6]
        assert_eq!(bucket(128.0), 6);
        assert_eq!(bucket(25.5), 1);
        assert_eq!(bucket(25.6), 2);
    }

    #[test]
    fn intersect_examples() {
        let pair = |a: f64, b: f64| {
            let (fa, fb) = (Frame::filled(1, 1, 1, a), Frame::filled(2, 1, 1, b));
            intersect_pair(&fa, &fb, &quantize(&fa), &quantize(&fb)).data[0]
        };
        // buckets 4 and 5
        assert_eq!(pair(100.0, 110.0), 105.0);
        // buckets 2 and 8
        assert_eq!(pair(30.0, 200.0), 0.0);
    }

    #[test]
    fn self_intersection_is_identity() {
        let f = Frame::new(1, 3, 1, vec![0.0, 77.0, 255.0]).unwrap();
        let q = quantize(&f);
        assert_eq!(intersect_pair(&f, &f, &q, &q).data, f.pixels());
    }

    #[test]
    fn static_scene_fixed_point() {
        let f = Frame::new(1, 2, 2, vec![10.0, 90.0, 180.0, 250.0]).unwrap();
        let win = HistoryWindow::from_frames(vec![f.clone(); 4]);
        let bg = build_background(&win).unwrap();
        assert_eq!(bg.background.data, f.pixels());
        assert!(bg.dissimilarity.data.iter().all(|&d| d == 0.0));
        assert!(bg.weight.data.iter().all(|&w| w == 3));
    }

    #[test]
    fn one_pixel_hand_evaluation() {
        // buckets 4, 5, 5, 7: pairs (1,2) and (2,3) agree, (3,4) differs by 60
        let bg = build_background(&column(&[100.0, 105.0, 110.0, 170.0])).unwrap();
        assert_eq!(bg.weight.data[0], 2);
        assert_eq!(bg.dissimilarity.data[0], 15.0);
        assert_eq!(bg.background.data[0], (102.5 + 107.5) / 2.0);
    }

    #[test]
    fn total_disagreement_zeroes_background() {
        let bg = build_background(&column(&[10.0, 200.0, 10.0, 200.0])).unwrap();
        assert_eq!(bg.weight.data[0], 0);
        assert_eq!(bg.background.data[0], 0.0);
        assert_eq!(bg.dissimilarity.data[0], 3.0 * 190.0 / 4.0);
    }

    #[test]
    fn short_window_rejected() {
        assert!(matches!(
            build_background(&column(&[1.0])),
            Err(Error::InsufficientHistory(1))
        ));
    }
}
