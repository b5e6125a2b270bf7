//! Per-frame orchestration: align, model the background, classify, refine,
//! track.

use std::collections::VecDeque;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::background::{build_background, ActingBackground, HistoryWindow};
use crate::blob::{refine_mask, DetectedObject, RefineParams, Refinement};
use crate::error::{Error, Result};
use crate::foreground::{classify_moving, difference_foreground, LevelBands};
use crate::frame::{Frame, Plane};
use crate::motion::{Fft2d, Spectrum};
use crate::sequence_io::DetectionRecord;
use crate::tracker::{StepReport, Track, Tracker, TrackerConfig, DEFAULT_PHI};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub eta: usize,
    pub alpha: f64,
    pub phi: f64,
    pub min_blob_area: usize,
    pub min_object_side: usize,
    /// Defaults to `2 * eta` when absent.
    pub invisible_max: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            eta: 4,
            alpha: 1.5,
            phi: DEFAULT_PHI,
            min_blob_area: 9,
            min_object_side: 2,
            invisible_max: None,
        }
    }
}

impl PipelineConfig {
    /// Parse a JSON config; absent fields keep their defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn invisible_limit(&self) -> usize {
        self.invisible_max.unwrap_or(2 * self.eta)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.eta < 2 || self.eta > 255 {
            return bad(format!("eta must be in 2..=255, got {}", self.eta));
        }
        if !(self.alpha > 1.0) || !self.alpha.is_finite() {
            return bad(format!("alpha must exceed 1, got {}", self.alpha));
        }
        if !(self.phi > 255.0) {
            return bad(format!("phi must exceed 255, got {}", self.phi));
        }
        if self.invisible_limit() < 1 {
            return bad("invisible_max must be at least 1".into());
        }
        if self.min_blob_area < 1 {
            return bad("min_blob_area must be at least 1".into());
        }
        Ok(())
    }

    pub fn refine_params(&self) -> RefineParams {
        RefineParams {
            alpha: self.alpha,
            min_blob_area: self.min_blob_area,
            min_object_side: self.min_object_side,
        }
    }

    pub fn tracker_config(&self) -> TrackerConfig {
        TrackerConfig {
            alpha: self.alpha,
            phi: self.phi,
            invisible_max: self.invisible_limit(),
        }
    }
}

/// Everything computed for one operated frame.
#[derive(Debug, Clone)]
pub struct FrameResult {
    pub frame_index: usize,
    pub window: HistoryWindow,
    pub background: ActingBackground,
    pub foreground: Plane<f64>,
    pub mask: Plane<u8>,
    pub refinements: Vec<Refinement>,
    pub objects: Vec<DetectedObject>,
    pub step: StepReport,
    /// Live tracks after the update, ascending id.
    pub tracks: Vec<Track>,
}

impl FrameResult {
    /// Rows for the detections CSV: tracks seen this frame.
    pub fn detections(&self) -> Vec<DetectionRecord> {
        self.tracks
            .iter()
            .filter(|t| t.is_visible())
            .map(|t| DetectionRecord {
                frame: self.frame_index,
                id: t.id,
                bbox: t.bbox(),
            })
            .collect()
    }
}

/// Stateful frame-by-frame runner.
#[derive(Debug)]
pub struct Pipeline {
    config: PipelineConfig,
    bands: LevelBands,
    fft: Option<Fft2d>,
    history: VecDeque<(Frame, Spectrum)>,
    tracker: Tracker,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            bands: LevelBands::new(config.eta)?,
            tracker: Tracker::new(config.tracker_config()),
            config,
            fft: None,
            history: VecDeque::new(),
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn tracker(&self) -> &Tracker {
        &self.tracker
    }

    /// Feed the next frame. The first `eta` frames only fill the history and
    /// return `None`.
    pub fn push(&mut self, frame: Frame) -> Result<Option<FrameResult>> {
        let index = frame.index();
        self.push_inner(frame).map_err(|e| e.at_frame(index))
    }

    fn push_inner(&mut self, frame: Frame) -> Result<Option<FrameResult>> {
        if self.fft.is_none() {
            self.fft = Some(Fft2d::new(frame.width(), frame.height())?);
        }
        let fft = self.fft.as_ref().expect("set above");
        let spectrum = fft.forward(&frame)?;

        let result = if self.history.len() < self.config.eta {
            None
        } else {
            let preds: Vec<&Spectrum> = self.history.iter().map(|(_, s)| s).collect();
            let window = fft.align_spectra(&spectrum, &preds)?;
            let background = build_background(&window)?;
            let foreground = difference_foreground(&frame, &background)?;
            let mask = classify_moving(&foreground, &background.weight, &background.dissimilarity, &self.bands);
            let refinements = refine_mask(&mask, &frame, &self.config.refine_params());
            let objects: Vec<DetectedObject> = refinements.iter().filter_map(|r| r.object.clone()).collect();
            let step = self.tracker.step(&objects);
            Some(FrameResult {
                frame_index: frame.index(),
                window,
                background,
                foreground,
                mask,
                refinements,
                objects,
                step,
                tracks: self.tracker.tracks().to_vec(),
            })
        };

        self.history.push_front((frame, spectrum));
        self.history.truncate(self.config.eta);
        Ok(result)
    }
}

/// One row of the track-state dump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackState {
    pub frame: usize,
    pub id: u64,
    pub row: f64,
    pub col: f64,
    pub v_row: f64,
    pub v_col: f64,
    pub invisible_count: usize,
}

pub const TRACK_STATE_HEADER: &str = "frame,id,row,col,v_row,v_col,invisible";

impl TrackState {
    pub fn of(frame: usize, t: &Track) -> Self {
        let (row, col) = t.kalman.centroid();
        let (v_row, v_col) = t.kalman.velocity();
        Self {
            frame,
            id: t.id,
            row,
            col,
            v_row,
            v_col,
            invisible_count: t.invisible_count,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.4},{:.4},{:.4},{:.4},{}",
            self.frame, self.id, self.row, self.col, self.v_row, self.v_col, self.invisible_count
        )
    }
}

/// Output of a whole-sequence run.
#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub detections: Vec<DetectionRecord>,
    pub track_states: Vec<TrackState>,
    /// Frames that went through detection and tracking.
    pub operated_frames: usize,
    /// Pipeline compute time, excluding whatever `on_frame` does.
    pub compute_seconds: f64,
}

/// Run every frame through a fresh pipeline. `on_frame` sees each operated
/// frame's full result (for dumps and annotation) outside the timed region.
pub fn run_sequence(
    frames: Vec<Frame>,
    config: &PipelineConfig,
    mut on_frame: impl FnMut(&Frame, &FrameResult) -> Result<()>,
) -> Result<RunSummary> {
    config.validate()?;
    if frames.len() <= config.eta {
        return Err(Error::InsufficientFrames {
            frames: frames.len(),
            eta: config.eta,
        });
    }
    let mut pipeline = Pipeline::new(*config)?;
    let mut summary = RunSummary::default();
    for frame in frames {
        let start = Instant::now();
        let kept = frame.clone();
        let result = pipeline.push(frame)?;
        summary.compute_seconds += start.elapsed().as_secs_f64();
        if let Some(res) = result {
            summary.operated_frames += 1;
            summary.detections.extend(res.detections());
            summary
                .track_states
                .extend(res.tracks.iter().map(|t| TrackState::of(res.frame_index, t)));
            on_frame(&kept, &res)?;
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(PipelineConfig::default().validate().is_ok());
        let with = |f: fn(&mut PipelineConfig)| {
            let mut c = PipelineConfig::default();
            f(&mut c);
            c.validate()
        };
        assert!(matches!(with(|c| c.eta = 1), Err(Error::Config(_))));
        assert!(matches!(with(|c| c.alpha = 1.0), Err(Error::Config(_))));
        assert!(matches!(with(|c| c.phi = 255.0), Err(Error::Config(_))));
        assert!(matches!(with(|c| c.invisible_max = Some(0)), Err(Error::Config(_))));
        assert_eq!(PipelineConfig::default().invisible_limit(), 8);
    }

    #[test]
    fn config_json_defaults() {
        let c = PipelineConfig::from_json(r#"{"eta": 6}"#).unwrap();
        assert_eq!(c.eta, 6);
        assert_eq!(c.alpha, 1.5);
        assert_eq!(c.invisible_limit(), 12);
        assert!(matches!(PipelineConfig::from_json(r#"{"etta": 6}"#), Err(Error::Config(_))));
    }

    fn textured(index: usize) -> Frame {
        let px = (0..16 * 16).map(|i| ((i * 37) % 251) as f64).collect();
        Frame::new(index, 16, 16, px).unwrap()
    }

    #[test]
    fn exactly_eta_frames_is_too_few() {
        let frames: Vec<Frame> = (1..=4).map(textured).collect();
        let err = run_sequence(frames, &PipelineConfig::default(), |_, _| Ok(())).unwrap_err();
        assert!(matches!(err, Error::InsufficientFrames { frames: 4, eta: 4 }));
    }

    #[test]
    fn static_scene_yields_nothing() {
        let frames: Vec<Frame> = (1..=8).map(textured).collect();
        let mut seen = Vec::new();
        let out = run_sequence(frames, &PipelineConfig::default(), |_, r| {
            seen.push(r.frame_index);
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, vec![5, 6, 7, 8]);
        assert_eq!(out.operated_frames, 4);
        assert!(out.detections.is_empty());
    }

    #[test]
    fn errors_carry_frame_index() {
        let mut p = Pipeline::new(PipelineConfig::default()).unwrap();
        p.push(textured(1)).unwrap();
        let small = Frame::filled(2, 8, 8, 0.0);
        match p.push(small) {
            Err(Error::AtFrame { frame, .. }) => assert_eq!(frame, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
