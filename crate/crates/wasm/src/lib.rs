//! Browser bindings: a phase-correlation explorer and a step-through
//! tracking session over a synthetic scene.

use pantrack::annotate::annotate_frame;
use pantrack::evaluation::{aggregate, judge_sequence, FrameRule};
use pantrack::motion::Fft2d;
use pantrack::sequence_io::{DetectionRecord, GroundTruthBox};
use pantrack::synthetic::{Appearance, CameraPath, ObjectSpec, SceneSpec, Segment};
use pantrack::{Frame, FrameResult, Pipeline, PipelineConfig, Plane};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn js(e: pantrack::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn gray_rgba(gray: impl IntoIterator<Item = u8>) -> Vec<u8> {
    gray.into_iter().flat_map(|v| [v, v, v, 255]).collect()
}

fn to_byte(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Result of one correlation run. Images are RGBA, `size` x `size`.
#[wasm_bindgen]
pub struct Correlation {
    size: usize,
    dx: i64,
    dy: i64,
    peak: f64,
    reference: Vec<u8>,
    moved: Vec<u8>,
    surface: Vec<u8>,
}

#[wasm_bindgen]
impl Correlation {
    #[wasm_bindgen(getter)]
    pub fn size(&self) -> usize {
        self.size
    }
    #[wasm_bindgen(getter)]
    pub fn dx(&self) -> i32 {
        self.dx as i32
    }
    #[wasm_bindgen(getter)]
    pub fn dy(&self) -> i32 {
        self.dy as i32
    }
    #[wasm_bindgen(getter)]
    pub fn peak(&self) -> f64 {
        self.peak
    }
    pub fn reference(&self) -> Vec<u8> {
        self.reference.clone()
    }
    pub fn moved(&self) -> Vec<u8> {
        self.moved.clone()
    }
    /// Correlation surface with zero shift at the centre, scaled to 0..255.
    pub fn surface(&self) -> Vec<u8> {
        self.surface.clone()
    }
}

/// Shift a textured frame by `(dx, dy)`, add uniform noise of the given
/// amplitude, and estimate the shift back.
#[wasm_bindgen]
pub fn correlate(size: usize, dx: i32, dy: i32, noise: f64, seed: u64) -> Result<Correlation, JsError> {
    correlate_inner(size, dx as i64, dy as i64, noise, seed).map_err(js)
}

pub fn correlate_inner(size: usize, dx: i64, dy: i64, noise: f64, seed: u64) -> pantrack::Result<Correlation> {
    let spec = SceneSpec {
        width: size,
        height: size,
        frames: 1,
        seed,
        background: Default::default(),
        camera: CameraPath::Constant([0, 0]),
        objects: Vec::new(),
        occluders: Vec::new(),
        flicker: None,
    };
    let texture = spec.world_texture();
    let n = size as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let mut moved = vec![0.0; size * size];
    for y in 0..n {
        for x in 0..n {
            let src = ((y - dy).rem_euclid(n) * n + (x - dx).rem_euclid(n)) as usize;
            let jitter = if noise > 0.0 { rng.random_range(-noise..=noise) } else { 0.0 };
            moved[(y * n + x) as usize] = texture[src] + jitter;
        }
    }
    let reference = Frame::new(1, size, size, texture)?;
    let moved = Frame::new(2, size, size, moved)?;

    let fft = Fft2d::new(size, size)?;
    let (a, b) = (fft.forward(&reference)?, fft.forward(&moved)?);
    let est = fft.phase_correlate(&a, &b)?;
    let raw = fft.inverse(&fft.cross_power(&a, &b)?)?;

    let (lo, hi) = raw
        .iter()
        .fold((f64::MAX, f64::MIN), |(lo, hi), v| (lo.min(v.re), hi.max(v.re)));
    let span = (hi - lo).max(1e-12);
    let half = size / 2;
    let mut surface = vec![0u8; size * size];
    for y in 0..size {
        for x in 0..size {
            let v = raw[((y + half) % size) * size + (x + half) % size].re;
            // square root stretch so the floor is visible next to the peak
            surface[y * size + x] = to_byte(255.0 * ((v - lo) / span).sqrt());
        }
    }

    Ok(Correlation {
        size,
        dx: est.dx,
        dy: est.dy,
        peak: est.peak_value,
        reference: gray_rgba(reference.to_gray8()),
        moved: gray_rgba(moved.to_gray8()),
        surface: gray_rgba(surface),
    })
}

/// A scene with a panning camera that follows one textured object, then
/// reverses. Sizes are in pixels.
pub fn demo_scene(size: usize, frames: usize, pan: i64, speed: i64) -> SceneSpec {
    let turn = frames / 2;
    let mut steps = vec![[pan, 0]; turn];
    steps.extend(vec![[-pan, 0]; frames.saturating_sub(turn + 1)]);
    SceneSpec {
        width: size,
        height: size,
        frames,
        seed: 1,
        background: Default::default(),
        camera: CameraPath::Steps(steps),
        objects: vec![ObjectSpec {
            width: 20,
            height: 20,
            start: [size as i64 / 5, size as i64 * 9 / 20],
            path: vec![
                Segment {
                    frames: turn,
                    velocity: [speed, 0],
                },
                Segment {
                    frames: frames.saturating_sub(turn + 1),
                    velocity: [-speed, 0],
                },
            ],
            appearance: Appearance::Noise {
                low: 130,
                high: 255,
                seed: 11,
            },
        }],
        occluders: Vec::new(),
        flicker: None,
    }
}

/// JSON for the default demo scene, as a starting point for editing.
#[wasm_bindgen]
pub fn default_scene() -> String {
    demo_scene(200, 200, 2, 3).to_json()
}

#[derive(Serialize)]
struct TrackView {
    id: u64,
    x: f64,
    y: f64,
    w: f64,
    h: f64,
    coasting: bool,
}

#[derive(Serialize)]
struct Status {
    frame: usize,
    frames: usize,
    tracks: Vec<TrackView>,
    objects: usize,
    moving_pixels: usize,
    td_pct: Option<f64>,
    fd_pct: Option<f64>,
    md_pct: Option<f64>,
}

/// Frame-by-frame run of the full pipeline over a rendered scene.
#[wasm_bindgen]
pub struct Session {
    frames: Vec<Frame>,
    truth: Vec<GroundTruthBox>,
    pipeline: Pipeline,
    next: usize,
    last: Option<FrameResult>,
    detections: Vec<DetectionRecord>,
}

#[wasm_bindgen]
impl Session {
    /// `spec_json` is a scene description; `eta` and `alpha` override the
    /// pipeline defaults.
    #[wasm_bindgen(constructor)]
    pub fn new(spec_json: &str, eta: usize, alpha: f64) -> Result<Session, JsError> {
        Session::build(spec_json, eta, alpha).map_err(js)
    }

    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.frames[0].width()
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.frames[0].height()
    }

    #[wasm_bindgen(getter)]
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    /// Process the next frame. Returns false once the scene is exhausted.
    pub fn step(&mut self) -> Result<bool, JsError> {
        self.advance().map_err(js)
    }

    /// RGBA pixels of one view of the last processed frame: `annotated`,
    /// `background`, `dissimilarity`, `weight`, `difference`, `mask` or
    /// `blobs`. Views other than `annotated` are black before the history
    /// fills.
    pub fn view(&self, kind: &str) -> Vec<u8> {
        self.render(kind)
    }

    /// Tracks and running scores of the last processed frame, as JSON.
    pub fn status(&self) -> String {
        serde_json::to_string(&self.status_inner()).expect("status serializes")
    }
}

impl Session {
    pub fn build(spec_json: &str, eta: usize, alpha: f64) -> pantrack::Result<Session> {
        let spec = SceneSpec::from_json(spec_json)?;
        let scene = spec.render()?;
        let config = PipelineConfig {
            eta,
            alpha,
            ..PipelineConfig::default()
        };
        Ok(Session {
            frames: scene.frames,
            truth: scene.truth.into_iter().flatten().collect(),
            pipeline: Pipeline::new(config)?,
            next: 0,
            last: None,
            detections: Vec::new(),
        })
    }

    pub fn advance(&mut self) -> pantrack::Result<bool> {
        let Some(frame) = self.frames.get(self.next).cloned() else {
            return Ok(false);
        };
        self.next += 1;
        self.last = self.pipeline.push(frame)?;
        if let Some(res) = &self.last {
            self.detections.extend(res.detections());
        }
        Ok(true)
    }

    pub fn render(&self, kind: &str) -> Vec<u8> {
        let Some(frame) = self.next.checked_sub(1).map(|i| &self.frames[i]) else {
            return vec![0; self.width() * self.height() * 4];
        };
        let blank = || vec![0u8; frame.width() * frame.height() * 4];
        if kind == "annotated" {
            let tracks = self.last.as_ref().map_or(&[][..], |r| r.tracks.as_slice());
            let img = annotate_frame(frame, tracks);
            return img.pixels().flat_map(|p| [p[0], p[1], p[2], 255]).collect();
        }
        let Some(res) = &self.last else {
            return blank();
        };
        let plane = |p: &Plane<f64>| gray_rgba(p.data.iter().map(|&v| to_byte(v)));
        let eta = self.pipeline.config().eta;
        match kind {
            "background" => plane(&res.background.background),
            "dissimilarity" => plane(&res.background.dissimilarity),
            "weight" => gray_rgba(
                res.background
                    .weight
                    .data
                    .iter()
                    .map(|&w| to_byte(255.0 * w as f64 / (eta - 1) as f64)),
            ),
            "difference" => plane(&res.foreground),
            "mask" => gray_rgba(res.mask.data.iter().map(|&m| m * 255)),
            "blobs" => {
                let w = frame.width();
                let mut g = vec![0u8; w * frame.height()];
                for r in &res.refinements {
                    for &(y, x) in r.dilated.pixels() {
                        g[y * w + x] = g[y * w + x].max(80);
                    }
                    for &(y, x) in r.original.pixels() {
                        g[y * w + x] = g[y * w + x].max(160);
                    }
                    for &(y, x) in r.refined.iter().flat_map(|b| b.pixels()) {
                        g[y * w + x] = 255;
                    }
                }
                gray_rgba(g)
            }
            _ => blank(),
        }
    }

    fn status_inner(&self) -> Status {
        let eta = self.pipeline.config().eta;
        let scored = if self.next > eta {
            judge_sequence(&self.detections, &self.truth, eta + 1, self.next)
        } else {
            Vec::new()
        };
        let report = aggregate(&scored, FrameRule::All).ok();
        let res = self.last.as_ref();
        Status {
            frame: self.next,
            frames: self.frames.len(),
            tracks: res
                .map(|r| {
                    r.tracks
                        .iter()
                        .map(|t| {
                            let b = t.bbox();
                            TrackView {
                                id: t.id,
                                x: b.x,
                                y: b.y,
                                w: b.w,
                                h: b.h,
                                coasting: !t.is_visible(),
                            }
                        })
                        .collect()
                })
                .unwrap_or_default(),
            objects: res.map_or(0, |r| r.objects.len()),
            moving_pixels: res.map_or(0, |r| r.mask.data.iter().map(|&m| m as usize).sum()),
            td_pct: report.as_ref().map(|r| r.td_pct),
            fd_pct: report.as_ref().map(|r| r.fd_pct),
            md_pct: report.as_ref().map(|r| r.md_pct),
        }
    }
}
