//! Deterministic moving-camera scenes with exact ground truth.
//!
//! The background is a circular world texture. The camera offset after frame
//! `t` is the sum of the first `t - 1` per-frame pans, and frame pixel
//! `(r, c)` shows world texel `((r + oy) mod H, (c + ox) mod W)`, so static
//! content drifts by minus the pan. Objects live in unwrapped world
//! coordinates and must stay inside the image. Occluders and flicker regions
//! are world-fixed, like the texture.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{round_gray, BoundingBox, Frame};
use crate::sequence_io::{format_ground_truth, write_pgm, GroundTruthBox};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BackgroundSpec {
    /// Uniform integer noise in `low..=high`, smoothed by a circular 3x3 box
    /// filter.
    Noise { low: u8, high: u8 },
    /// Checkerboard of `cell`-pixel squares.
    Checker { cell: usize, low: u8, high: u8 },
}

impl Default for BackgroundSpec {
    fn default() -> Self {
        BackgroundSpec::Noise { low: 0, high: 255 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CameraPath {
    /// The same `[dx, dy]` pan between every pair of frames.
    Constant([i64; 2]),
    /// Pan from frame `t` to `t + 1` for each `t`; missing steps are zero.
    Steps(Vec<[i64; 2]>),
}

impl Default for CameraPath {
    fn default() -> Self {
        CameraPath::Constant([0, 0])
    }
}

impl CameraPath {
    /// Camera pan from frame `t` (1-based) to frame `t + 1`.
    pub fn step(&self, t: usize) -> [i64; 2] {
        match self {
            CameraPath::Constant(s) => *s,
            CameraPath::Steps(v) => v.get(t - 1).copied().unwrap_or([0, 0]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Appearance {
    Uniform(u8),
    /// Fixed uniform-noise texture carried with the object.
    Noise { low: u8, high: u8, seed: u64 },
    /// Checkerboard of `cell`-pixel squares carried with the object.
    Checker { cell: usize, low: u8, high: u8 },
}

/// `frames` consecutive steps at `velocity` `[dx, dy]` px/frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub frames: usize,
    pub velocity: [i64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub width: usize,
    pub height: usize,
    /// World position `[x, y]` of the top-left pixel on frame 1.
    pub start: [i64; 2],
    /// Motion after frame 1; the object rests once the segments run out.
    #[serde(default)]
    pub path: Vec<Segment>,
    pub appearance: Appearance,
}

impl ObjectSpec {
    /// World top-left on frame `t` (1-based).
    pub fn world_position(&self, t: usize) -> [i64; 2] {
        let mut pos = self.start;
        let mut left = t - 1;
        for seg in &self.path {
            let n = seg.frames.min(left);
            pos[0] += seg.velocity[0] * n as i64;
            pos[1] += seg.velocity[1] * n as i64;
            left -= n;
            if left == 0 {
                break;
            }
        }
        pos
    }
}

/// What an occluder shows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Fill {
    Value(u8),
    /// The world texture, so the occluder only hides what passes behind it.
    Background,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OccluderSpec {
    /// World rectangle `[x, y, w, h]`.
    pub rect: [usize; 4],
    pub fill: Fill,
    /// Inclusive 1-based frame range in which the occluder is drawn.
    #[serde(default)]
    pub active: Option<[usize; 2]>,
}

impl OccluderSpec {
    fn is_active(&self, t: usize) -> bool {
        self.active.is_none_or(|[a, b]| (a..=b).contains(&t))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlickerSpec {
    /// World rectangle `[x, y, w, h]`.
    pub rect: [usize; 4],
    /// Each pixel moves by a fresh uniform integer in `-amplitude..=amplitude`.
    pub amplitude: u8,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub seed: u64,
    #[serde(default)]
    pub background: BackgroundSpec,
    #[serde(default)]
    pub camera: CameraPath,
    #[serde(default)]
    pub objects: Vec<ObjectSpec>,
    #[serde(default)]
    pub occluders: Vec<OccluderSpec>,
    #[serde(default)]
    pub flicker: Option<FlickerSpec>,
}

/// Rendered frames plus one ground-truth list per object.
#[derive(Debug, Clone)]
pub struct Scene {
    pub frames: Vec<Frame>,
    pub truth: Vec<Vec<GroundTruthBox>>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::SpecValidation(msg.into())
}

fn check_rect(what: &str, rect: [usize; 4], w: usize, h: usize) -> Result<()> {
    let [x, y, rw, rh] = rect;
    if rw == 0 || rh == 0 || x >= w || y >= h {
        return Err(invalid(format!("{what} {rect:?} is empty or starts outside the {w}x{h} world")));
    }
    Ok(())
}

impl SceneSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| invalid(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }

    /// Camera offset `[ox, oy]` on frame `t` (1-based).
    pub fn camera_offset(&self, t: usize) -> [i64; 2] {
        (1..t).fold([0, 0], |[x, y], s| {
            let [dx, dy] = self.camera.step(s);
            [x + dx, y + dy]
        })
    }

    /// Object top-left in image coordinates on frame `t`.
    pub fn image_position(&self, object: &ObjectSpec, t: usize) -> [i64; 2] {
        let [wx, wy] = object.world_position(t);
        let [ox, oy] = self.camera_offset(t);
        [wx - ox, wy - oy]
    }

    pub fn validate(&self) -> Result<()> {
        let (w, h) = (self.width, self.height);
        if w < 2 || h < 2 {
            return Err(invalid(format!("frame size {w}x{h} is below 2x2")));
        }
        if self.frames == 0 {
            return Err(invalid("scene has no frames"));
        }
        match self.background {
            BackgroundSpec::Noise { low, high } | BackgroundSpec::Checker { low, high, .. } if low > high => {
                return Err(invalid("background low exceeds high"));
            }
            BackgroundSpec::Checker { cell: 0, .. } => return Err(invalid("checker cell is 0")),
            _ => {}
        }
        for (k, o) in self.objects.iter().enumerate() {
            if o.width == 0 || o.height == 0 {
                return Err(invalid(format!("object {} has zero size", k + 1)));
            }
            match o.appearance {
                Appearance::Noise { low, high, .. } | Appearance::Checker { low, high, .. } if low > high => {
                    return Err(invalid(format!("object {} texture low exceeds high", k + 1)));
                }
                Appearance::Checker { cell: 0, .. } => {
                    return Err(invalid(format!("object {} checker cell is 0", k + 1)));
                }
                _ => {}
            }
            for t in 1..=self.frames {
                let [x, y] = self.image_position(o, t);
                if x < 0 || y < 0 || x as usize + o.width > w || y as usize + o.height > h {
                    return Err(invalid(format!(
                        "object {} leaves the frame on frame {t} at ({x}, {y})",
                        k + 1
                    )));
                }
            }
        }
        for o in &self.occluders {
            check_rect("occluder", o.rect, w, h)?;
        }
        if let Some(f) = &self.flicker {
            check_rect("flicker region", f.rect, w, h)?;
        }
        Ok(())
    }

    /// The circular world texture, row-major.
    pub fn world_texture(&self) -> Vec<f64> {
        let (w, h) = (self.width, self.height);
        match self.background {
            BackgroundSpec::Noise { low, high } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let raw: Vec<f64> = (0..w * h).map(|_| rng.random_range(low..=high) as f64).collect();
                let mut out = vec![0.0; w * h];
                for r in 0..h {
                    for c in 0..w {
                        let mut sum = 0.0;
                        for dr in [h - 1, 0, 1] {
                            for dc in [w - 1, 0, 1] {
                                sum += raw[((r + dr) % h) * w + (c + dc) % w];
                            }
                        }
                        out[r * w + c] = round_gray(sum / 9.0) as f64;
                    }
                }
                out
            }
            BackgroundSpec::Checker { cell, low, high } => (0..w * h)
                .map(|i| {
                    let (r, c) = (i / w, i % w);
                    if (r / cell + c / cell) % 2 == 0 {
                        low as f64
                    } else {
                        high as f64
                    }
                })
                .collect(),
        }
    }

    pub fn render(&self) -> Result<Scene> {
        self.validate()?;
        let (w, h) = (self.width, self.height);
        let world = self.world_texture();
        let textures: Vec<Vec<f64>> = self.objects.iter().map(object_texture).collect();
        let mut frames = Vec::with_capacity(self.frames);
        let mut truth = vec![Vec::new(); self.objects.len()];

        for t in 1..=self.frames {
            let [ox, oy] = self.camera_offset(t);
            let wrap = |v: i64, n: usize| v.rem_euclid(n as i64) as usize;
            let world_of = |r: usize, c: usize| (wrap(r as i64 + oy, h), wrap(c as i64 + ox, w));
            let mut px = vec![0.0; w * h];
            for r in 0..h {
                for c in 0..w {
                    let (wr, wc) = world_of(r, c);
                    px[r * w + c] = world[wr * w + wc];
                }
            }

            if let Some(f) = &self.flicker {
                let mut rng = ChaCha8Rng::seed_from_u64(f.seed);
                rng.set_stream(t as u64);
                let a = f.amplitude as i32;
                for r in 0..h {
                    for c in 0..w {
                        let (wr, wc) = world_of(r, c);
                        if in_rect(f.rect, wr, wc, w, h) {
                            let n = rng.random_range(-a..=a) as f64;
                            px[r * w + c] = (px[r * w + c] + n).clamp(0.0, 255.0);
                        }
                    }
                }
            }

            let mut covers = vec![false; w * h];
            for o in self.occluders.iter().filter(|o| o.is_active(t)) {
                for r in 0..h {
                    for c in 0..w {
                        let (wr, wc) = world_of(r, c);
                        if in_rect(o.rect, wr, wc, w, h) {
                            covers[r * w + c] = true;
                        }
                    }
                }
            }

            for (k, (o, tex)) in self.objects.iter().zip(&textures).enumerate() {
                let [x, y] = self.image_position(o, t);
                let (x, y) = (x as usize, y as usize);
                let mut visible = false;
                for r in 0..o.height {
                    for c in 0..o.width {
                        let i = (y + r) * w + x + c;
                        px[i] = tex[r * o.width + c];
                        visible |= !covers[i];
                    }
                }
                if visible {
                    truth[k].push(GroundTruthBox {
                        frame_index: t,
                        bbox: BoundingBox::new(
                            x as f64 + 1.0,
                            y as f64 + 1.0,
                            o.width as f64,
                            o.height as f64,
                        ),
                    });
                }
            }

            // occluders go on last, later ones over earlier ones
            for o in self.occluders.iter().filter(|o| o.is_active(t)) {
                for r in 0..h {
                    for c in 0..w {
                        let (wr, wc) = world_of(r, c);
                        if in_rect(o.rect, wr, wc, w, h) {
                            px[r * w + c] = match o.fill {
                                Fill::Value(v) => v as f64,
                                Fill::Background => world[wr * w + wc],
                            };
                        }
                    }
                }
            }
            frames.push(Frame::new(t, w, h, px)?);
        }
        Ok(Scene { frames, truth })
    }

    /// Render and write `frame_NNNN.pgm` files plus `gt_K.txt` per object.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<Scene> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let scene = self.render()?;
        for f in &scene.frames {
            let path = dir.join(format!("frame_{:04}.pgm", f.index()));
            write_pgm(&path, f.width(), f.height(), &f.to_gray8())?;
        }
        for (k, boxes) in scene.truth.iter().enumerate() {
            let path = dir.join(format!("gt_{}.txt", k + 1));
            fs::write(&path, format_ground_truth(boxes, self.frames)).map_err(|e| Error::io(&path, e))?;
        }
        Ok(scene)
    }
}

fn in_rect(rect: [usize; 4], r: usize, c: usize, w: usize, h: usize) -> bool {
    let [x, y, rw, rh] = rect;
    let dc = (c + w - x % w) % w;
    let dr = (r + h - y % h) % h;
    dc < rw && dr < rh
}

fn object_texture(o: &ObjectSpec) -> Vec<f64> {
    let n = o.width * o.height;
    match o.appearance {
        Appearance::Uniform(v) => vec![v as f64; n],
        Appearance::Noise { low, high, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n).map(|_| rng.random_range(low..=high) as f64).collect()
        }
        Appearance::Checker { cell, low, high } => (0..n)
            .map(|i| {
                let (r, c) = (i / o.width, i % o.width);
                if (r / cell + c / cell) % 2 == 0 {
                    low as f64
                } else {
                    high as f64
                }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::{forward_transform, phase_correlate};

    fn square(start: [i64; 2], velocity: [i64; 2], frames: usize) -> ObjectSpec {
        ObjectSpec {
            width: 20,
            height: 20,
            start,
            path: vec![Segment { frames, velocity }],
            appearance: Appearance::Uniform(230),
        }
    }

    fn scene(camera: CameraPath, objects: Vec<ObjectSpec>) -> SceneSpec {
        SceneSpec {
            width: 64,
            height: 48,
            frames: 8,
            seed: 7,
            background: BackgroundSpec::default(),
            camera,
            objects,
            occluders: vec![],
            flicker: None,
        }
    }

    #[test]
    fn static_camera_truth_advances_with_object() {
        let s = scene(CameraPath::default(), vec![square([2, 10], [3, 0], 10)]);
        let out = s.render().unwrap();
        let xs: Vec<f64> = out.truth[0].iter().map(|b| b.bbox.x).collect();
        assert_eq!(xs, (0..8).map(|i| 3.0 + 3.0 * i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn pan_regresses_world_static_object() {
        let s = scene(CameraPath::Constant([2, 0]), vec![square([40, 10], [0, 0], 0)]);
        let out = s.render().unwrap();
        for pair in out.truth[0].windows(2) {
            assert_eq!(pair[1].bbox.x - pair[0].bbox.x, -2.0);
            assert_eq!(pair[1].bbox.y, pair[0].bbox.y);
        }
    }

    #[test]
    fn timed_occluder_removes_truth() {
        let mut s = scene(CameraPath::default(), vec![square([10, 10], [0, 0], 0)]);
        s.frames = 60;
        s.occluders.push(OccluderSpec {
            rect: [5, 5, 30, 30],
            fill: Fill::Value(0),
            active: Some([50, 56]),
        });
        let out = s.render().unwrap();
        assert_eq!(out.truth[0].len(), 60 - 7);
        assert!(out.truth[0].iter().all(|b| !(50..=56).contains(&b.frame_index)));
        assert_eq!(out.frames[52].at(20, 20), 0.0);
        assert_eq!(out.frames[48].at(20, 20), 230.0);
    }

    #[test]
    fn partial_cover_keeps_truth() {
        let mut s = scene(CameraPath::default(), vec![square([10, 10], [0, 0], 0)]);
        s.occluders.push(OccluderSpec {
            rect: [0, 0, 25, 64],
            fill: Fill::Value(0),
            active: None,
        });
        let out = s.render().unwrap();
        assert_eq!(out.truth[0].len(), 8);
    }

    #[test]
    fn deterministic() {
        let mut s = scene(CameraPath::Constant([1, 2]), vec![square([20, 10], [1, 1], 7)]);
        s.flicker = Some(FlickerSpec {
            rect: [0, 0, 10, 10],
            amplitude: 40,
            seed: 3,
        });
        let a = s.render().unwrap();
        let b = s.render().unwrap();
        for (x, y) in a.frames.iter().zip(&b.frames) {
            assert_eq!(x, y);
        }
        assert_eq!(a.truth, b.truth);
    }

    #[test]
    fn flicker_changes_between_frames() {
        let mut s = scene(CameraPath::default(), vec![]);
        s.flicker = Some(FlickerSpec {
            rect: [0, 0, 10, 10],
            amplitude: 40,
            seed: 3,
        });
        let out = s.render().unwrap();
        let diff = |r: usize, c: usize| (out.frames[0].at(r, c) - out.frames[1].at(r, c)).abs();
        assert!((0..10).any(|i| diff(i, i) > 0.0));
        assert!((0..40).all(|k| diff(20 + k % 20, 20 + k) == 0.0));
        for f in &out.frames {
            for r in 0..10 {
                for c in 0..10 {
                    let base = out.frames[0].at(r, c);
                    assert!((f.at(r, c) - base).abs() <= 80.0);
                }
            }
        }
    }

    #[test]
    fn camera_path_is_recoverable() {
        let steps = vec![[2, 0], [-3, 1], [0, 0], [5, -4], [1, 1], [-2, -2], [4, 3]];
        let s = scene(CameraPath::Steps(steps.clone()), vec![]);
        let out = s.render().unwrap();
        for (t, step) in steps.iter().enumerate() {
            let earlier = forward_transform(&out.frames[t]).unwrap();
            let later = forward_transform(&out.frames[t + 1]).unwrap();
            let est = phase_correlate(&later, &earlier).unwrap();
            assert_eq!([est.dx, est.dy], *step, "step {}", t + 1);
        }
    }

    #[test]
    fn escaping_object_rejected() {
        let s = scene(CameraPath::default(), vec![square([40, 10], [3, 0], 10)]);
        assert!(matches!(s.render(), Err(Error::SpecValidation(_))));
        let s = scene(CameraPath::Constant([-3, 0]), vec![square([40, 10], [0, 0], 0)]);
        assert!(matches!(s.validate(), Err(Error::SpecValidation(_))));
    }

    #[test]
    fn json_round_trip() {
        let mut s = scene(CameraPath::Constant([2, 0]), vec![square([5, 5], [1, 0], 3)]);
        s.occluders.push(OccluderSpec {
            rect: [1, 2, 3, 4],
            fill: Fill::Background,
            active: None,
        });
        assert_eq!(SceneSpec::from_json(&s.to_json()).unwrap(), s);
        let minimal = SceneSpec::from_json(r#"{"width": 8, "height": 8, "frames": 2, "seed": 1}"#).unwrap();
        assert_eq!(minimal.camera, CameraPath::Constant([0, 0]));
        assert!(SceneSpec::from_json(r#"{"width": 8}"#).is_err());
    }

    #[test]
    fn segments_then_rest() {
        let o = ObjectSpec {
            width: 1,
            height: 1,
            start: [0, 0],
            path: vec![
                Segment { frames: 2, velocity: [3, 0] },
                Segment { frames: 1, velocity: [0, -1] },
            ],
            appearance: Appearance::Uniform(1),
        };
        assert_eq!(o.world_position(1), [0, 0]);
        assert_eq!(o.world_position(3), [6, 0]);
        assert_eq!(o.world_position(4), [6, -1]);
        assert_eq!(o.world_position(9), [6, -1]);
    }
}
