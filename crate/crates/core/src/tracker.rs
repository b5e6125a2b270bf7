//! Constant-velocity Kalman tracking with greedy cost-matrix association.

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Matrix4x2, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::blob::DetectedObject;
use crate::frame::BoundingBox;

/// Cost assigned to track/detection pairs outside the gate.
pub const DEFAULT_PHI: f64 = 1e6;
/// Initial covariance scale.
pub const INITIAL_COVARIANCE: f64 = 100.0;
/// Process noise scale.
pub const PROCESS_NOISE: f64 = 0.01;
/// Measurement noise scale.
pub const MEASUREMENT_NOISE: f64 = 1.0;

/// State `(row, col, v_row, v_col)` and its error covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub state: Vector4<f64>,
    pub covariance: Matrix4<f64>,
}

impl KalmanState {
    pub fn new(centroid: (f64, f64)) -> Self {
        Self {
            state: Vector4::new(centroid.0, centroid.1, 0.0, 0.0),
            covariance: Matrix4::identity() * INITIAL_COVARIANCE,
        }
    }

    /// Position advances by one frame of velocity.
    pub fn transition() -> Matrix4<f64> {
        Matrix4::new(
            1.0, 0.0, 1.0, 0.0, //
            0.0, 1.0, 0.0, 1.0, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        )
    }

    pub fn measurement() -> Matrix2x4<f64> {
        Matrix2x4::new(
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0,
        )
    }

    pub fn centroid(&self) -> (f64, f64) {
        (self.state[0], self.state[1])
    }

    pub fn velocity(&self) -> (f64, f64) {
        (self.state[2], self.state[3])
    }

    /// A priori step; returns the predicted centroid.
    pub fn predict(&mut self) -> (f64, f64) {
        let a = Self::transition();
        self.state = a * self.state;
        self.covariance = a * self.covariance * a.transpose() + Matrix4::identity() * PROCESS_NOISE;
        self.centroid()
    }

    pub fn gain(&self) -> Matrix4x2<f64> {
        let h = Self::measurement();
        let innovation = h * self.covariance * h.transpose() + Matrix2::identity() * MEASUREMENT_NOISE;
        let inv = innovation
            .try_inverse()
            .expect("innovation covariance is positive definite");
        self.covariance * h.transpose() * inv
    }

    /// A posteriori step with a measured centroid.
    pub fn update(&mut self, measured: (f64, f64)) {
        let h = Self::measurement();
        let g = self.gain();
        let residual = Vector2::new(measured.0, measured.1) - h * self.state;
        self.state += g * residual;
        self.covariance = (Matrix4::identity() - g * h) * self.covariance;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: u64,
    pub height: usize,
    pub width: usize,
    pub peaks: [u8; 3],
    pub kalman: KalmanState,
    /// Consecutive frames without an associated detection.
    pub invisible_count: usize,
    pub age: usize,
    pub total_visible: usize,
}

impl Track {
    fn new(id: u64, obj: &DetectedObject) -> Self {
        Self {
            id,
            height: obj.height,
            width: obj.width,
            peaks: obj.peaks,
            kalman: KalmanState::new(obj.centroid),
            invisible_count: 0,
            age: 1,
            total_visible: 1,
        }
    }

    pub fn is_visible(&self) -> bool {
        self.invisible_count == 0
    }

    /// Box of the track's size around its current centroid, 1-based.
    pub fn bbox(&self) -> BoundingBox {
        let (r, c) = self.kalman.centroid();
        let round = |v: f64| (v + 0.5).floor();
        let left = round(c - (self.width as f64 - 1.0) / 2.0);
        let top = round(r - (self.height as f64 - 1.0) / 2.0);
        BoundingBox::new(left + 1.0, top + 1.0, self.width as f64, self.height as f64)
    }
}

/// `tracks x detections` association costs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    phi: f64,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>, phi: f64) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged cost matrix");
        Self {
            rows: rows.len(),
            cols,
            phi,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn tracks(&self) -> usize {
        self.rows
    }

    pub fn detections(&self) -> usize {
        self.cols
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn get(&self, track: usize, detection: usize) -> f64 {
        self.data[track * self.cols + detection]
    }

    pub fn is_feasible(&self, track: usize, detection: usize) -> bool {
        self.get(track, detection) < self.phi
    }
}

/// Mean absolute difference of histogram peaks when the detection lies
/// within `alpha` times the track's height/width of its predicted centroid
/// on both axes, `phi` otherwise.
pub fn pair_cost(track: &Track, det: &DetectedObject, alpha: f64, phi: f64) -> f64 {
    let (pr, pc) = track.kalman.centroid();
    let gated = (pr - det.centroid.0).abs() <= alpha * track.height as f64
        && (pc - det.centroid.1).abs() <= alpha * track.width as f64;
    if !gated {
        return phi;
    }
    track
        .peaks
        .iter()
        .zip(&det.peaks)
        .map(|(&a, &b)| (a as f64 - b as f64).abs())
        .sum::<f64>()
        / 3.0
}

pub fn build_cost_matrix(tracks: &[Track], detections: &[DetectedObject], alpha: f64, phi: f64) -> CostMatrix {
    let rows = tracks
        .iter()
        .map(|t| detections.iter().map(|d| pair_cost(t, d, alpha, phi)).collect())
        .collect();
    let mut m = CostMatrix::from_rows(rows, phi);
    m.cols = detections.len();
    m
}

/// Outcome of one greedy association pass, in matrix indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Association {
    /// `(track, detection)` pairs.
    pub assignments: Vec<(usize, usize)>,
    pub unassigned_tracks: Vec<usize>,
    /// Detections infeasible for every track.
    pub new_detections: Vec<usize>,
    /// Leftover detections that some track could have taken.
    pub discarded: Vec<usize>,
}

/// Rows in order each take their cheapest remaining feasible detection
/// (ties to the lower column); the taken column leaves the pool.
pub fn associate(costs: &CostMatrix) -> Association {
    let mut taken = vec![false; costs.detections()];
    let mut out = Association::default();
    for k in 0..costs.tracks() {
        let best = (0..costs.detections())
            .filter(|&l| !taken[l] && costs.is_feasible(k, l))
            .fold(None::<usize>, |best, l| match best {
                Some(b) if costs.get(k, b) <= costs.get(k, l) => Some(b),
                _ => Some(l),
            });
        match best {
            Some(l) => {
                taken[l] = true;
                out.assignments.push((k, l));
            }
            None => out.unassigned_tracks.push(k),
        }
    }
    for l in (0..costs.detections()).filter(|&l| !taken[l]) {
        if (0..costs.tracks()).any(|k| costs.is_feasible(k, l)) {
            out.discarded.push(l);
        } else {
            out.new_detections.push(l);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    pub alpha: f64,
    pub phi: f64,
    /// Tracks unseen for more than this many consecutive frames are removed.
    pub invisible_max: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            alpha: 1.5,
            phi: DEFAULT_PHI,
            invisible_max: 8,
        }
    }
}

/// What happened to the tracks during one frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepReport {
    /// `(track id, detection index)`.
    pub assigned: Vec<(u64, usize)>,
    pub created: Vec<u64>,
    pub coasting: Vec<u64>,
    pub deleted: Vec<u64>,
    pub discarded: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Tracker {
    config: TrackerConfig,
    tracks: Vec<Track>,
    next_id: u64,
    started: bool,
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Self {
        Self {
            config,
            tracks: Vec::new(),
            next_id: 1,
            started: false,
        }
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    /// Live tracks in ascending id order.
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    fn spawn(&mut self, obj: &DetectedObject) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        self.tracks.push(Track::new(id, obj));
        id
    }

    /// Create one track per object on the first operating frame.
    pub fn initialize(&mut self, objects: &[DetectedObject]) -> StepReport {
        self.started = true;
        let created = objects.iter().map(|o| self.spawn(o)).collect();
        StepReport {
            created,
            ..StepReport::default()
        }
    }

    /// Process one frame's detections.
    pub fn step(&mut self, objects: &[DetectedObject]) -> StepReport {
        if !self.started {
            return self.initialize(objects);
        }
        for t in &mut self.tracks {
            t.kalman.predict();
            t.age += 1;
        }
        let costs = build_cost_matrix(&self.tracks, objects, self.config.alpha, self.config.phi);
        let assoc = associate(&costs);

        let mut report = StepReport::default();
        for &(k, l) in &assoc.assignments {
            let t = &mut self.tracks[k];
            let obj = &objects[l];
            t.kalman.update(obj.centroid);
            t.height = obj.height;
            t.width = obj.width;
            t.peaks = obj.peaks;
            t.invisible_count = 0;
            t.total_visible += 1;
            report.assigned.push((t.id, l));
        }
        for &k in &assoc.unassigned_tracks {
            let t = &mut self.tracks[k];
            t.invisible_count += 1;
            report.coasting.push(t.id);
        }
        let limit = self.config.invisible_max;
        report.deleted = self
            .tracks
            .iter()
            .filter(|t| t.invisible_count > limit)
            .map(|t| t.id)
            .collect();
        self.tracks.retain(|t| t.invisible_count <= limit);
        report.coasting.retain(|id| !report.deleted.contains(id));

        for &l in &assoc.new_detections {
            let id = self.spawn(&objects[l]);
            report.created.push(id);
        }
        report.discarded = assoc.discarded;
        report
    }
}
