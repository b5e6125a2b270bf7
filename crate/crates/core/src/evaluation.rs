//! Scoring of tracker output against ground truth.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::BoundingBox;
use crate::sequence_io::{DetectionRecord, GroundTruthBox};

/// Largest precision threshold, in pixels.
pub const MAX_THRESHOLD: u32 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Outcome {
    Td,
    Fd,
    Md,
    Tn,
}

/// One scored event in a frame: a truth box (TD or MD), an unmatched
/// detection (FD), or an empty frame (TN).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameJudgement {
    pub frame_index: usize,
    pub outcome: Outcome,
    pub centroid_error: Option<f64>,
}

impl FrameJudgement {
    fn new(frame_index: usize, outcome: Outcome, centroid_error: Option<f64>) -> Self {
        Self {
            frame_index,
            outcome,
            centroid_error,
        }
    }
}

/// How a frame with several truth boxes counts toward the TD total.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameRule {
    /// Every truth box matched.
    #[default]
    All,
    /// At least one truth box matched.
    Any,
}

fn centre_distance(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    (ax - bx).hypot(ay - by)
}

/// Judge one frame. Pairs are matched greedily by descending overlap area;
/// a truth box is detected when it shares any area with its match.
pub fn judge_frame(frame_index: usize, detections: &[BoundingBox], truth: &[BoundingBox]) -> Vec<FrameJudgement> {
    if detections.is_empty() && truth.is_empty() {
        return vec![FrameJudgement::new(frame_index, Outcome::Tn, None)];
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (g, t) in truth.iter().enumerate() {
        for (d, det) in detections.iter().enumerate() {
            let overlap = t.intersection_area(det);
            if overlap > 0.0 {
                pairs.push((overlap, g, d));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut truth_match = vec![None; truth.len()];
    let mut det_used = vec![false; detections.len()];
    for (_, g, d) in pairs {
        if truth_match[g].is_none() && !det_used[d] {
            truth_match[g] = Some(d);
            det_used[d] = true;
        }
    }

    let mut out = Vec::with_capacity(truth.len() + detections.len());
    for (g, m) in truth_match.iter().enumerate() {
        out.push(match m {
            Some(d) => FrameJudgement::new(
                frame_index,
                Outcome::Td,
                Some(centre_distance(&truth[g], &detections[*d])),
            ),
            None => FrameJudgement::new(frame_index, Outcome::Md, None),
        });
    }
    for _ in det_used.iter().filter(|u| !**u) {
        out.push(FrameJudgement::new(frame_index, Outcome::Fd, None));
    }
    out
}

/// Judge frames `first..=last` from detection records and truth boxes.
pub fn judge_sequence(
    detections: &[DetectionRecord],
    truth: &[GroundTruthBox],
    first: usize,
    last: usize,
) -> Vec<FrameJudgement> {
    let mut dets: BTreeMap<usize, Vec<BoundingBox>> = BTreeMap::new();
    for d in detections {
        dets.entry(d.frame).or_default().push(d.bbox);
    }
    let mut gts: BTreeMap<usize, Vec<BoundingBox>> = BTreeMap::new();
    for g in truth {
        gts.entry(g.frame_index).or_default().push(g.bbox);
    }
    (first..=last)
        .flat_map(|f| {
            let d = dets.get(&f).map_or(&[][..], Vec::as_slice);
            let g = gts.get(&f).map_or(&[][..], Vec::as_slice);
            judge_frame(f, d, g)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub n_td: usize,
    pub n_fd: usize,
    pub n_md: usize,
    pub n_tn: usize,
    /// Judged frames.
    pub frames: usize,
}

fn pct(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

impl Counts {
    pub fn td_pct(&self) -> f64 {
        pct(self.n_td, self.frames)
    }

    pub fn fd_pct(&self) -> f64 {
        pct(self.n_fd, self.n_td + self.n_fd)
    }

    pub fn md_pct(&self) -> f64 {
        pct(self.n_md, self.n_td + self.n_md)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionPoint {
    pub threshold: u32,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub td_pct: f64,
    pub fd_pct: f64,
    pub md_pct: f64,
    /// Frames per second, when the run was timed.
    pub fps: Option<f64>,
    pub counts: Counts,
    pub precision: Vec<PrecisionPoint>,
}

impl EvalReport {
    pub fn with_fps(mut self, fps: f64) -> Self {
        self.fps = Some(fps);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn precision_csv(&self) -> String {
        let mut s = String::from("threshold,fraction\n");
        for p in &self.precision {
            s.push_str(&format!("{},{}\n", p.threshold, p.fraction));
        }
        s
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn write_precision_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.precision_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Frame-level tallies. A frame bearing truth counts once as TD or MD
/// under `rule`; a frame with any unmatched detection counts once as FD.
pub fn count_frames(judgements: &[FrameJudgement], rule: FrameRule) -> Counts {
    let mut frames: BTreeMap<usize, Vec<&FrameJudgement>> = BTreeMap::new();
    for j in judgements {
        frames.entry(j.frame_index).or_default().push(j);
    }
    let mut c = Counts {
        frames: frames.len(),
        ..Counts::default()
    };
    for js in frames.values() {
        let hits = js.iter().filter(|j| j.outcome == Outcome::Td).count();
        let truths = hits + js.iter().filter(|j| j.outcome == Outcome::Md).count();
        if truths > 0 {
            let detected = match rule {
                FrameRule::All => hits == truths,
                FrameRule::Any => hits > 0,
            };
            if detected {
                c.n_td += 1;
            } else {
                c.n_md += 1;
            }
        }
        if js.iter().any(|j| j.outcome == Outcome::Fd) {
            c.n_fd += 1;
        }
        if js.iter().all(|j| j.outcome == Outcome::Tn) {
            c.n_tn += 1;
        }
    }
    c
}

/// Fraction of truth-bearing frames whose best centroid error is within
/// each threshold `0..=50`.
pub fn precision_curve(judgements: &[FrameJudgement]) -> Vec<PrecisionPoint> {
    let mut best: BTreeMap<usize, Option<f64>> = BTreeMap::new();
    for j in judgements {
        match j.outcome {
            Outcome::Td => {
                let e = j.centroid_error.unwrap_or(f64::INFINITY);
                let slot = best.entry(j.frame_index).or_insert(None);
                *slot = Some(slot.map_or(e, |b: f64| b.min(e)));
            }
            Outcome::Md => {
                best.entry(j.frame_index).or_insert(None);
            }
            _ => {}
        }
    }
    let total = best.len();
    (0..=MAX_THRESHOLD)
        .map(|t| {
            let within = best.values().filter(|e| e.is_some_and(|e| e <= t as f64)).count();
            PrecisionPoint {
                threshold: t,
                fraction: if total == 0 { 0.0 } else { within as f64 / total as f64 },
            }
        })
        .collect()
}

pub fn aggregate(judgements: &[FrameJudgement], rule: FrameRule) -> Result<EvalReport> {
    if judgements.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    let counts = count_frames(judgements, rule);
    Ok(EvalReport {
        td_pct: counts.td_pct(),
        fd_pct: counts.fd_pct(),
        md_pct: counts.md_pct(),
        fps: None,
        counts,
        precision: precision_curve(judgements),
    })
}

pub fn measure_fps(frame_count: usize, elapsed_seconds: f64) -> Result<f64> {
    if frame_count == 0 {
        return Ok(0.0);
    }
    if !(elapsed_seconds > 0.0) || !elapsed_seconds.is_finite() {
        return Err(Error::Measurement(format!("elapsed time must be positive, got {elapsed_seconds}")));
    }
    Ok(frame_count as f64 / elapsed_seconds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(x: f64, y: f64) -> BoundingBox {
        BoundingBox::new(x, y, 10.0, 10.0)
    }

    #[test]
    fn perfect_hit() {
        let j = judge_frame(1, &[bx(5.0, 5.0)], &[bx(5.0, 5.0)]);
        assert_eq!(j, vec![FrameJudgement::new(1, Outcome::Td, Some(0.0))]);
    }

    #[test]
    fn total_miss() {
        let j = judge_frame(1, &[bx(50.0, 50.0)], &[bx(5.0, 5.0)]);
        let outcomes: Vec<Outcome> = j.iter().map(|j| j.outcome).collect();
        assert_eq!(outcomes, vec![Outcome::Md, Outcome::Fd]);
    }

    #[test]
    fn truth_without_detection() {
        let j = judge_frame(3, &[], &[bx(5.0, 5.0)]);
        assert_eq!(j[0].outcome, Outcome::Md);
        assert_eq!(judge_frame(3, &[], &[])[0].outcome, Outcome::Tn);
    }

    #[test]
    fn larger_overlap_wins() {
        // both detections touch the truth box; the closer one is matched
        let j = judge_frame(1, &[bx(12.0, 5.0), bx(6.0, 5.0)], &[bx(5.0, 5.0)]);
        assert_eq!(j[0].outcome, Outcome::Td);
        assert_eq!(j[0].centroid_error, Some(1.0));
        assert_eq!(j[1].outcome, Outcome::Fd);
    }

    #[test]
    fn touching_edges_do_not_overlap() {
        let j = judge_frame(1, &[bx(15.0, 5.0)], &[bx(5.0, 5.0)]);
        assert_eq!(j[0].outcome, Outcome::Md);
    }

    fn run(td: usize, fd_only: usize, md: usize, tn: usize) -> Vec<FrameJudgement> {
        let mut v = Vec::new();
        let mut f = 0;
        let mut push = |o: Outcome, e: Option<f64>| {
            f += 1;
            v.push(FrameJudgement::new(f, o, e));
        };
        (0..td).for_each(|_| push(Outcome::Td, Some(1.0)));
        (0..fd_only).for_each(|_| push(Outcome::Fd, None));
        (0..md).for_each(|_| push(Outcome::Md, None));
        (0..tn).for_each(|_| push(Outcome::Tn, None));
        v
    }

    #[test]
    fn all_detected() {
        let r = aggregate(&run(100, 0, 0, 0), FrameRule::All).unwrap();
        assert_eq!((r.td_pct, r.fd_pct, r.md_pct), (100.0, 0.0, 0.0));
    }

    #[test]
    fn detection_share_of_all_frames() {
        let r = aggregate(&run(83, 0, 10, 7), FrameRule::All).unwrap();
        assert_eq!(r.td_pct, 83.0);
    }

    #[test]
    fn false_detection_share() {
        let r = aggregate(&run(90, 10, 0, 0), FrameRule::All).unwrap();
        assert_eq!(r.fd_pct, 10.0);
    }

    #[test]
    fn zero_denominators() {
        let r = aggregate(&run(0, 0, 0, 5), FrameRule::All).unwrap();
        assert_eq!((r.td_pct, r.fd_pct, r.md_pct), (0.0, 0.0, 0.0));
        assert!(r.precision.iter().all(|p| p.fraction == 0.0));
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(aggregate(&[], FrameRule::All), Err(Error::EmptyEvaluation)));
    }

    #[test]
    fn frame_rule_on_partial_match() {
        let j = judge_frame(1, &[bx(5.0, 5.0)], &[bx(5.0, 5.0), bx(60.0, 60.0)]);
        assert_eq!(count_frames(&j, FrameRule::All).n_md, 1);
        assert_eq!(count_frames(&j, FrameRule::Any).n_td, 1);
    }

    #[test]
    fn precision_saturates() {
        let j = vec![
            FrameJudgement::new(1, Outcome::Td, Some(0.0)),
            FrameJudgement::new(2, Outcome::Td, Some(7.5)),
            FrameJudgement::new(3, Outcome::Md, None),
            FrameJudgement::new(4, Outcome::Tn, None),
        ];
        let p = precision_curve(&j);
        assert_eq!(p.len(), 51);
        assert_eq!(p[0].fraction, 1.0 / 3.0);
        assert_eq!(p[7].fraction, 1.0 / 3.0);
        assert_eq!(p[8].fraction, 2.0 / 3.0);
        assert_eq!(p[50].fraction, 2.0 / 3.0);
    }

    #[test]
    fn fps() {
        assert_eq!(measure_fps(300, 2.0).unwrap(), 150.0);
        assert_eq!(measure_fps(0, 0.0).unwrap(), 0.0);
        assert!(matches!(measure_fps(5, 0.0), Err(Error::Measurement(_))));
    }

    #[test]
    fn report_outputs() {
        let r = aggregate(&run(3, 1, 0, 0), FrameRule::All).unwrap().with_fps(12.5);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["fps"], 12.5);
        assert_eq!(v["counts"]["n_fd"], 1);
        let csv = r.precision_csv();
        assert!(csv.starts_with("threshold,fraction\n0,0\n1,1\n"));
        assert_eq!(csv.lines().count(), 52);
    }
}
