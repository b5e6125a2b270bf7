//! Reading frame sequences and ground truth, writing detection tables.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use image::DynamicImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{round_gray, BoundingBox, Frame};

/// One annotated object box for one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthBox {
    pub frame_index: usize,
    pub bbox: BoundingBox,
}

impl GroundTruthBox {
    /// The box clipped to a `width` x `height` frame (1-based coordinates).
    pub fn clamped(&self, width: usize, height: usize) -> GroundTruthBox {
        let (w, h) = (width as f64, height as f64);
        let x0 = self.bbox.x.clamp(1.0, w);
        let y0 = self.bbox.y.clamp(1.0, h);
        let x1 = (self.bbox.x + self.bbox.w).clamp(1.0, w + 1.0);
        let y1 = (self.bbox.y + self.bbox.h).clamp(1.0, h + 1.0);
        GroundTruthBox {
            frame_index: self.frame_index,
            bbox: BoundingBox::new(x0, y0, (x1 - x0).max(0.0), (y1 - y0).max(0.0)),
        }
    }
}

/// A tracked box for one frame, as written to the detections CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub frame: usize,
    pub id: u64,
    pub bbox: BoundingBox,
}

pub const DETECTIONS_HEADER: &str = "frame,id,x,y,w,h";

/// ITU-R BT.601 luma, rounded half-up.
pub fn luminance(r: u8, g: u8, b: u8) -> u8 {
    round_gray(0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64)
}

/// Load every file in `dir` whose name matches `pattern`, in lexicographic
/// filename order, as frames `1..=T`.
pub fn load_sequence(dir: impl AsRef<Path>, pattern: &str) -> Result<Vec<Frame>> {
    let dir = dir.as_ref();
    let pattern = glob::Pattern::new(pattern)
        .map_err(|e| Error::Config(format!("bad file pattern {pattern:?}: {e}")))?;
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;

    let mut paths: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if !path.is_file() {
            continue;
        }
        let matched = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| pattern.matches(n));
        if matched {
            paths.push(path);
        }
    }
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    if paths.is_empty() {
        return Err(Error::EmptySequence(dir.to_path_buf()));
    }

    let mut frames: Vec<Frame> = Vec::with_capacity(paths.len());
    for (i, path) in paths.iter().enumerate() {
        let frame = load_frame(path, i + 1)?;
        if let Some(first) = frames.first() {
            if !first.same_shape(&frame) {
                return Err(Error::format(
                    path,
                    format!(
                        "resolution {}x{} differs from {}x{} of the first frame",
                        frame.width(),
                        frame.height(),
                        first.width(),
                        first.height()
                    ),
                ));
            }
        }
        frames.push(frame);
    }
    Ok(frames)
}

/// Decode one PGM/PNG file into a gray frame with the given 1-based index.
pub fn load_frame(path: &Path, index: usize) -> Result<Frame> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = image::load_from_memory(&bytes).map_err(|e| Error::format(path, e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let gray: Vec<u8> = match img {
        DynamicImage::ImageLuma8(buf) => buf.into_raw(),
        DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| p.0[0]).collect(),
        DynamicImage::ImageRgb8(buf) => buf.pixels().map(|p| luminance(p.0[0], p.0[1], p.0[2])).collect(),
        DynamicImage::ImageRgba8(buf) => buf.pixels().map(|p| luminance(p.0[0], p.0[1], p.0[2])).collect(),
        other => {
            return Err(Error::format(
                path,
                format!("unsupported sample layout {:?}; only 8-bit images are read", other.color()),
            ))
        }
    };
    Frame::from_gray8(index, w, h, &gray)
}

/// Parse a ground-truth file: one `x,y,w,h` line per frame (comma or tab
/// separated). A line of four `NaN` fields marks a frame without the object
/// and produces no box.
pub fn load_ground_truth(path: impl AsRef<Path>) -> Result<Vec<GroundTruthBox>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ground_truth(&text).map_err(|e| match e {
        Error::Format { reason, .. } => Error::format(path, reason),
        other => other,
    })
}

pub fn parse_ground_truth(text: &str) -> Result<Vec<GroundTruthBox>> {
    let lines: Vec<&str> = text.lines().collect();
    let last = lines.iter().rposition(|l| !l.trim().is_empty()).map_or(0, |i| i + 1);

    let mut boxes = Vec::with_capacity(last);
    for (i, raw) in lines[..last].iter().enumerate() {
        let line = i + 1;
        let fields: Vec<&str> = raw
            .split([',', '\t'])
            .map(str::trim)
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                line,
                reason: format!("expected 4 fields x,y,w,h, found {}", fields.len()),
            });
        }
        let mut v = [0.0f64; 4];
        for (slot, field) in v.iter_mut().zip(&fields) {
            *slot = field.parse::<f64>().map_err(|_| Error::Parse {
                line,
                reason: format!("not a number: {field:?}"),
            })?;
        }
        if v.iter().all(|x| x.is_nan()) {
            continue;
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parse {
                line,
                reason: "non-finite coordinate".into(),
            });
        }
        if v[2] <= 0.0 || v[3] <= 0.0 {
            return Err(Error::format(
                "",
                format!("line {line}: box size must be positive, got w={} h={}", v[2], v[3]),
            ));
        }
        boxes.push(GroundTruthBox {
            frame_index: line,
            bbox: BoundingBox::new(v[0], v[1], v[2], v[3]),
        });
    }
    Ok(boxes)
}

/// Render one object's ground truth as text, one line per frame `1..=frames`.
pub fn format_ground_truth(boxes: &[GroundTruthBox], frames: usize) -> String {
    let mut out = String::new();
    for f in 1..=frames {
        match boxes.iter().find(|b| b.frame_index == f) {
            Some(b) => out.push_str(&format!("{},{},{},{}\n", b.bbox.x, b.bbox.y, b.bbox.w, b.bbox.h)),
            None => out.push_str("NaN,NaN,NaN,NaN\n"),
        }
    }
    out
}

/// Write the detections CSV, rows ordered by (frame, id).
pub fn write_detections(path: impl AsRef<Path>, records: &[DetectionRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    out.write_all(format_detections(records).as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn format_detections(records: &[DetectionRecord]) -> String {
    let mut sorted = records.to_vec();
    sorted.sort_by_key(|r| (r.frame, r.id));
    let mut out = String::from(DETECTIONS_HEADER);
    out.push('\n');
    for r in &sorted {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.frame, r.id, r.bbox.x, r.bbox.y, r.bbox.w, r.bbox.h
        ));
    }
    out
}

pub fn read_detections(path: impl AsRef<Path>) -> Result<Vec<DetectionRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_detections(&text).map_err(|e| match e {
        Error::Parse { line, reason } => Error::format(path, format!("line {line}: {reason}")),
        other => other,
    })
}

pub fn parse_detections(text: &str) -> Result<Vec<DetectionRecord>> {
    let mut records = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.trim();
        if raw.is_empty() || (line == 1 && raw == DETECTIONS_HEADER) {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        if fields.len() != 6 {
            return Err(Error::Parse {
                line,
                reason: format!("expected 6 fields, found {}", fields.len()),
            });
        }
        let bad = |f: &str| Error::Parse {
            line,
            reason: format!("not a number: {f:?}"),
        };
        let frame = fields[0].parse::<usize>().map_err(|_| bad(fields[0]))?;
        let id = fields[1].parse::<u64>().map_err(|_| bad(fields[1]))?;
        let mut v = [0.0f64; 4];
        for (slot, f) in v.iter_mut().zip(&fields[2..]) {
            *slot = f.parse::<f64>().map_err(|_| bad(f))?;
        }
        records.push(DetectionRecord {
            frame,
            id,
            bbox: BoundingBox::new(v[0], v[1], v[2], v[3]),
        });
    }
    Ok(records)
}

/// Binary (P5) PGM encoding.
pub fn encode_pgm(width: usize, height: usize, gray: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(gray);
    out
}

pub fn write_pgm(path: impl AsRef<Path>, width: usize, height: usize, gray: &[u8]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(width, height, gray)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bt601_red_pixel() {
        // 0.299 * 255 = 76.245 rounds down
        assert_eq!(luminance(255, 0, 0), 76);
        assert_eq!(luminance(255, 255, 255), 255);
        assert_eq!(luminance(0, 0, 0), 0);
    }

    #[test]
    fn ground_truth_comma_line() {
        let b = parse_ground_truth("10,20,30,40\n").unwrap();
        assert_eq!(
            b,
            vec![GroundTruthBox {
                frame_index: 1,
                bbox: BoundingBox::new(10.0, 20.0, 30.0, 40.0)
            }]
        );
    }

    #[test]
    fn ground_truth_tab_line() {
        let b = parse_ground_truth("5\t5\t2\t2").unwrap();
        assert_eq!(b[0].bbox, BoundingBox::new(5.0, 5.0, 2.0, 2.0));
    }

    #[test]
    fn ground_truth_arity_error_cites_line() {
        match parse_ground_truth("10,20") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse_ground_truth("1,1,2,2\n10,20\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn ground_truth_rejects_non_positive_size() {
        assert!(matches!(parse_ground_truth("1,1,0,4"), Err(Error::Format { .. })));
        assert!(matches!(parse_ground_truth("1,1,4,-2"), Err(Error::Format { .. })));
    }

    #[test]
    fn ground_truth_absent_marker_keeps_line_numbers() {
        let b = parse_ground_truth("1,1,2,2\nNaN,NaN,NaN,NaN\n3,3,2,2\n").unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b[1].frame_index, 3);
    }

    #[test]
    fn clamping_clips_to_frame() {
        let b = GroundTruthBox {
            frame_index: 1,
            bbox: BoundingBox::new(-4.0, 5.0, 10.0, 10.0),
        };
        let c = b.clamped(8, 8);
        assert_eq!(c.bbox, BoundingBox::new(1.0, 5.0, 5.0, 4.0));
    }

    #[test]
    fn detections_row_format_and_order() {
        let recs = vec![
            DetectionRecord { frame: 5, id: 2, bbox: BoundingBox::new(1.0, 1.0, 2.0, 2.0) },
            DetectionRecord { frame: 5, id: 1, bbox: BoundingBox::new(3.0, 4.0, 10.0, 12.0) },
        ];
        let text = format_detections(&recs);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines, vec!["frame,id,x,y,w,h", "5,1,3,4,10,12", "5,2,1,1,2,2"]);
    }

    #[test]
    fn detections_empty_frames_emit_nothing() {
        assert_eq!(format_detections(&[]), "frame,id,x,y,w,h\n");
    }

    #[test]
    fn pgm_header() {
        let bytes = encode_pgm(2, 1, &[0, 255]);
        assert_eq!(&bytes[..11], b"P5\n2 1\n255\n");
        assert_eq!(&bytes[11..], &[0, 255]);
    }
}
