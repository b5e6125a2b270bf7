//! Blob extraction, two-step morphological refinement and object features.
//!
//! Each 8-connected blob `O` of the moving-pixel mask is dilated inside its
//! `alpha`-scaled bounding box (`O'`), edge pixels `E` of the current frame
//! are located inside `O'`, and everything outside the first/last edge of
//! each row and each column is trimmed. The refined region is the
//! intersection of the row-trimmed and column-trimmed regions.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::frame::{round_gray, BoundingBox, Frame, Plane};

/// `(row, col)`, 0-based.
pub type Pixel = (usize, usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Blob {
    pixels: Vec<Pixel>,
    top: usize,
    left: usize,
    height: usize,
    width: usize,
    centroid: (f64, f64),
}

impl Blob {
    /// Build a blob from any pixel collection; duplicates are removed.
    /// Returns `None` for an empty set.
    pub fn from_pixels(mut pixels: Vec<Pixel>) -> Option<Self> {
        if pixels.is_empty() {
            return None;
        }
        pixels.sort_unstable();
        pixels.dedup();
        let top = pixels[0].0;
        let bottom = pixels[pixels.len() - 1].0;
        let left = pixels.iter().map(|p| p.1).min()?;
        let right = pixels.iter().map(|p| p.1).max()?;
        let n = pixels.len() as f64;
        let (sr, sc) = pixels
            .iter()
            .fold((0.0, 0.0), |(sr, sc), &(r, c)| (sr + r as f64, sc + c as f64));
        Some(Self {
            top,
            left,
            height: bottom - top + 1,
            width: right - left + 1,
            centroid: (sr / n, sc / n),
            pixels,
        })
    }

    /// Sorted in raster order.
    pub fn pixels(&self) -> &[Pixel] {
        &self.pixels
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn top(&self) -> usize {
        self.top
    }

    pub fn left(&self) -> usize {
        self.left
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `(row, col)` mean of the pixel set.
    pub fn centroid(&self) -> (f64, f64) {
        self.centroid
    }

    pub fn contains(&self, p: Pixel) -> bool {
        self.pixels.binary_search(&p).is_ok()
    }

    pub fn is_subset_of(&self, other: &Blob) -> bool {
        self.pixels.iter().all(|&p| other.contains(p))
    }

    /// Occupancy bitmap over the bounding box.
    fn local_mask(&self) -> LocalMask {
        let mut bits = vec![false; self.height * self.width];
        for &(r, c) in &self.pixels {
            bits[(r - self.top) * self.width + (c - self.left)] = true;
        }
        LocalMask {
            top: self.top as isize,
            left: self.left as isize,
            height: self.height as isize,
            width: self.width as isize,
            bits,
        }
    }

    /// Blob pixels with at least one 8-neighbour in the exterior, the
    /// non-blob area reachable from outside the bounding box. Enclosed holes
    /// do not count.
    pub fn boundary(&self) -> Vec<Pixel> {
        let mask = self.local_mask();
        let (h, w) = (mask.height + 2, mask.width + 2);
        let idx = |r: isize, c: isize| ((r + 1) * w + (c + 1)) as usize;
        let mut outside = vec![false; (h * w) as usize];
        let mut queue = VecDeque::from([(-1isize, -1isize)]);
        outside[idx(-1, -1)] = true;
        while let Some((r, c)) = queue.pop_front() {
            for (nr, nc) in [(r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)] {
                if nr < -1 || nc < -1 || nr > mask.height || nc > mask.width {
                    continue;
                }
                let i = idx(nr, nc);
                if !outside[i] && !mask.get(nr + mask.top, nc + mask.left) {
                    outside[i] = true;
                    queue.push_back((nr, nc));
                }
            }
        }
        self.pixels
            .iter()
            .copied()
            .filter(|&(r, c)| {
                let (lr, lc) = (r as isize - mask.top, c as isize - mask.left);
                neighbours8(lr, lc).any(|(nr, nc)| outside[idx(nr, nc)])
            })
            .collect()
    }

    /// Smallest Euclidean distance from the centroid to a boundary pixel.
    pub fn centroid_clearance(&self) -> f64 {
        let (cr, cc) = self.centroid;
        self.boundary()
            .iter()
            .map(|&(r, c)| ((r as f64 - cr).powi(2) + (c as f64 - cc).powi(2)).sqrt())
            .fold(f64::INFINITY, f64::min)
    }

    /// The bounding box in 1-based image coordinates.
    pub fn bbox(&self) -> BoundingBox {
        BoundingBox::new(
            self.left as f64 + 1.0,
            self.top as f64 + 1.0,
            self.width as f64,
            self.height as f64,
        )
    }
}

struct LocalMask {
    top: isize,
    left: isize,
    height: isize,
    width: isize,
    bits: Vec<bool>,
}

impl LocalMask {
    fn get(&self, r: isize, c: isize) -> bool {
        let (lr, lc) = (r - self.top, c - self.left);
        lr >= 0 && lc >= 0 && lr < self.height && lc < self.width && self.bits[(lr * self.width + lc) as usize]
    }
}

fn neighbours8(r: isize, c: isize) -> impl Iterator<Item = (isize, isize)> {
    const OFFSETS: [(isize, isize); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];
    OFFSETS.iter().map(move |&(dr, dc)| (r + dr, c + dc))
}

/// Feature vector of one refined moving object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedObject {
    /// `(row, col)`, 0-based pixel coordinates.
    pub centroid: (f64, f64),
    pub height: usize,
    pub width: usize,
    pub top: usize,
    pub left: usize,
    /// Gray levels of the three highest histogram bins.
    pub peaks: [u8; 3],
    pub area: usize,
}

impl DetectedObject {
    pub fn bbox(&self) -> BoundingBox {
        BoundingBox::new(
            self.left as f64 + 1.0,
            self.top as f64 + 1.0,
            self.width as f64,
            self.height as f64,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineParams {
    pub alpha: f64,
    pub min_blob_area: usize,
    pub min_object_side: usize,
}

impl Default for RefineParams {
    fn default() -> Self {
        Self {
            alpha: 1.5,
            min_blob_area: 9,
            min_object_side: 2,
        }
    }
}

/// 8-connected components of the non-zero mask pixels, in raster order of
/// their first pixel. Components under `min_area` pixels are dropped.
pub fn connected_components(mask: &Plane<u8>, min_area: usize) -> Vec<Blob> {
    let (w, h) = (mask.width, mask.height);
    let mut seen = vec![false; w * h];
    let mut blobs = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if mask.data[start] == 0 || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut pixels = Vec::new();
        while let Some(i) = queue.pop_front() {
            let (r, c) = (i / w, i % w);
            pixels.push((r, c));
            for (nr, nc) in neighbours8(r as isize, c as isize) {
                if nr < 0 || nc < 0 || nr >= h as isize || nc >= w as isize {
                    continue;
                }
                let j = nr as usize * w + nc as usize;
                if mask.data[j] != 0 && !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        if pixels.len() >= min_area {
            if let Some(b) = Blob::from_pixels(pixels) {
                blobs.push(b);
            }
        }
    }
    blobs
}

/// Index range of pixels whose centres lie within the `alpha`-scaled extent
/// `[start, start + len)`, clipped to `0..limit`.
fn scaled_range(start: usize, len: usize, alpha: f64, limit: usize) -> std::ops::Range<usize> {
    let center = start as f64 + len as f64 / 2.0;
    let half = alpha * len as f64 / 2.0;
    let lo = (center - half - 0.5).ceil().max(0.0) as usize;
    let hi = ((center + half - 0.5).floor() + 1.0).max(0.0) as usize;
    lo.min(limit)..hi.min(limit)
}

fn nearest_gap(sorted: &[usize], v: usize) -> Option<usize> {
    if sorted.is_empty() {
        return None;
    }
    let i = sorted.partition_point(|&x| x < v);
    let after = sorted.get(i).map(|&x| x - v);
    let before = i.checked_sub(1).map(|j| v - sorted[j]);
    match (before, after) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

/// Grow a blob inside its `alpha`-scaled bounding box: a pixel joins when its
/// gap to the nearest blob pixel on the same row or the same column is at
/// most half the centroid-to-boundary clearance (a clearance of 0 uses a
/// radius of 1).
pub fn dilate_blob(blob: &Blob, alpha: f64, frame_width: usize, frame_height: usize) -> Blob {
    let clearance = blob.centroid_clearance();
    let radius = if clearance > 0.0 { clearance / 2.0 } else { 1.0 };

    let mut cols_by_row: Vec<Vec<usize>> = vec![Vec::new(); frame_height];
    let mut rows_by_col: Vec<Vec<usize>> = vec![Vec::new(); frame_width];
    for &(r, c) in blob.pixels() {
        cols_by_row[r].push(c);
        rows_by_col[c].push(r);
    }
    for v in &mut rows_by_col {
        v.sort_unstable();
    }

    let rows = scaled_range(blob.top, blob.height, alpha, frame_height);
    let cols = scaled_range(blob.left, blob.width, alpha, frame_width);
    let mut pixels = blob.pixels().to_vec();
    for r in rows {
        for c in cols.clone() {
            let near = |gap: Option<usize>| gap.is_some_and(|g| g > 0 && g as f64 <= radius);
            if near(nearest_gap(&cols_by_row[r], c)) || near(nearest_gap(&rows_by_col[c], r)) {
                pixels.push((r, c));
            }
        }
    }
    Blob::from_pixels(pixels).expect("dilation keeps the original pixels")
}

/// Population standard deviation of the frame over the blob's pixels.
pub fn intensity_spread(blob: &Blob, frame: &Frame) -> f64 {
    let vals: Vec<f64> = blob.pixels().iter().map(|&(r, c)| frame.at(r, c)).collect();
    let first = vals[0];
    if vals.iter().all(|&v| v == first) {
        return 0.0;
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Pixels of `dilated` whose 8-neighbourhood intensity range in `frame` is
/// at least the intensity spread of `original`.
pub fn detect_edges(dilated: &Blob, original: &Blob, frame: &Frame) -> Vec<Pixel> {
    let sigma = intensity_spread(original, frame);
    let (w, h) = (frame.width() as isize, frame.height() as isize);
    dilated
        .pixels()
        .iter()
        .copied()
        .filter(|&(r, c)| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for (nr, nc) in neighbours8(r as isize, c as isize) {
                if nr >= 0 && nc >= 0 && nr < h && nc < w {
                    let v = frame.at(nr as usize, nc as usize);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            hi >= lo && hi - lo >= sigma
        })
        .collect()
}

/// Keep the pixels of `dilated` lying between the first and last edge pixel
/// of their row and of their column. `None` when nothing survives.
pub fn trim_and_intersect(dilated: &Blob, edges: &[Pixel]) -> Option<Blob> {
    use std::collections::HashMap;
    let mut row_span: HashMap<usize, (usize, usize)> = HashMap::new();
    let mut col_span: HashMap<usize, (usize, usize)> = HashMap::new();
    for &(r, c) in edges {
        let e = row_span.entry(r).or_insert((c, c));
        e.0 = e.0.min(c);
        e.1 = e.1.max(c);
        let e = col_span.entry(c).or_insert((r, r));
        e.0 = e.0.min(r);
        e.1 = e.1.max(r);
    }
    let kept: Vec<Pixel> = dilated
        .pixels()
        .iter()
        .copied()
        .filter(|&(r, c)| {
            let in_row = row_span.get(&r).is_some_and(|&(a, b)| a <= c && c <= b);
            let in_col = col_span.get(&c).is_some_and(|&(a, b)| a <= r && r <= b);
            in_row && in_col
        })
        .collect();
    Blob::from_pixels(kept)
}

/// The three most frequent rounded gray levels, ties to the darker level,
/// padded with the dominant level.
pub fn histogram_peaks(values: impl IntoIterator<Item = f64>) -> [u8; 3] {
    let mut hist = [0usize; 256];
    for v in values {
        hist[round_gray(v) as usize] += 1;
    }
    let mut levels: Vec<usize> = (0..256).filter(|&g| hist[g] > 0).collect();
    levels.sort_by(|&a, &b| hist[b].cmp(&hist[a]).then(a.cmp(&b)));
    let first = levels.first().copied().unwrap_or(0) as u8;
    let pick = |i: usize| levels.get(i).map_or(first, |&g| g as u8);
    [pick(0), pick(1), pick(2)]
}

pub fn extract_features(blob: &Blob, frame: &Frame) -> DetectedObject {
    DetectedObject {
        centroid: blob.centroid(),
        height: blob.height(),
        width: blob.width(),
        top: blob.top(),
        left: blob.left(),
        peaks: histogram_peaks(blob.pixels().iter().map(|&(r, c)| frame.at(r, c))),
        area: blob.len(),
    }
}

/// Every intermediate region of one refined object.
#[derive(Debug, Clone)]
pub struct Refinement {
    /// Union of the mask blobs that merged during dilation.
    pub original: Blob,
    pub dilated: Blob,
    pub edges: Vec<Pixel>,
    pub refined: Option<Blob>,
    pub object: Option<DetectedObject>,
}

/// Full refinement of a moving-pixel mask against the current frame.
///
/// Dilated blobs that touch are merged into one object.
pub fn refine_mask(mask: &Plane<u8>, frame: &Frame, params: &RefineParams) -> Vec<Refinement> {
    let (w, h) = (mask.width, mask.height);
    let blobs = connected_components(mask, params.min_blob_area);
    if blobs.is_empty() {
        return Vec::new();
    }
    let dilated: Vec<Blob> = blobs.iter().map(|b| dilate_blob(b, params.alpha, w, h)).collect();

    let mut union = Plane::filled(w, h, 0u8);
    for d in &dilated {
        for &(r, c) in d.pixels() {
            union.set(r, c, 1);
        }
    }
    let groups = connected_components(&union, 1);
    let mut label = vec![usize::MAX; w * h];
    for (g, grp) in groups.iter().enumerate() {
        for &(r, c) in grp.pixels() {
            label[r * w + c] = g;
        }
    }
    let mut originals: Vec<Vec<Pixel>> = vec![Vec::new(); groups.len()];
    for b in &blobs {
        let (r, c) = b.pixels()[0];
        originals[label[r * w + c]].extend_from_slice(b.pixels());
    }

    groups
        .into_iter()
        .zip(originals)
        .filter_map(|(dilated, orig)| {
            let original = Blob::from_pixels(orig)?;
            let edges = detect_edges(&dilated, &original, frame);
            let refined = if edges.is_empty() {
                None
            } else {
                trim_and_intersect(&dilated, &edges)
            };
            let object = refined
                .as_ref()
                .filter(|b| {
                    b.height() >= params.min_object_side
                        && b.width() >= params.min_object_side
                        && b.height() * b.width() >= params.min_blob_area
                })
                .map(|b| extract_features(b, frame));
            Some(Refinement {
                original,
                dilated,
                edges,
                refined,
                object,
            })
        })
        .collect()
}

pub fn detect_objects(mask: &Plane<u8>, frame: &Frame, params: &RefineParams) -> Vec<DetectedObject> {
    refine_mask(mask, frame, params)
        .into_iter()
        .filter_map(|r| r.object)
        .collect()
}
