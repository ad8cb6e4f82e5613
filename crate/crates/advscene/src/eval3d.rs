//! 3D detection scoring: rotated-footprint IoU via convex clipping, KITTI
//! difficulty binning, greedy score-ordered matching, and average precision
//! at 40 recall positions.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::kitti_io::ObjectLabel3D;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("frame ids do not align; missing in predictions: {missing_pred:?}, missing in ground truth: {missing_gt:?}")]
    FrameMismatch {
        missing_pred: Vec<u64>,
        missing_gt: Vec<u64>,
    },
    #[error("prediction in frame {frame} has no score")]
    MissingScore { frame: u64 },
}

/// An upright 3D box in the camera frame. `center.1` (y) sits on the bottom
/// face per the KITTI convention; the box spans `[y - h, y]` vertically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box3D {
    pub center: (f64, f64, f64),
    /// (h, w, l) in meters.
    pub dims: (f64, f64, f64),
    pub rotation_y: f64,
}

impl Box3D {
    pub fn from_label(label: &ObjectLabel3D) -> Box3D {
        Box3D {
            center: label.location,
            dims: label.dims,
            rotation_y: label.rotation_y,
        }
    }

    pub fn volume(&self) -> f64 {
        self.dims.0 * self.dims.1 * self.dims.2
    }
}

/// Bird's-eye-view footprint: an l x w rectangle centered at (x, z), rotated
/// by `rotation_y`, counter-clockwise vertex order.
pub fn bev_polygon(b: &Box3D) -> [(f64, f64); 4] {
    let (_, w, l) = b.dims;
    let (cx, cz) = (b.center.0, b.center.2);
    let (cos, sin) = (b.rotation_y.cos(), b.rotation_y.sin());
    let corners = [
        (l / 2.0, w / 2.0),
        (-l / 2.0, w / 2.0),
        (-l / 2.0, -w / 2.0),
        (l / 2.0, -w / 2.0),
    ];
    corners.map(|(u, v)| (cx + u * cos + v * sin, cz - u * sin + v * cos))
}

fn shoelace_area(poly: &[(f64, f64)]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..poly.len() {
        let (x0, y0) = poly[i];
        let (x1, y1) = poly[(i + 1) % poly.len()];
        acc += x0 * y1 - x1 * y0;
    }
    acc.abs() / 2.0
}

/// Intersection area of two convex counter-clockwise polygons via
/// Sutherland-Hodgman clipping of `p` against each edge of `q`.
pub fn convex_intersection_area(p: &[(f64, f64)], q: &[(f64, f64)]) -> f64 {
    let mut subject: Vec<(f64, f64)> = p.to_vec();
    for i in 0..q.len() {
        if subject.is_empty() {
            return 0.0;
        }
        let (ax, ay) = q[i];
        let (bx, by) = q[(i + 1) % q.len()];
        let side = |px: f64, py: f64| (bx - ax) * (py - ay) - (by - ay) * (px - ax);
        let mut clipped = Vec::with_capacity(subject.len() + 1);
        for j in 0..subject.len() {
            let (sx, sy) = subject[j];
            let (ex, ey) = subject[(j + 1) % subject.len()];
            let sd = side(sx, sy);
            let ed = side(ex, ey);
            if sd >= 0.0 {
                clipped.push((sx, sy));
            }
            if (sd > 0.0 && ed < 0.0) || (sd < 0.0 && ed > 0.0) {
                let t = sd / (sd - ed);
                clipped.push((sx + t * (ex - sx), sy + t * (ey - sy)));
            }
        }
        subject = clipped;
    }
    shoelace_area(&subject)
}

/// Rotated 3D IoU: BEV intersection area times vertical overlap over the
/// union volume. Degenerate boxes yield 0.
pub fn iou_3d(a: &Box3D, b: &Box3D) -> f64 {
    let (ya0, ya1) = (a.center.1 - a.dims.0, a.center.1);
    let (yb0, yb1) = (b.center.1 - b.dims.0, b.center.1);
    let vertical = (ya1.min(yb1) - ya0.max(yb0)).max(0.0);
    if vertical <= 0.0 {
        return 0.0;
    }
    let bev = convex_intersection_area(&bev_polygon(a), &bev_polygon(b));
    let inter = bev * vertical;
    let union = a.volume() + b.volume() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Difficulty {
    Easy,
    Moderate,
    Hard,
}

impl Difficulty {
    pub const ALL: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Moderate, Difficulty::Hard];

    pub fn name(&self) -> &'static str {
        match self {
            Difficulty::Easy => "easy",
            Difficulty::Moderate => "moderate",
            Difficulty::Hard => "hard",
        }
    }
}

/// KITTI difficulty thresholds: (min 2D box height, max occlusion, max
/// truncation).
fn tier_limits(d: Difficulty) -> (f64, i32, f64) {
    match d {
        Difficulty::Easy => (40.0, 0, 0.15),
        Difficulty::Moderate => (25.0, 1, 0.30),
        Difficulty::Hard => (25.0, 2, 0.50),
    }
}

/// Difficulty tiers a label qualifies for; empty means the object is ignored
/// at every tier (neither TP nor FP).
pub fn assign_difficulty(label: &ObjectLabel3D) -> Vec<Difficulty> {
    Difficulty::ALL
        .into_iter()
        .filter(|&d| {
            let (min_h, max_occ, max_trunc) = tier_limits(d);
            label.bbox_height() >= min_h
                && label.occlusion <= max_occ
                && label.truncation <= max_trunc
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub class_name: String,
    pub iou_threshold: f64,
    /// Minimum (pred 2D box ∩ DontCare region) / (pred 2D box area) for a
    /// prediction to be absorbed by a DontCare region.
    pub dont_care_overlap: f64,
}

impl EvalConfig {
    pub fn car() -> EvalConfig {
        EvalConfig {
            class_name: "Car".to_string(),
            iou_threshold: 0.7,
            dont_care_overlap: 0.5,
        }
    }
}

/// One precision/recall sample at a score threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrSample {
    pub threshold: f64,
    pub recall: f64,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DifficultyResult {
    /// AP3D over 40 recall positions, as a percentage in [0, 100].
    pub ap: f64,
    pub samples: Vec<PrSample>,
    pub gt_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub easy: DifficultyResult,
    pub moderate: DifficultyResult,
    pub hard: DifficultyResult,
}

impl EvalReport {
    pub fn get(&self, d: Difficulty) -> &DifficultyResult {
        match d {
            Difficulty::Easy => &self.easy,
            Difficulty::Moderate => &self.moderate,
            Difficulty::Hard => &self.hard,
        }
    }
}

const RECALL_POSITIONS: usize = 40;

struct FrameGt<'a> {
    /// (label, counts at this difficulty). Non-counting same-class labels
    /// are "ignored": they can absorb a match but produce neither TP nor FP.
    boxes: Vec<(&'a ObjectLabel3D, bool)>,
    dont_care: Vec<&'a ObjectLabel3D>,
}

struct FramePred<'a> {
    /// Sorted by descending score, ties by label index.
    boxes: Vec<(&'a ObjectLabel3D, f64)>,
}

fn bbox2d_overlap_ratio(pred: &ObjectLabel3D, dc: &ObjectLabel3D) -> f64 {
    let (pl, pt, pr, pb) = pred.bbox2d;
    let (dl, dt, dr, db) = dc.bbox2d;
    let iw = (pr.min(dr) - pl.max(dl)).max(0.0);
    let ih = (pb.min(db) - pt.max(dt)).max(0.0);
    let area = (pr - pl).max(0.0) * (pb - pt).max(0.0);
    if area <= 0.0 {
        return 0.0;
    }
    iw * ih / area
}

/// Greedy matching of one frame at a score threshold. Returns (tp, fp).
fn match_frame(gt: &FrameGt, pred: &FramePred, config: &EvalConfig, threshold: f64) -> (usize, usize) {
    let mut matched = vec![false; gt.boxes.len()];
    let (mut tp, mut fp) = (0, 0);
    for &(p, score) in &pred.boxes {
        if score < threshold {
            continue;
        }
        let pb = Box3D::from_label(p);
        // Best counting GT first.
        let mut best: Option<(usize, f64)> = None;
        for (gi, &(g, counts)) in gt.boxes.iter().enumerate() {
            if matched[gi] || !counts {
                continue;
            }
            let iou = iou_3d(&Box3D::from_label(g), &pb);
            if iou >= config.iou_threshold && best.map_or(true, |(_, b)| iou > b) {
                best = Some((gi, iou));
            }
        }
        if let Some((gi, _)) = best {
            matched[gi] = true;
            tp += 1;
            continue;
        }
        // Ignored GT absorb the prediction without penalty.
        let mut absorbed = false;
        for (gi, &(g, counts)) in gt.boxes.iter().enumerate() {
            if matched[gi] || counts {
                continue;
            }
            if iou_3d(&Box3D::from_label(g), &pb) >= config.iou_threshold {
                matched[gi] = true;
                absorbed = true;
                break;
            }
        }
        if absorbed {
            continue;
        }
        if gt
            .dont_care
            .iter()
            .any(|dc| bbox2d_overlap_ratio(p, dc) >= config.dont_care_overlap)
        {
            continue;
        }
        fp += 1;
    }
    (tp, fp)
}

fn evaluate_difficulty(
    frames: &[(FrameGt, FramePred)],
    config: &EvalConfig,
    difficulty: Difficulty,
) -> DifficultyResult {
    // Rebuild the per-frame GT counting flags for this difficulty.
    let frames: Vec<(FrameGt, &FramePred)> = frames
        .iter()
        .map(|(gt, pred)| {
            let boxes = gt
                .boxes
                .iter()
                .map(|&(g, _)| (g, assign_difficulty(g).contains(&difficulty)))
                .collect();
            (
                FrameGt {
                    boxes,
                    dont_care: gt.dont_care.clone(),
                },
                pred,
            )
        })
        .collect();

    let gt_count: usize = frames
        .iter()
        .map(|(gt, _)| gt.boxes.iter().filter(|&&(_, c)| c).count())
        .sum();

    // Scores at which each counting GT is recalled: max score of any
    // sufficiently overlapping prediction.
    let mut tp_scores: Vec<f64> = Vec::new();
    for (gt, pred) in &frames {
        for &(g, counts) in &gt.boxes {
            if !counts {
                continue;
            }
            let gb = Box3D::from_label(g);
            let best = pred
                .boxes
                .iter()
                .filter(|(p, _)| iou_3d(&gb, &Box3D::from_label(p)) >= config.iou_threshold)
                .map(|&(_, s)| s)
                .fold(f64::NEG_INFINITY, f64::max);
            if best.is_finite() {
                tp_scores.push(best);
            }
        }
    }
    tp_scores.sort_by(|a, b| b.total_cmp(a));

    // Threshold sweep over the 40 recall fractions.
    let mut precisions = vec![None; RECALL_POSITIONS];
    let mut samples = Vec::new();
    for i in 0..RECALL_POSITIONS {
        let r = (i + 1) as f64 / RECALL_POSITIONS as f64;
        let needed = (r * gt_count as f64).ceil() as usize;
        if needed == 0 || needed > tp_scores.len() {
            continue;
        }
        let threshold = tp_scores[needed - 1];
        let (mut tp, mut fp) = (0, 0);
        for (gt, pred) in &frames {
            let (t, f) = match_frame(gt, pred, config, threshold);
            tp += t;
            fp += f;
        }
        let precision = if tp + fp > 0 {
            tp as f64 / (tp + fp) as f64
        } else {
            0.0
        };
        precisions[i] = Some(precision);
        samples.push(PrSample {
            threshold,
            recall: if gt_count > 0 { tp as f64 / gt_count as f64 } else { 0.0 },
            precision,
        });
    }

    // Interpolated precision: running max from the right; recall points the
    // detector never reaches contribute 0.
    let mut ap_sum = 0.0;
    let mut running_max = 0.0f64;
    for p in precisions.iter().rev() {
        if let Some(p) = p {
            running_max = running_max.max(*p);
        }
        if running_max > 0.0 && p.is_some() {
            ap_sum += running_max;
        }
    }
    DifficultyResult {
        ap: ap_sum / RECALL_POSITIONS as f64 * 100.0,
        samples,
        gt_count,
    }
}

/// Scores predictions against ground truth for one class at all three
/// difficulties. Frame ids must align exactly between the two maps.
pub fn evaluate(
    gt: &BTreeMap<u64, Vec<ObjectLabel3D>>,
    pred: &BTreeMap<u64, Vec<ObjectLabel3D>>,
    config: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    let missing_pred: Vec<u64> = gt.keys().filter(|k| !pred.contains_key(k)).copied().collect();
    let missing_gt: Vec<u64> = pred.keys().filter(|k| !gt.contains_key(k)).copied().collect();
    if !missing_pred.is_empty() || !missing_gt.is_empty() {
        return Err(EvalError::FrameMismatch {
            missing_pred,
            missing_gt,
        });
    }

    let mut frames = Vec::with_capacity(gt.len());
    for (frame_id, gt_labels) in gt {
        let pred_labels = &pred[frame_id];
        let boxes = gt_labels
            .iter()
            .filter(|g| g.class_name == config.class_name)
            .map(|g| (g, true))
            .collect();
        let dont_care = gt_labels.iter().filter(|g| g.is_dont_care()).collect();
        let mut scored: Vec<(&ObjectLabel3D, f64)> = Vec::new();
        for p in pred_labels {
            // Other-class predictions are ignored entirely.
            if p.class_name != config.class_name {
                continue;
            }
            let score = p.score.ok_or(EvalError::MissingScore { frame: *frame_id })?;
            scored.push((p, score));
        }
        // Deterministic matching order: descending score, then label index.
        scored.sort_by(|a, b| b.1.total_cmp(&a.1));
        frames.push((FrameGt { boxes, dont_care }, FramePred { boxes: scored }));
    }

    Ok(EvalReport {
        easy: evaluate_difficulty(&frames, config, Difficulty::Easy),
        moderate: evaluate_difficulty(&frames, config, Difficulty::Moderate),
        hard: evaluate_difficulty(&frames, config, Difficulty::Hard),
    })
}
