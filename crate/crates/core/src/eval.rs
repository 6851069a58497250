//! Matching-based detection metrics and motion-state subsets.
//!
//! The heading-weighted AP here discounts each true positive by
//! `max(0, 1 - |Δyaw| / π)`. It mirrors the idea of Waymo's APH but is not
//! numerically comparable to it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::Frame;
use crate::geometry::{wrap_angle, BevFootprint};
use crate::motion::{estimate_params_from_track, forward, ModelKind, MotionParams, TimedPose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchPair {
    pub gt: usize,
    pub det: usize,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct MatchResult {
    pub pairs: Vec<MatchPair>,
    pub unmatched_gt: Vec<usize>,
    pub unmatched_det: Vec<usize>,
}

fn score_order(frame: &Frame) -> Vec<usize> {
    let mut order: Vec<usize> = (0..frame.detections.len()).collect();
    order.sort_by(|&a, &b| frame.detections[b].score.total_cmp(&frame.detections[a].score).then(a.cmp(&b)));
    order
}

/// Greedy one-to-one matching: detections in descending score order each
/// take the unmatched same-class GT box of highest IoU, if that IoU exceeds
/// `iou_threshold`.
pub fn match_frame(gt: &Frame, det: &Frame, iou_threshold: f64) -> MatchResult {
    let gt_fp: Vec<BevFootprint> = gt.detections.iter().map(|d| BevFootprint::new(&d.bbox)).collect();
    let mut taken = vec![false; gt.detections.len()];
    let mut result = MatchResult::default();
    for j in score_order(det) {
        let d = &det.detections[j];
        let fp = BevFootprint::new(&d.bbox);
        let mut best: Option<(usize, f64)> = None;
        for (i, g) in gt.detections.iter().enumerate() {
            if taken[i] || g.class != d.class || fp.far_from(&gt_fp[i]) {
                continue;
            }
            let iou = fp.iou(&gt_fp[i]);
            if iou > iou_threshold && best.is_none_or(|(_, b)| iou > b) {
                best = Some((i, iou));
            }
        }
        match best {
            Some((i, iou)) => {
                taken[i] = true;
                result.pairs.push(MatchPair { gt: i, det: j, iou });
            }
            None => result.unmatched_det.push(j),
        }
    }
    result.unmatched_gt = (0..gt.detections.len()).filter(|&i| !taken[i]).collect();
    result.unmatched_det.sort_unstable();
    result
}

/// Heading credit of a true positive.
pub fn heading_weight(det_yaw: f64, gt_yaw: f64) -> f64 {
    (1.0 - wrap_angle(det_yaw - gt_yaw).abs() / std::f64::consts::PI).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrCurvePoint {
    pub score: f64,
    pub precision: f64,
    pub recall: f64,
    pub heading_precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApResult {
    pub ap: f64,
    /// Heading-weighted AP.
    pub aph: f64,
    pub n_gt: usize,
    pub n_det: usize,
    pub curve: Vec<PrCurvePoint>,
}

/// Area under the all-point interpolated precision/recall curve.
fn interpolated_area(recall: &[f64], precision: &[f64]) -> f64 {
    let mut envelope = precision.to_vec();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }
    let mut prev = 0.0;
    let mut area = 0.0;
    for (r, p) in recall.iter().zip(&envelope) {
        area += (r - prev) * p;
        prev = *r;
    }
    area
}

/// Scored outcome of one detection: (score, frame, index, heading credit if TP).
type Outcome = (f64, usize, usize, Option<f64>);

fn ap_from_outcomes(mut outcomes: Vec<Outcome>, n_gt: usize) -> Result<ApResult> {
    if n_gt == 0 {
        return Err(Error::NoGroundTruth);
    }
    outcomes.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let (mut tp, mut tp_h) = (0.0, 0.0);
    let mut recall = Vec::with_capacity(outcomes.len());
    let mut precision = Vec::with_capacity(outcomes.len());
    let mut recall_h = Vec::with_capacity(outcomes.len());
    let mut precision_h = Vec::with_capacity(outcomes.len());
    let mut curve = Vec::with_capacity(outcomes.len());
    for (k, &(score, _, _, hit)) in outcomes.iter().enumerate() {
        if let Some(w) = hit {
            tp += 1.0;
            tp_h += w;
        }
        let seen = (k + 1) as f64;
        recall.push(tp / n_gt as f64);
        precision.push(tp / seen);
        recall_h.push(tp_h / n_gt as f64);
        precision_h.push(tp_h / seen);
        curve.push(PrCurvePoint {
            score,
            precision: tp / seen,
            recall: tp / n_gt as f64,
            heading_precision: tp_h / seen,
        });
    }
    Ok(ApResult {
        ap: interpolated_area(&recall, &precision),
        aph: interpolated_area(&recall_h, &precision_h),
        n_gt,
        n_det: outcomes.len(),
        curve,
    })
}

fn check_aligned(a: &[Frame], b: &[Frame]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    Ok(())
}

fn outcomes_for(gt: &[Frame], det: &[Frame], iou_threshold: f64) -> Vec<Outcome> {
    let mut out = Vec::new();
    for (k, (g, d)) in gt.iter().zip(det).enumerate() {
        let m = match_frame(g, d, iou_threshold);
        for p in &m.pairs {
            let w = heading_weight(d.detections[p.det].bbox.yaw(), g.detections[p.gt].bbox.yaw());
            out.push((d.detections[p.det].score, k, p.det, Some(w)));
        }
        out.extend(m.unmatched_det.iter().map(|&j| (d.detections[j].score, k, j, None)));
    }
    out
}

/// AP and heading-weighted AP over a whole sequence.
pub fn average_precision(gt: &[Frame], det: &[Frame], iou_threshold: f64) -> Result<ApResult> {
    check_aligned(gt, det)?;
    let n_gt = gt.iter().map(|f| f.detections.len()).sum();
    ap_from_outcomes(outcomes_for(gt, det, iou_threshold), n_gt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionState {
    Stationary,
    Straight,
    Turning,
}

pub const STATIONARY_SPEED: f64 = 0.1;
pub const TURNING_RADIUS: f64 = 25.0;
pub const TURNING_SPEED: f64 = 1.0;
pub const STRICT_TURNING_SPEED: f64 = 5.0;

pub fn motion_state(m: &MotionParams) -> MotionState {
    let v = m.speed();
    if v < STATIONARY_SPEED {
        MotionState::Stationary
    } else if m.turning_radius() < TURNING_RADIUS && v > TURNING_SPEED {
        MotionState::Turning
    } else {
        MotionState::Straight
    }
}

pub fn is_strict_turning(m: &MotionParams) -> bool {
    m.speed() > STRICT_TURNING_SPEED && m.turning_radius() < TURNING_RADIUS
}

/// Per-vehicle label and strict-turning flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct VehicleLabel {
    pub state: MotionState,
    pub strict_turning: bool,
}

/// Labels every GT vehicle (by `track_id`) by majority vote over its frames.
/// Ties go to the earlier of stationary, straight, turning.
pub fn split_motion_state(gt: &[Frame]) -> Result<BTreeMap<u64, VehicleLabel>> {
    let mut votes: BTreeMap<u64, ([usize; 3], usize, usize)> = BTreeMap::new();
    for d in gt.iter().flat_map(|f| &f.detections) {
        let id = d.track_id.ok_or(Error::MissingTrackId)?;
        let entry = votes.entry(id).or_default();
        entry.0[motion_state(&d.motion) as usize] += 1;
        entry.1 += usize::from(is_strict_turning(&d.motion));
        entry.2 += 1;
    }
    Ok(votes
        .into_iter()
        .map(|(id, (counts, strict, total))| {
            let best = (0..3).rev().max_by_key(|&i| counts[i]).expect("three states");
            let state = [MotionState::Stationary, MotionState::Straight, MotionState::Turning][best];
            (id, VehicleLabel { state, strict_turning: 2 * strict > total })
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subset {
    All,
    Stationary,
    Straight,
    Turning,
    StrictTurning,
}

impl Subset {
    pub const ALL: [Subset; 5] = [Subset::All, Subset::Stationary, Subset::Straight, Subset::Turning, Subset::StrictTurning];

    pub fn name(self) -> &'static str {
        match self {
            Subset::All => "all",
            Subset::Stationary => "stationary",
            Subset::Straight => "straight",
            Subset::Turning => "turning",
            Subset::StrictTurning => "strict_turning",
        }
    }

    fn contains(self, label: &VehicleLabel) -> bool {
        match self {
            Subset::All => true,
            Subset::Stationary => label.state == MotionState::Stationary,
            Subset::Straight => label.state == MotionState::Straight,
            Subset::Turning => label.state == MotionState::Turning,
            Subset::StrictTurning => label.strict_turning,
        }
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// GT restricted to `subset`, and detections restricted to those overlapping
/// a subset GT box above the threshold. For [`Subset::All`] nothing is removed.
pub fn restrict_to_subset(
    gt: &[Frame],
    det: &[Frame],
    labels: &BTreeMap<u64, VehicleLabel>,
    subset: Subset,
    iou_threshold: f64,
) -> Result<(Vec<Frame>, Vec<Frame>)> {
    check_aligned(gt, det)?;
    if subset == Subset::All {
        return Ok((gt.to_vec(), det.to_vec()));
    }
    let mut gt_out = Vec::with_capacity(gt.len());
    let mut det_out = Vec::with_capacity(det.len());
    for (g, d) in gt.iter().zip(det) {
        let mut keep_gt = Vec::new();
        for x in &g.detections {
            let id = x.track_id.ok_or(Error::MissingTrackId)?;
            if labels.get(&id).is_some_and(|l| subset.contains(l)) {
                keep_gt.push(x.clone());
            }
        }
        let fps: Vec<BevFootprint> = keep_gt.iter().map(|x| BevFootprint::new(&x.bbox)).collect();
        let keep_det = d
            .detections
            .iter()
            .filter(|x| {
                let fp = BevFootprint::new(&x.bbox);
                keep_gt
                    .iter()
                    .zip(&fps)
                    .any(|(gx, gfp)| gx.class == x.class && !fp.far_from(gfp) && fp.iou(gfp) > iou_threshold)
            })
            .cloned()
            .collect();
        gt_out.push(Frame::new(g.timestamp, g.ego, keep_gt));
        det_out.push(Frame::new(d.timestamp, d.ego, keep_det));
    }
    Ok((gt_out, det_out))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub ap: f64,
    pub aph: f64,
    pub n_det: usize,
}

impl From<&ApResult> for Metrics {
    fn from(r: &ApResult) -> Self {
        Self { ap: r.ap, aph: r.aph, n_det: r.n_det }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetRow {
    pub subset: Subset,
    pub vehicles: usize,
    pub n_gt: usize,
    /// `None` when the subset has no GT boxes.
    pub raw: Option<Metrics>,
    pub fused: Option<Metrics>,
}

impl SubsetRow {
    pub fn delta_ap(&self) -> Option<f64> {
        Some(self.fused?.ap - self.raw?.ap)
    }

    pub fn delta_aph(&self) -> Option<f64> {
        Some(self.fused?.aph - self.raw?.aph)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnhancementReport {
    pub iou_threshold: f64,
    pub rows: Vec<SubsetRow>,
}

impl EnhancementReport {
    pub fn row(&self, subset: Subset) -> Option<&SubsetRow> {
        self.rows.iter().find(|r| r.subset == subset)
    }
}

/// Before/after metrics for every motion-state subset.
pub fn evaluate_enhancement(
    gt: &[Frame],
    raw: &[Frame],
    fused: &[Frame],
    iou_threshold: f64,
) -> Result<EnhancementReport> {
    check_aligned(gt, raw)?;
    check_aligned(gt, fused)?;
    let labels = split_motion_state(gt)?;
    let mut rows = Vec::with_capacity(Subset::ALL.len());
    for subset in Subset::ALL {
        let vehicles = labels.values().filter(|l| subset.contains(l)).count();
        let (sub_gt, sub_raw) = restrict_to_subset(gt, raw, &labels, subset, iou_threshold)?;
        let (_, sub_fused) = restrict_to_subset(gt, fused, &labels, subset, iou_threshold)?;
        let n_gt = sub_gt.iter().map(|f| f.detections.len()).sum();
        let metrics = |det: &[Frame]| -> Result<Option<Metrics>> {
            match average_precision(&sub_gt, det, iou_threshold) {
                Ok(r) => Ok(Some(Metrics::from(&r))),
                Err(Error::NoGroundTruth) => Ok(None),
                Err(e) => Err(e),
            }
        };
        rows.push(SubsetRow {
            subset,
            vehicles,
            n_gt,
            raw: metrics(&sub_raw)?,
            fused: metrics(&sub_fused)?,
        });
    }
    Ok(EnhancementReport { iou_threshold, rows })
}

/// Track ids of the vehicles in `subset`.
pub fn subset_ids(labels: &BTreeMap<u64, VehicleLabel>, subset: Subset) -> BTreeSet<u64> {
    labels.iter().filter(|(_, l)| subset.contains(l)).map(|(&id, _)| id).collect()
}

/// Forward-prediction error at one horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredictionError {
    pub model: ModelKind,
    pub steps: usize,
    pub horizon: f64,
    pub position: f64,
    pub heading: f64,
}

/// Prediction errors of `model` along a GT track.
///
/// Parameters come from the adjacent pair `(track[start - 1], track[start])`;
/// the pose at `start` is then forwarded `1..=max_steps` frames and compared
/// with the track.
pub fn prediction_errors(
    track: &[TimedPose],
    start: usize,
    max_steps: usize,
    model: ModelKind,
    rear_axle: f64,
) -> Result<Vec<PredictionError>> {
    if start == 0 || start + max_steps >= track.len() {
        return Err(Error::invalid("start", "track too short for the requested horizon"));
    }
    let params = estimate_params_from_track(&track[start - 1..=start], model, rear_axle)?[1];
    let origin = &track[start];
    (1..=max_steps)
        .map(|k| {
            let target = &track[start + k];
            let horizon = target.time - origin.time;
            let p = forward(&origin.pose, &params, horizon);
            Ok(PredictionError {
                model,
                steps: k,
                horizon,
                position: (p.x() - target.pose.x()).hypot(p.y() - target.pose.y()),
                heading: wrap_angle(p.heading() - target.pose.heading()).abs(),
            })
        })
        .collect()
}
