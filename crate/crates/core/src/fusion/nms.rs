//! Weighted non-maximum suppression over a dense, already-aligned box set.

use std::cmp::Ordering;

use super::{Detection, FusionConfig, FusionTally};
use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, BevFootprint, Box3D};
use crate::motion::{BicycleParams, CvParams, MotionParams, UnicycleParams};

/// Output of [`weighted_nms_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct NmsReport {
    pub fused: Vec<Detection>,
    /// Inputs dropped by the `[iou_low, iou_high)` band.
    pub discarded: usize,
}

/// Processing order: class, then weight, raw score and input position.
pub(crate) fn ranking(dets: &[Detection], weights: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        dets[a]
            .class
            .cmp(&dets[b].class)
            .then_with(|| weights[b].total_cmp(&weights[a]))
            .then_with(|| dets[b].score.total_cmp(&dets[a].score))
            .then_with(|| a.cmp(&b))
    });
    order
}

pub(crate) fn check_inputs(dense: &[Detection]) -> Result<Vec<f64>> {
    let mut weights = Vec::with_capacity(dense.len());
    for (index, d) in dense.iter().enumerate() {
        weights.push(d.weight.ok_or(Error::MissingWeight { index })?);
    }
    if let Some(first) = dense.first() {
        let kind = first.motion.kind();
        if let Some(other) = dense.iter().find(|d| d.motion.kind() != kind) {
            return Err(Error::MixedMotionModels {
                first: kind.name(),
                other: other.motion.kind().name(),
            });
        }
    }
    Ok(weights)
}

/// Weighted NMS: every cluster of boxes with IoU ≥ `iou_high` against its
/// top-ranked member collapses into one weight-averaged box.
pub fn weighted_nms(dense: &[Detection], cfg: &FusionConfig) -> Result<Vec<Detection>> {
    Ok(weighted_nms_report(dense, cfg)?.fused)
}

pub fn weighted_nms_report(dense: &[Detection], cfg: &FusionConfig) -> Result<NmsReport> {
    let weights = check_inputs(dense)?;
    let order = ranking(dense, &weights);
    let footprints: Vec<BevFootprint> = order.iter().map(|&i| BevFootprint::new(&dense[i].bbox)).collect();
    let mut alive = vec![true; order.len()];
    let mut fused = Vec::new();
    let mut discarded = 0;
    let mut members: Vec<usize> = Vec::new();

    let mut start = 0;
    while start < order.len() {
        let class = &dense[order[start]].class;
        let end = start + order[start..].iter().take_while(|&&i| &dense[i].class == class).count();

        for top in start..end {
            if !alive[top] {
                continue;
            }
            alive[top] = false;
            members.clear();
            members.push(order[top]);
            let fp = &footprints[top];
            for k in top + 1..end {
                if !alive[k] || fp.far_from(&footprints[k]) {
                    continue;
                }
                let iou = fp.iou(&footprints[k]);
                if iou >= cfg.iou_high {
                    members.push(order[k]);
                    alive[k] = false;
                } else if iou >= cfg.iou_low {
                    discarded += 1;
                    alive[k] = false;
                }
            }
            fused.push(fuse_members(dense, &weights, &members));
        }
        start = end;
    }

    Ok(NmsReport { fused, discarded })
}

/// Weighted mean of `members` (first entry is the cluster leader).
pub(crate) fn fuse_members(dense: &[Detection], weights: &[f64], members: &[usize]) -> Detection {
    let lead = &dense[members[0]];
    let total: f64 = members.iter().map(|&i| weights[i]).sum();
    let share = |i: usize| -> f64 {
        if total > 0.0 {
            weights[i] / total
        } else {
            1.0 / members.len() as f64
        }
    };

    let ref_yaw = lead.bbox.yaw();
    let mut acc = [0.0f64; 7];
    let mut score = 0.0;
    let mut weight = 0.0;
    let mut motion = [0.0f64; 3];
    let mut current = 0u32;
    let mut lag = u32::MAX;
    for &i in members {
        let d = &dense[i];
        let s = share(i);
        let b = d.bbox.to_array();
        for k in 0..6 {
            acc[k] += s * b[k];
        }
        acc[6] += s * wrap_angle(b[6] - ref_yaw);
        score += s * d.score;
        weight += s * weights[i];
        for (m, v) in motion.iter_mut().zip(motion_components(&d.motion)) {
            *m += s * v;
        }
        if d.lag == 0 {
            current += 1;
        }
        lag = lag.min(d.lag);
    }

    let bbox = Box3D::new([acc[0], acc[1], acc[2]], [acc[3], acc[4], acc[5]], ref_yaw + acc[6])
        .expect("weighted mean of valid boxes is valid");
    Detection {
        bbox,
        score: score.clamp(0.0, 1.0),
        class: lead.class.clone(),
        motion: rebuild_motion(&lead.motion, motion),
        weight: Some(weight.clamp(0.0, 1.0)),
        lag,
        track_id: lead.track_id,
        tally: Some(FusionTally {
            members: members.len() as u32,
            current_members: current,
        }),
    }
}

fn motion_components(m: &MotionParams) -> [f64; 3] {
    match *m {
        MotionParams::Cv(p) => [p.vx, p.vy, 0.0],
        MotionParams::Unicycle(p) => [p.speed, p.yaw_rate, 0.0],
        MotionParams::Bicycle(p) => [p.speed, p.slip, p.rear_axle],
    }
}

fn rebuild_motion(template: &MotionParams, v: [f64; 3]) -> MotionParams {
    match template {
        MotionParams::Cv(_) => MotionParams::Cv(CvParams { vx: v[0], vy: v[1] }),
        MotionParams::Unicycle(_) => MotionParams::Unicycle(UnicycleParams {
            speed: v[0],
            yaw_rate: v[1],
        }),
        // β stays inside [-π/2, π/2] under a convex combination
        MotionParams::Bicycle(_) => MotionParams::Bicycle(BicycleParams {
            speed: v[0],
            slip: v[1],
            rear_axle: v[2],
        }),
    }
}

/// Canonical ordering for comparing NMS outputs: class, then center.
pub fn canonical_order(a: &Detection, b: &Detection) -> Ordering {
    a.class.cmp(&b.class).then_with(|| {
        let (ca, cb) = (a.bbox.center(), b.bbox.center());
        ca[0].total_cmp(&cb[0]).then(ca[1].total_cmp(&cb[1]))
    })
}
