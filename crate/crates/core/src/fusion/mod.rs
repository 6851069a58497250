//! Multi-frame fusion: forward history detections into the current frame and
//! merge everything with weighted NMS under confidence decay.

mod config;
mod detection;
mod nms;
mod stream;

pub use config::{FusionConfig, Preset, ScoreStrategy};
pub use detection::{check_monotone, Detection, Frame, FusionTally};
pub use nms::{canonical_order, weighted_nms, weighted_nms_report, NmsReport};
pub use stream::{fuse_sequence, FuseSequence, SlidingFuser};

use crate::error::{Error, Result};
use crate::geometry::{EgoPose, Point2, RigidTransform};
use crate::motion::{forward_box, CvParams, MotionParams};

/// Voting weight `s · d^(lag/τ)` for a box observed `time_lag` seconds ago.
pub fn decayed_weight(score: f64, time_lag: f64, cfg: &FusionConfig) -> f64 {
    score * cfg.weight_decay.powf(time_lag / cfg.frame_interval)
}

/// Advances every detection of `frame` to `target_time` and re-expresses it
/// in the `target_ego` frame.
pub fn forward_frame(frame: &Frame, target_time: f64, target_ego: &EgoPose, cfg: &FusionConfig) -> Vec<Detection> {
    let dt = target_time - frame.timestamp;
    let tf = RigidTransform::between(&frame.ego, target_ego);
    let lag = cfg.lag_frames(dt);
    frame
        .detections
        .iter()
        .map(|d| {
            let moved = forward_box(&d.bbox, &d.motion, dt);
            Detection {
                bbox: moved.transformed(&tf),
                score: d.score,
                class: d.class.clone(),
                motion: rotate_motion(&d.motion, &tf),
                weight: Some(decayed_weight(d.score, dt, cfg)),
                lag,
                track_id: d.track_id,
                tally: None,
            }
        })
        .collect()
}

// Unicycle and bicycle parameters are body-frame quantities; only the CV
// velocity is tied to the ego axes.
fn rotate_motion(m: &MotionParams, tf: &RigidTransform) -> MotionParams {
    match *m {
        MotionParams::Cv(p) => {
            let v = tf.apply_vector(Point2::new(p.vx, p.vy));
            MotionParams::Cv(CvParams { vx: v.x, vy: v.y })
        }
        other => other,
    }
}

/// Reduces the scores of history-only outputs and drops those that fall below
/// the configured floor.
pub fn apply_score_strategy(fused: Vec<Detection>, cfg: &FusionConfig) -> Vec<Detection> {
    fused
        .into_iter()
        .filter_map(|mut d| {
            if !d.history_only() {
                return Some(d);
            }
            let before = d.score;
            let reduced = match cfg.score_strategy {
                ScoreStrategy::Decay => d.weight.unwrap_or(before),
                ScoreStrategy::Divide => {
                    let n_f = d.tally.map_or(1, |t| t.members) as usize;
                    let gap = cfg.n_history.saturating_sub(n_f).max(1);
                    cfg.score_decay_factor * before / gap as f64
                }
            };
            d.score = reduced.min(before);
            (d.score >= cfg.history_score_floor).then_some(d)
        })
        .collect()
}

/// Fuses a window of raw frames (oldest first) into one frame at the time and
/// ego pose of the last frame.
pub fn fuse_frames(window: &[Frame], cfg: &FusionConfig) -> Result<Frame> {
    Ok(fuse_frames_report(window, cfg)?.0)
}

/// [`fuse_frames`] plus the number of boxes dropped by the discard band.
pub fn fuse_frames_report(window: &[Frame], cfg: &FusionConfig) -> Result<(Frame, usize)> {
    cfg.validate()?;
    let current = window.last().ok_or(Error::EmptyWindow)?;
    if window.len() > cfg.n_history + 1 {
        return Err(Error::WindowTooLong {
            len: window.len(),
            max: cfg.n_history + 1,
        });
    }
    check_monotone(window)?;

    let capacity = window.iter().map(|f| f.detections.len()).sum();
    let mut dense = Vec::with_capacity(capacity);
    for frame in &window[..window.len() - 1] {
        dense.extend(forward_frame(frame, current.timestamp, &current.ego, cfg));
    }
    dense.extend(current.detections.iter().map(|d| Detection {
        weight: Some(d.score),
        lag: 0,
        tally: None,
        ..d.clone()
    }));

    let report = weighted_nms_report(&dense, cfg)?;
    let detections = apply_score_strategy(report.fused, cfg);
    Ok((Frame::new(current.timestamp, current.ego, detections), report.discarded))
}
