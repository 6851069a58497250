//! Multi-frame fusion of 3D vehicle detections.
//!
//! History boxes are moved to the current time with a vehicle motion model
//! (constant velocity, unicycle or kinematic bicycle), then merged with the
//! current detections by weighted NMS under confidence decay.

pub mod error;
pub mod eval;
pub mod fusion;
pub mod geometry;
pub mod motion;
pub mod record;
pub mod synth;

pub use error::{Error, Result};
pub use fusion::{fuse_frames, fuse_sequence, weighted_nms, Detection, Frame, FusionConfig, Preset, ScoreStrategy};
pub use geometry::{bev_iou, normalize_angle, transform_box, Box3D, EgoPose, Pose};
pub use motion::{
    estimate_params_from_track, forward, forward_box, BicycleParams, CvParams, ModelKind, MotionParams,
    UnicycleParams,
};
