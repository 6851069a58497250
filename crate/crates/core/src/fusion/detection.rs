use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::{RawDetection, RawFrame};
use crate::geometry::{Box3D, EgoPose};
use crate::motion::MotionParams;

/// Bookkeeping attached to a weighted-NMS output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FusionTally {
    /// Boxes averaged into this output.
    pub members: u32,
    /// Of those, boxes that came from the current frame.
    pub current_members: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDetection", into = "RawDetection")]
pub struct Detection {
    pub bbox: Box3D,
    pub score: f64,
    pub class: String,
    pub motion: MotionParams,
    /// Decayed confidence used as the voting weight; set during fusion.
    pub weight: Option<f64>,
    /// Frames between the source frame and the fusion target (0 = current).
    pub lag: u32,
    pub track_id: Option<u64>,
    pub tally: Option<FusionTally>,
}

impl Detection {
    pub fn new(bbox: Box3D, score: f64, class: impl Into<String>, motion: MotionParams) -> Result<Self> {
        let det = Self {
            bbox,
            score,
            class: class.into(),
            motion,
            weight: None,
            lag: 0,
            track_id: None,
            tally: None,
        };
        det.validate()?;
        Ok(det)
    }

    pub fn with_track_id(mut self, id: u64) -> Self {
        self.track_id = Some(id);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.score) {
            return Err(Error::invalid("score", format!("{} outside [0, 1]", self.score)));
        }
        if let Some(w) = self.weight {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::invalid("weight", format!("{w} outside [0, 1]")));
            }
        }
        self.motion.validate()
    }

    /// Fused output with no current-frame member.
    pub fn history_only(&self) -> bool {
        self.tally.is_some_and(|t| t.current_members == 0)
    }
}

/// Timestamped detections in the sensor frame given by `ego`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFrame", into = "RawFrame")]
pub struct Frame {
    pub timestamp: f64,
    pub ego: EgoPose,
    pub detections: Vec<Detection>,
}

impl Frame {
    pub fn new(timestamp: f64, ego: EgoPose, detections: Vec<Detection>) -> Self {
        Self {
            timestamp,
            ego,
            detections,
        }
    }

    pub fn empty(timestamp: f64, ego: EgoPose) -> Self {
        Self::new(timestamp, ego, Vec::new())
    }
}

/// Errors unless timestamps strictly increase.
pub fn check_monotone(frames: &[Frame]) -> Result<()> {
    for w in frames.windows(2) {
        if !(w[1].timestamp > w[0].timestamp) {
            return Err(Error::NonMonotoneTimestamps {
                prev: w[0].timestamp,
                next: w[1].timestamp,
            });
        }
    }
    Ok(())
}
