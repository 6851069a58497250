use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How scores of history-only fused boxes are reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreStrategy {
    /// Score becomes the fused voting weight.
    Decay,
    /// Score becomes `d_s * s / max(N - n_f, 1)`.
    Divide,
}

impl FromStr for ScoreStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "decay" => Ok(ScoreStrategy::Decay),
            "divide" => Ok(ScoreStrategy::Divide),
            other => Err(Error::invalid("strategy", format!("unknown strategy `{other}`"))),
        }
    }
}

impl fmt::Display for ScoreStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreStrategy::Decay => "decay",
            ScoreStrategy::Divide => "divide",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FusionConfig {
    /// History frames fused into each output (`N`).
    pub n_history: usize,
    /// Per-interval weight decay `d`.
    pub weight_decay: f64,
    pub iou_low: f64,
    pub iou_high: f64,
    /// Nominal frame spacing `τ` in seconds.
    pub frame_interval: f64,
    pub score_strategy: ScoreStrategy,
    /// `d_s` of the divide strategy.
    pub score_decay_factor: f64,
    /// History-only outputs scoring below this after the strategy are dropped.
    pub history_score_floor: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Preset::WaymoDefault.config()
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64, name: &'static str| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("{v} outside [0, 1]")))
            }
        };
        if !(self.weight_decay > 0.0 && self.weight_decay <= 1.0) {
            return Err(Error::invalid("weight_decay", format!("{} outside (0, 1]", self.weight_decay)));
        }
        unit(self.iou_low, "iou_low")?;
        unit(self.iou_high, "iou_high")?;
        if self.iou_high < self.iou_low {
            return Err(Error::invalid("iou_high", "must be at least iou_low"));
        }
        if !(self.frame_interval > 0.0) || !self.frame_interval.is_finite() {
            return Err(Error::invalid("frame_interval", format!("{} is not positive", self.frame_interval)));
        }
        if !(self.score_decay_factor > 0.0 && self.score_decay_factor <= 1.0) {
            return Err(Error::invalid(
                "score_decay_factor",
                format!("{} outside (0, 1]", self.score_decay_factor),
            ));
        }
        unit(self.history_score_floor, "history_score_floor")
    }

    /// Frame lag for a time difference: 0 only for the target frame itself.
    pub fn lag_frames(&self, dt: f64) -> u32 {
        if dt <= 0.0 {
            0
        } else {
            ((dt / self.frame_interval).round() as u32).max(1)
        }
    }
}

/// Named parameter sets matching published experiment configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    WaymoDefault,
    Nuscenes,
    MultiMethod,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::WaymoDefault, Preset::Nuscenes, Preset::MultiMethod];

    pub fn name(self) -> &'static str {
        match self {
            Preset::WaymoDefault => "waymo-default",
            Preset::Nuscenes => "nuscenes",
            Preset::MultiMethod => "multi-method",
        }
    }

    pub fn config(self) -> FusionConfig {
        let (weight_decay, iou_low, iou_high, score_strategy) = match self {
            Preset::WaymoDefault => (0.8, 0.7, 0.7, ScoreStrategy::Decay),
            Preset::Nuscenes => (0.6, 0.2, 0.7, ScoreStrategy::Decay),
            Preset::MultiMethod => (0.8, 0.9, 0.9, ScoreStrategy::Divide),
        };
        FusionConfig {
            n_history: 4,
            weight_decay,
            iou_low,
            iou_high,
            frame_interval: 0.1,
            score_strategy,
            score_decay_factor: 0.6,
            history_score_floor: 0.01,
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::invalid("preset", format!("unknown preset `{s}`")))
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
