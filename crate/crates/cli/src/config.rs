//! Layered run configuration: flags > environment > config file > preset.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use framefusion::synth::SceneSpec;
use framefusion::{FusionConfig, ModelKind, Preset, ScoreStrategy};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Fusion parameters shared by every command that fuses.
#[derive(Debug, Clone, Default, Args)]
pub struct FusionArgs {
    /// Named parameter set (waymo-default, nuscenes, multi-method).
    #[arg(long, env = "FRAMEFUSION_PRESET")]
    pub preset: Option<Preset>,
    /// History frames fused into each output (N).
    #[arg(short = 'n', long = "frames", env = "FRAMEFUSION_FRAMES")]
    pub frames: Option<usize>,
    /// Per-interval weight decay d.
    #[arg(long, env = "FRAMEFUSION_DECAY")]
    pub decay: Option<f64>,
    #[arg(long, env = "FRAMEFUSION_IOU_LOW")]
    pub iou_low: Option<f64>,
    #[arg(long, env = "FRAMEFUSION_IOU_HIGH")]
    pub iou_high: Option<f64>,
    /// Nominal frame interval in seconds.
    #[arg(long, env = "FRAMEFUSION_INTERVAL")]
    pub interval: Option<f64>,
    #[arg(long, env = "FRAMEFUSION_STRATEGY")]
    pub strategy: Option<ScoreStrategy>,
    /// Score factor d_s of the divide strategy.
    #[arg(long, env = "FRAMEFUSION_SCORE_DECAY")]
    pub score_decay: Option<f64>,
    /// History-only outputs below this score are dropped.
    #[arg(long, env = "FRAMEFUSION_SCORE_FLOOR")]
    pub score_floor: Option<f64>,
}

/// Optional overrides of [`FusionConfig`] fields.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialFusion {
    pub n_history: Option<usize>,
    pub weight_decay: Option<f64>,
    pub iou_low: Option<f64>,
    pub iou_high: Option<f64>,
    pub frame_interval: Option<f64>,
    pub score_strategy: Option<ScoreStrategy>,
    pub score_decay_factor: Option<f64>,
    pub history_score_floor: Option<f64>,
}

impl PartialFusion {
    fn apply(&self, cfg: &mut FusionConfig) {
        fn set<T: Copy>(dst: &mut T, src: Option<T>) {
            if let Some(v) = src {
                *dst = v;
            }
        }
        set(&mut cfg.n_history, self.n_history);
        set(&mut cfg.weight_decay, self.weight_decay);
        set(&mut cfg.iou_low, self.iou_low);
        set(&mut cfg.iou_high, self.iou_high);
        set(&mut cfg.frame_interval, self.frame_interval);
        set(&mut cfg.score_strategy, self.score_strategy);
        set(&mut cfg.score_decay_factor, self.score_decay_factor);
        set(&mut cfg.history_score_floor, self.history_score_floor);
    }
}

impl From<&FusionArgs> for PartialFusion {
    fn from(a: &FusionArgs) -> Self {
        Self {
            n_history: a.frames,
            weight_decay: a.decay,
            iou_low: a.iou_low,
            iou_high: a.iou_high,
            frame_interval: a.interval,
            score_strategy: a.strategy,
            score_decay_factor: a.score_decay,
            history_score_floor: a.score_floor,
        }
    }
}

/// Contents of a `--config` TOML file. Every key is optional.
///
/// ```toml
/// preset = "nuscenes"
/// model = "bicycle"
/// l_r = 1.175
/// seed = 7
///
/// [fusion]
/// n_history = 4
/// weight_decay = 0.8
///
/// [scene]            # synth only; same layout as the built-in scenes
/// vehicles = 20
/// ```
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub preset: Option<Preset>,
    pub model: Option<ModelKind>,
    pub l_r: Option<f64>,
    pub seed: Option<u64>,
    pub iou_threshold: Option<f64>,
    #[serde(default)]
    pub fusion: PartialFusion,
    pub scene: Option<SceneSpec>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
    }
}

/// Fully resolved fusion settings, echoed into output metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedFusion {
    pub preset: Preset,
    pub fusion: FusionConfig,
}

pub fn resolve_fusion(args: &FusionArgs, file: &FileConfig) -> Result<ResolvedFusion, CliError> {
    let preset = args.preset.or(file.preset).unwrap_or(Preset::WaymoDefault);
    let mut fusion = preset.config();
    file.fusion.apply(&mut fusion);
    PartialFusion::from(args).apply(&mut fusion);
    fusion.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(ResolvedFusion { preset, fusion })
}

/// Location of the `--config` file shared by all commands.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArg {
    /// TOML file with defaults for any option; flags and environment win.
    #[arg(long, env = "FRAMEFUSION_CONFIG")]
    pub config: Option<PathBuf>,
}

impl ConfigArg {
    pub fn load(&self) -> Result<FileConfig, CliError> {
        FileConfig::load(self.config.as_deref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_flag_over_file_over_preset() {
        let file: FileConfig = toml::from_str(
            r#"
            preset = "nuscenes"
            [fusion]
            weight_decay = 0.5
            iou_low = 0.3
            "#,
        )
        .unwrap();
        let args = FusionArgs { iou_low: Some(0.4), ..Default::default() };
        let r = resolve_fusion(&args, &file).unwrap();
        assert_eq!(r.preset, Preset::Nuscenes);
        assert_eq!(r.fusion.weight_decay, 0.5);
        assert_eq!(r.fusion.iou_low, 0.4);
        assert_eq!(r.fusion.iou_high, 0.7);

        let args = FusionArgs { preset: Some(Preset::MultiMethod), ..Default::default() };
        let r = resolve_fusion(&args, &FileConfig::default()).unwrap();
        assert_eq!(r.fusion, Preset::MultiMethod.config());
    }

    #[test]
    fn invalid_values_are_usage_errors() {
        let args = FusionArgs { decay: Some(1.5), ..Default::default() };
        assert!(matches!(resolve_fusion(&args, &FileConfig::default()), Err(CliError::Usage(_))));
        assert!(toml::from_str::<FileConfig>("bogus = 1").is_err());
    }
}
