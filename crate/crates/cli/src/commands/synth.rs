use std::io::Write;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use framefusion::synth::{corrupt, generate_ground_truth, relabel, SceneSpec};
use framefusion::ModelKind;
use serde::Serialize;

use super::save;
use crate::config::ConfigArg;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenePreset {
    /// 50 vehicles, mostly stationary or straight, a few turning.
    Mixed,
    /// 30 vehicles all turning hard.
    Turning,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Ground-truth stream to write.
    #[arg(long)]
    pub gt: PathBuf,
    /// Simulated detection stream to write.
    #[arg(long)]
    pub det: PathBuf,
    /// Built-in scene, used unless the config file has a `[scene]` table.
    #[arg(long, value_enum, default_value_t = ScenePreset::Mixed)]
    pub scene: ScenePreset,
    /// Motion model whose parameters the detections carry (default: the generator's).
    #[arg(long, env = "FRAMEFUSION_MODEL")]
    pub model: Option<ModelKind>,
    #[arg(long, env = "FRAMEFUSION_SEED")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub vehicles: Option<usize>,
    /// Scene length in seconds.
    #[arg(long)]
    pub duration: Option<f64>,
    #[command(flatten)]
    pub config: ConfigArg,
}

#[derive(Serialize)]
struct Meta<'a> {
    command: &'static str,
    stream: &'static str,
    rng: &'static str,
    seed: u64,
    model: ModelKind,
    scene: &'a SceneSpec,
}

pub fn run(args: &SynthArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let file = args.config.load()?;
    let mut scene = file.scene.clone().unwrap_or_else(|| match args.scene {
        ScenePreset::Mixed => SceneSpec::mixed_traffic(),
        ScenePreset::Turning => SceneSpec::turning_traffic(),
    });
    if let Some(v) = args.vehicles {
        scene.vehicles = v;
    }
    if let Some(d) = args.duration {
        scene.trajectory.duration = d;
    }
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let generator = scene.trajectory.generator;
    let model = args.model.or(file.model).unwrap_or(generator);
    scene.trajectory.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    scene.corruption.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let gt = generate_ground_truth(&scene.trajectory, scene.vehicles, seed)?;
    let labelled = if model == generator { gt.clone() } else { relabel(&gt, model, scene.trajectory.rear_axle)? };
    let det = corrupt(&labelled, &scene.corruption, seed)?;

    let meta = |stream, model| Meta { command: "synth", stream, rng: "chacha8", seed, model, scene: &scene };
    save(&args.gt, &meta("gt", generator), &gt)?;
    save(&args.det, &meta("det", model), &det)?;
    writeln!(
        out,
        "wrote {} frames: {} gt boxes, {} detections ({model} parameters, seed {seed})",
        gt.len(),
        gt.iter().map(|f| f.detections.len()).sum::<usize>(),
        det.iter().map(|f| f.detections.len()).sum::<usize>(),
    )?;
    Ok(())
}
