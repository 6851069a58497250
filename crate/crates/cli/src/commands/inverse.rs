use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use framefusion::synth::relabel;
use framefusion::ModelKind;
use serde::Serialize;

use super::{load, save};
use crate::config::ConfigArg;
use crate::CliError;

#[derive(Debug, Clone, Args)]
pub struct InverseArgs {
    /// Stream whose detections all carry a `track_id`.
    #[arg(long, env = "FRAMEFUSION_INPUT")]
    pub input: PathBuf,
    #[arg(long, env = "FRAMEFUSION_OUTPUT")]
    pub output: PathBuf,
    #[arg(long, env = "FRAMEFUSION_MODEL")]
    pub model: Option<ModelKind>,
    /// Rear-axle to center distance for the bicycle model, in meters.
    #[arg(long = "l-r", env = "FRAMEFUSION_L_R")]
    pub l_r: Option<f64>,
    #[command(flatten)]
    pub config: ConfigArg,
}

#[derive(Serialize)]
struct Meta<'a> {
    command: &'static str,
    model: ModelKind,
    l_r: f64,
    source: Option<&'a serde_json::Value>,
}

pub const DEFAULT_REAR_AXLE: f64 = 4.7 / 4.0;

pub fn run(args: &InverseArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let file = args.config.load()?;
    let model = args.model.or(file.model).unwrap_or(ModelKind::Bicycle);
    let l_r = args.l_r.or(file.l_r).unwrap_or(DEFAULT_REAR_AXLE);
    if !(l_r > 0.0 && l_r.is_finite()) {
        return Err(CliError::Usage(format!("--l-r must be positive, got {l_r}")));
    }
    let (source, frames) = load(&args.input)?;
    let labelled = relabel(&frames, model, l_r)?;
    save(&args.output, &Meta { command: "inverse", model, l_r, source: source.as_ref() }, &labelled)?;
    writeln!(out, "attached {model} parameters to {} frames", labelled.len())?;
    Ok(())
}
