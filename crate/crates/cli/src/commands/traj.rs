use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use framefusion::eval::{prediction_errors, PredictionError};
use framefusion::motion::{forward, BicycleParams, TimedPose, UnicycleParams};
use framefusion::{ModelKind, MotionParams, Pose};

use super::create;
use super::inverse::DEFAULT_REAR_AXLE;
use crate::CliError;

#[derive(Debug, Clone, Args)]
pub struct TrajArgs {
    /// Models to compare.
    #[arg(long, value_delimiter = ',', default_values_t = ModelKind::ALL)]
    pub models: Vec<ModelKind>,
    /// Model generating the ground-truth track.
    #[arg(long, default_value_t = ModelKind::Bicycle)]
    pub generator: ModelKind,
    /// Speed in m/s.
    #[arg(long, default_value_t = 10.0)]
    pub speed: f64,
    /// Turning radius of the center path in meters.
    #[arg(long, default_value_t = 20.0)]
    pub radius: f64,
    #[arg(long = "l-r", env = "FRAMEFUSION_L_R", default_value_t = DEFAULT_REAR_AXLE)]
    pub l_r: f64,
    /// Longest prediction horizon in seconds.
    #[arg(long, default_value_t = 0.4)]
    pub horizon: f64,
    #[arg(long, env = "FRAMEFUSION_INTERVAL", default_value_t = 0.1)]
    pub interval: f64,
    /// CSV file to write; stdout when absent.
    #[arg(long, env = "FRAMEFUSION_OUTPUT")]
    pub output: Option<PathBuf>,
}

/// GT track on a circle of the requested radius.
pub fn turning_track(args: &TrajArgs, frames: usize) -> Result<Vec<TimedPose>, CliError> {
    let truth = match args.generator {
        ModelKind::Unicycle => MotionParams::Unicycle(UnicycleParams { speed: args.speed, yaw_rate: args.speed / args.radius }),
        ModelKind::Bicycle => {
            if args.radius < args.l_r {
                return Err(CliError::Usage("radius must be at least l_r".into()));
            }
            MotionParams::Bicycle(BicycleParams { speed: args.speed, slip: (args.l_r / args.radius).asin(), rear_axle: args.l_r })
        }
        ModelKind::Cv => return Err(CliError::Usage("a constant-velocity track cannot turn".into())),
    };
    let p0 = Pose::new(0.0, 0.0, 0.0)?;
    Ok((0..frames).map(|k| {
        let t = k as f64 * args.interval;
        TimedPose::new(t, forward(&p0, &truth, t))
    }).collect())
}

pub fn compare(args: &TrajArgs) -> Result<Vec<PredictionError>, CliError> {
    let valid = |v: f64| v > 0.0 && v.is_finite();
    if !(valid(args.interval) && valid(args.horizon) && valid(args.speed) && valid(args.radius) && valid(args.l_r)) {
        return Err(CliError::Usage("speed, radius, l_r, horizon and interval must be positive".into()));
    }
    let steps = (args.horizon / args.interval).round().max(1.0) as usize;
    let track = turning_track(args, steps + 2)?;
    let mut rows = Vec::new();
    for &m in &args.models {
        rows.extend(prediction_errors(&track, 1, steps, m, args.l_r)?);
    }
    Ok(rows)
}

pub fn run(args: &TrajArgs, out: &mut dyn Write) -> Result<Vec<PredictionError>, CliError> {
    let rows = compare(args)?;
    let sink: Box<dyn Write + '_> = match &args.output {
        Some(path) => Box::new(create(path)?),
        None => Box::new(&mut *out),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["model", "step", "horizon_s", "position_error_m", "heading_error_rad"])?;
    for r in &rows {
        w.write_record([r.model.name().to_string(), r.steps.to_string(), r.horizon.to_string(), r.position.to_string(), r.heading.to_string()])?;
    }
    w.flush()?;
    Ok(rows)
}
