use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::Context;
use clap::Args;
use framefusion::fusion::SlidingFuser;
use framefusion::record::{open_frames, write_frame, write_meta};
use serde::Serialize;

use super::create;
use crate::config::{resolve_fusion, ConfigArg, FusionArgs, ResolvedFusion};
use crate::CliError;

#[derive(Debug, Clone, Args)]
pub struct FuseArgs {
    /// Detection stream (JSON Lines).
    #[arg(long, env = "FRAMEFUSION_INPUT")]
    pub input: PathBuf,
    /// Fused stream to write.
    #[arg(long, env = "FRAMEFUSION_OUTPUT")]
    pub output: PathBuf,
    #[command(flatten)]
    pub fusion: FusionArgs,
    #[command(flatten)]
    pub config: ConfigArg,
}

/// Per-frame fusion latency and box counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuseSummary {
    pub frames: usize,
    pub boxes_in: usize,
    pub boxes_out: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
}

impl FuseSummary {
    fn new(mut latencies: Vec<f64>, boxes_in: usize, boxes_out: usize) -> Self {
        latencies.sort_by(f64::total_cmp);
        let n = latencies.len();
        // nearest-rank percentile
        let rank = |q: f64| if n == 0 { 0.0 } else { latencies[((q * n as f64).ceil() as usize).clamp(1, n) - 1] };
        Self {
            frames: n,
            boxes_in,
            boxes_out,
            mean_ms: if n == 0 { 0.0 } else { latencies.iter().sum::<f64>() / n as f64 },
            median_ms: rank(0.5),
            p99_ms: rank(0.99),
            max_ms: latencies.last().copied().unwrap_or(0.0),
        }
    }
}

#[derive(Serialize)]
struct Meta<'a> {
    command: &'static str,
    config: &'a ResolvedFusion,
    source: Option<&'a serde_json::Value>,
}

pub fn run(args: &FuseArgs, out: &mut dyn Write) -> Result<FuseSummary, CliError> {
    let file = args.config.load()?;
    let resolved = resolve_fusion(&args.fusion, &file)?;
    let mut reader = open_frames(&args.input)
        .with_context(|| format!("opening {}", args.input.display()))
        .map_err(CliError::Data)?;
    let mut writer = create(&args.output)?;
    write_meta(&mut writer, &Meta { command: "fuse", config: &resolved, source: reader.meta() })?;

    let mut fuser = SlidingFuser::new(resolved.fusion)?;
    let mut latencies = Vec::new();
    let (mut boxes_in, mut boxes_out) = (0, 0);
    for frame in reader.by_ref() {
        let frame = frame.with_context(|| format!("reading {}", args.input.display())).map_err(CliError::Data)?;
        boxes_in += frame.detections.len();
        let start = Instant::now();
        let fused = fuser.push(frame)?;
        latencies.push(start.elapsed().as_secs_f64() * 1e3);
        boxes_out += fused.detections.len();
        write_frame(&mut writer, &fused)?;
    }
    writer.flush()?;

    let summary = FuseSummary::new(latencies, boxes_in, boxes_out);
    writeln!(
        out,
        "fused {} frames ({} -> {} boxes); latency per frame: mean {:.3} ms, p99 {:.3} ms",
        summary.frames, summary.boxes_in, summary.boxes_out, summary.mean_ms, summary.p99_ms
    )?;
    Ok(summary)
}
