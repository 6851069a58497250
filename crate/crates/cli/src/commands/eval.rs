use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use framefusion::eval::{evaluate_enhancement, EnhancementReport, Metrics};
use serde::Serialize;

use super::{create, load};
use crate::config::ConfigArg;
use crate::CliError;

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Ground truth with track ids and motion parameters.
    #[arg(long)]
    pub gt: PathBuf,
    /// Detections before fusion.
    #[arg(long)]
    pub raw: PathBuf,
    /// Detections after fusion.
    #[arg(long)]
    pub fused: PathBuf,
    /// BEV IoU a detection must exceed to match a GT box.
    #[arg(long)]
    pub iou: Option<f64>,
    /// Also write the CSV rows to this file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArg,
}

#[derive(Serialize)]
struct Row<'a> {
    subset: &'a str,
    metric: &'a str,
    raw: Option<f64>,
    fused: Option<f64>,
    delta: Option<f64>,
}

fn rows(report: &EnhancementReport) -> Vec<Row<'_>> {
    let mut out = Vec::new();
    for r in &report.rows {
        for (metric, pick) in [("ap", (|m: Metrics| m.ap) as fn(Metrics) -> f64), ("aph", |m: Metrics| m.aph)] {
            let raw = r.raw.map(pick);
            let fused = r.fused.map(pick);
            out.push(Row { subset: r.subset.name(), metric, raw, fused, delta: raw.zip(fused).map(|(a, b)| b - a) });
        }
    }
    out
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

pub fn run(args: &EvalArgs, out: &mut dyn Write) -> Result<EnhancementReport, CliError> {
    let file = args.config.load()?;
    let iou = args.iou.or(file.iou_threshold).unwrap_or(0.5);
    if !(0.0..1.0).contains(&iou) {
        return Err(CliError::Usage(format!("--iou must be in [0, 1), got {iou}")));
    }
    let (_, gt) = load(&args.gt)?;
    let (_, raw) = load(&args.raw)?;
    let (_, fused) = load(&args.fused)?;
    let report = evaluate_enhancement(&gt, &raw, &fused, iou)?;

    writeln!(out, "# BEV IoU threshold {iou}; APH weights true positives by 1 - |heading error| / pi")?;
    writeln!(out, "# (not comparable to Waymo APH). Subset rows keep only detections overlapping a")?;
    writeln!(out, "# subset GT box above the threshold; other detections are not counted.")?;
    writeln!(out, "{:<15} {:>8} {:>7} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}", "subset", "vehicles", "gt", "ap_raw", "ap_fused", "ap_delta", "aph_raw", "aph_fus", "aph_dlt")?;
    for r in &report.rows {
        writeln!(
            out,
            "{:<15} {:>8} {:>7} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
            r.subset.name(),
            r.vehicles,
            r.n_gt,
            cell(r.raw.map(|m| m.ap)),
            cell(r.fused.map(|m| m.ap)),
            cell(r.delta_ap()),
            cell(r.raw.map(|m| m.aph)),
            cell(r.fused.map(|m| m.aph)),
            cell(r.delta_aph()),
        )?;
    }
    writeln!(out)?;

    let table = rows(&report);
    let mut csv_out = csv::Writer::from_writer(Vec::new());
    for row in &table {
        csv_out.serialize(row)?;
    }
    let bytes = csv_out.into_inner().map_err(|e| CliError::Data(anyhow::anyhow!("{e}")))?;
    out.write_all(&bytes)?;
    if let Some(path) = &args.csv {
        let mut w = create(path)?;
        w.write_all(&bytes)?;
        w.flush()?;
    }
    Ok(report)
}
