//! Brute-force weighted NMS used as the reference in tests.

use std::f64::consts::PI;

use framefusion::fusion::{canonical_order, weighted_nms_report, Detection, FusionConfig};
use framefusion::geometry::{bev_iou, Box3D};
use framefusion::motion::{MotionParams, UnicycleParams};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub struct OracleOut {
    pub class: String,
    pub bbox: [f64; 7],
    pub score: f64,
    pub weight: f64,
    pub members: u32,
    pub leader: Box3D,
}

// Straight transcription of the per-class sweep: pick the heaviest remaining
// box, gather its neighbours, average, repeat.
pub fn oracle(dense: &[Detection], cfg: &FusionConfig) -> (Vec<OracleOut>, usize) {
    let mut classes: Vec<&str> = dense.iter().map(|d| d.class.as_str()).collect();
    classes.sort();
    classes.dedup();
    let mut out = Vec::new();
    let mut discarded = 0;
    for class in classes {
        let mut pool: Vec<usize> = (0..dense.len()).filter(|&i| dense[i].class == class).collect();
        while !pool.is_empty() {
            let mut top = pool[0];
            for &i in &pool {
                let (wi, wt) = (dense[i].weight.unwrap(), dense[top].weight.unwrap());
                if wi > wt || (wi == wt && (dense[i].score > dense[top].score || (dense[i].score == dense[top].score && i < top))) {
                    top = i;
                }
            }
            let mut cluster = Vec::new();
            let mut rest = Vec::new();
            for &i in &pool {
                let iou = if i == top { 1.0 } else { bev_iou(&dense[top].bbox, &dense[i].bbox) };
                if i == top || iou >= cfg.iou_high {
                    cluster.push(i);
                } else if iou >= cfg.iou_low {
                    discarded += 1;
                } else {
                    rest.push(i);
                }
            }
            pool = rest;

            let ws: Vec<f64> = cluster.iter().map(|&i| dense[i].weight.unwrap()).collect();
            let sum: f64 = ws.iter().sum();
            let norm: Vec<f64> = ws.iter().map(|w| if sum > 0.0 { w / sum } else { 1.0 / ws.len() as f64 }).collect();
            let ref_yaw = dense[top].bbox.yaw();
            let mut bbox = [0.0; 7];
            let (mut score, mut weight) = (0.0, 0.0);
            for (k, &i) in cluster.iter().enumerate() {
                let a = dense[i].bbox.to_array();
                for j in 0..6 {
                    bbox[j] += norm[k] * a[j];
                }
                let d = a[6] - ref_yaw;
                bbox[6] += norm[k] * d.sin().atan2(d.cos());
                score += norm[k] * dense[i].score;
                weight += norm[k] * ws[k];
            }
            let y = ref_yaw + bbox[6];
            bbox[6] = y.sin().atan2(y.cos());
            out.push(OracleOut {
                class: class.to_string(),
                bbox,
                score,
                weight,
                members: cluster.len() as u32,
                leader: dense[top].bbox,
            });
        }
    }
    (out, discarded)
}

pub fn random_dense(rng: &mut ChaCha8Rng, n: usize, classes: &[&str]) -> Vec<Detection> {
    (0..n)
        .map(|_| {
            let b = Box3D::new(
                [rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0), rng.random_range(-0.5..0.5)],
                [rng.random_range(1.0..2.5), rng.random_range(2.0..5.0), rng.random_range(1.0..2.0)],
                rng.random_range(-PI..PI),
            )
            .unwrap();
            let score = rng.random_range(0.05..1.0);
            let mut d = Detection::new(
                b,
                score,
                classes[rng.random_range(0..classes.len())],
                MotionParams::Unicycle(UnicycleParams {
                    speed: rng.random_range(0.0..15.0),
                    yaw_rate: rng.random_range(-0.5..0.5),
                }),
            )
            .unwrap();
            d.weight = Some(score * 0.8f64.powi(rng.random_range(0..5)));
            d
        })
        .collect()
}

/// Compares `weighted_nms_report` with the oracle box-for-box after a
/// canonical sort, to within `tol`.
pub fn check_against_oracle(dense: &[Detection], cfg: &FusionConfig, tol: f64) -> Result<(), String> {
    let report = weighted_nms_report(dense, cfg).map_err(|e| e.to_string())?;
    let (mut expect, discarded) = oracle(dense, cfg);
    let mut got = report.fused;
    if report.discarded != discarded {
        return Err(format!("discarded {} vs {discarded}", report.discarded));
    }
    if got.len() != expect.len() {
        return Err(format!("{} outputs vs {}", got.len(), expect.len()));
    }
    got.sort_by(canonical_order);
    expect.sort_by(|a, b| {
        a.class.cmp(&b.class).then(a.bbox[0].total_cmp(&b.bbox[0])).then(a.bbox[1].total_cmp(&b.bbox[1]))
    });
    for (g, e) in got.iter().zip(&expect) {
        if g.class != e.class {
            return Err(format!("class {} vs {}", g.class, e.class));
        }
        let ga = g.bbox.to_array();
        for j in 0..6 {
            if (ga[j] - e.bbox[j]).abs() >= tol {
                return Err(format!("field {j}: {} vs {}", ga[j], e.bbox[j]));
            }
        }
        let dy = ga[6] - e.bbox[6];
        if dy.sin().atan2(dy.cos()).abs() >= tol {
            return Err(format!("yaw {} vs {}", ga[6], e.bbox[6]));
        }
        if (g.score - e.score).abs() >= tol || (g.weight.unwrap_or(f64::NAN) - e.weight).abs() >= tol {
            return Err(format!("score/weight ({}, {:?}) vs ({}, {})", g.score, g.weight, e.score, e.weight));
        }
        if g.tally.map(|t| t.members) != Some(e.members) {
            return Err(format!("members {:?} vs {}", g.tally, e.members));
        }
    }
    Ok(())
}
