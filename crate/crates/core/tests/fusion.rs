use framefusion::fusion::{
    apply_score_strategy, fuse_frames, fuse_sequence, weighted_nms, weighted_nms_report, Detection,
    FusionConfig, Frame, Preset,
};
use framefusion::geometry::{bev_iou, Box3D, EgoPose};
use framefusion::motion::{CvParams, ModelKind, MotionParams, UnicycleParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn car(x: f64, y: f64, yaw: f64, score: f64) -> Detection {
    let b = Box3D::new([x, y, 0.0], [2.0, 4.0, 1.5], yaw).unwrap();
    Detection::new(b, score, "car", MotionParams::stationary(ModelKind::Cv, 1.0)).unwrap()
}

#[allow(dead_code)]
mod support {
    pub mod oracle;
}
use support::oracle::{check_against_oracle, oracle, random_dense};

fn assert_matches_oracle(dense: &[Detection], cfg: &FusionConfig) {
    if let Err(e) = check_against_oracle(dense, cfg, 1e-9) {
        panic!("{e}");
    }
}

fn weighted(mut d: Detection, w: f64) -> Detection {
    d.weight = Some(w);
    d
}


#[test]
fn coincident_pair_fuses_to_weighted_score() {
    let dense = [weighted(car(0.0, 0.0, 0.0, 0.8), 0.8), weighted(car(0.0, 0.0, 0.0, 0.4), 0.4)];
    let out = weighted_nms(&dense, &FusionConfig::default()).unwrap();
    assert_eq!(out.len(), 1);
    assert!((out[0].score - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(out[0].bbox, dense[0].bbox);
}

#[test]
fn band_discards_lower_box() {
    let cfg = Preset::Nuscenes.config();
    // 4 m long boxes shifted 1.6 m along their length: IoU = 2.4 / 5.6
    let dense = [weighted(car(0.0, 0.0, 0.0, 0.9), 0.9), weighted(car(1.6, 0.0, 0.0, 0.6), 0.6)];
    let iou = bev_iou(&dense[0].bbox, &dense[1].bbox);
    assert!((iou - 2.4 / 5.6).abs() < 1e-12);
    let report = weighted_nms_report(&dense, &cfg).unwrap();
    assert_eq!(report.discarded, 1);
    assert_eq!(report.fused.len(), 1);
    assert_eq!(report.fused[0].bbox, dense[0].bbox);
    assert_eq!(report.fused[0].score, 0.9);
}

#[test]
fn threshold_boundary_is_fused() {
    let dense = [weighted(car(0.0, 0.0, 0.0, 0.9), 0.9), weighted(car(1.6, 0.0, 0.0, 0.6), 0.6)];
    let iou = bev_iou(&dense[0].bbox, &dense[1].bbox);
    let cfg = FusionConfig { iou_low: 0.2, iou_high: iou, ..Default::default() };
    let report = weighted_nms_report(&dense, &cfg).unwrap();
    assert_eq!(report.discarded, 0);
    assert_eq!(report.fused[0].tally.unwrap().members, 2);
}

#[test]
fn fifty_boxes_three_classes_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for preset in Preset::ALL {
        for _ in 0..20 {
            let dense = random_dense(&mut rng, 50, &["car", "truck", "bus"]);
            assert_matches_oracle(&dense, &preset.config());
        }
    }
}

#[test]
fn leaders_do_not_overlap_above_low_threshold() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = Preset::Nuscenes.config();
    for _ in 0..20 {
        let dense = random_dense(&mut rng, 80, &["car", "truck"]);
        let (out, _) = oracle(&dense, &cfg);
        for (i, a) in out.iter().enumerate() {
            for b in &out[i + 1..] {
                if a.class == b.class {
                    assert!(bev_iou(&a.leader, &b.leader) < cfg.iou_low);
                }
            }
        }
    }
}

#[test]
fn identical_copies_are_idempotent() {
    let base = car(3.0, -2.0, 2.9, 0.7);
    let ws = [0.7, 0.5, 0.3, 0.1];
    let dense: Vec<_> = ws.iter().map(|&w| weighted(Detection { score: w + 0.05, ..base.clone() }, w)).collect();
    let out = weighted_nms(&dense, &FusionConfig::default()).unwrap();
    assert_eq!(out.len(), 1);
    for (a, b) in out[0].bbox.to_array().iter().zip(base.bbox.to_array()) {
        assert!((a - b).abs() < 1e-12);
    }
    let expect: f64 = ws.iter().map(|w| w * (w + 0.05)).sum::<f64>() / ws.iter().sum::<f64>();
    assert!((out[0].score - expect).abs() < 1e-12);
}

#[test]
fn yaw_fuses_across_the_seam() {
    let a = weighted(car(0.0, 0.0, PI - 0.02, 0.9), 0.5);
    let b = weighted(car(0.0, 0.0, -PI + 0.02, 0.9), 0.5);
    let out = weighted_nms(&[a, b], &FusionConfig::default()).unwrap();
    assert_eq!(out.len(), 1);
    assert!((out[0].bbox.yaw().abs() - PI).abs() < 1e-12);
}

fn static_frame(t: f64, dets: Vec<Detection>) -> Frame {
    Frame::new(t, EgoPose::identity(), dets)
}

#[test]
fn single_frame_window_is_plain_nms() {
    let cfg = FusionConfig::default();
    let dets = vec![car(0.0, 0.0, 0.0, 0.9), car(0.2, 0.0, 0.0, 0.5), car(10.0, 0.0, 0.0, 0.4)];
    let fused = fuse_frames(&[static_frame(0.0, dets.clone())], &cfg).unwrap();
    let dense: Vec<_> = dets.iter().map(|d| weighted(d.clone(), d.score)).collect();
    assert_eq!(fused.detections, weighted_nms(&dense, &cfg).unwrap());

    let seq: Vec<_> = fuse_sequence(vec![static_frame(0.0, dets)], &cfg).unwrap().collect::<Result<_, _>>().unwrap();
    assert_eq!(seq, vec![fused]);
}

#[test]
fn static_copies_keep_poses() {
    let cfg = FusionConfig::default();
    let dets = vec![car(0.0, 0.0, 0.3, 0.9), car(12.0, 5.0, -1.0, 0.6), car(-7.0, 3.0, 3.1, 0.3)];
    let window: Vec<_> = (0..5).map(|i| static_frame(i as f64 * 0.1, dets.clone())).collect();
    let fused = fuse_frames(&window, &cfg).unwrap();
    assert_eq!(fused.detections.len(), dets.len());
    for d in &dets {
        let f = fused.detections.iter().find(|f| (f.bbox.center()[0] - d.bbox.center()[0]).abs() < 1e-6).unwrap();
        for (a, b) in f.bbox.to_array().iter().zip(d.bbox.to_array()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(f.tally.unwrap().members, 5);
    }
}

#[test]
fn history_only_box_is_extrapolated_and_decayed() {
    let cfg = FusionConfig::default();
    let mover = |x: f64| {
        let mut d = car(x, 0.0, 0.0, 0.8);
        d.motion = MotionParams::Cv(CvParams { vx: 10.0, vy: 0.0 });
        d
    };
    let mut window: Vec<_> = (0..4).map(|i| static_frame(i as f64 * 0.1, vec![mover(i as f64)])).collect();
    window.push(static_frame(0.4, Vec::new()));
    let fused = fuse_frames(&window, &cfg).unwrap();
    assert_eq!(fused.detections.len(), 1);
    let d = &fused.detections[0];
    assert!(d.history_only());
    assert!((d.bbox.center()[0] - 4.0).abs() < 1e-9);
    assert_eq!(d.lag, 1);
    assert!(d.score < 0.8);
    assert_eq!(Some(d.score), d.weight);
}

#[test]
fn current_box_pulled_to_history_consensus() {
    let cfg = FusionConfig::default();
    let mut window: Vec<_> = (0..4).map(|i| static_frame(i as f64 * 0.1, vec![car(0.0, 0.0, 0.0, 0.9)])).collect();
    window.push(static_frame(0.4, vec![car(0.5, 0.0, 0.0, 0.9)]));
    let fused = fuse_frames(&window, &cfg).unwrap();
    assert_eq!(fused.detections.len(), 1);
    let x = fused.detections[0].bbox.center()[0];
    let w: Vec<f64> = (0..5).map(|lag| 0.9 * 0.8f64.powi(lag)).collect();
    let expect = 0.5 * w[0] / w.iter().sum::<f64>();
    assert!((x - expect).abs() < 1e-9);
    assert!(x < 0.5 && x > 0.0);
}

fn random_stream(seed: u64, len: usize) -> Vec<Frame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<(f64, f64, f64, f64, f64)> = (0..12)
        .map(|_| {
            (
                rng.random_range(-40.0..40.0),
                rng.random_range(-40.0..40.0),
                rng.random_range(-PI..PI),
                rng.random_range(0.0..12.0),
                rng.random_range(-0.3..0.3),
            )
        })
        .collect();
    (0..len)
        .map(|k| {
            let t = k as f64 * 0.1;
            let ego = EgoPose::new(2.0 * t, 0.1 * t, 0.02 * t).unwrap();
            let seen: Vec<bool> = starts.iter().map(|_| rng.random_bool(0.85)).collect();
            let dets = starts
                .iter()
                .zip(seen)
                .filter(|(_, s)| *s)
                .map(|(s, _)| s)
                .map(|&(x, y, yaw, v, w)| {
                    let params = MotionParams::Unicycle(UnicycleParams { speed: v, yaw_rate: w });
                    let b0 = Box3D::new([x, y, 0.0], [2.1, 4.7, 1.7], yaw).unwrap();
                    let b = framefusion::motion::forward_box(&b0, &params, t);
                    let b = framefusion::geometry::transform_box(&b, &EgoPose::identity(), &ego);
                    let jitter = Box3D::new(
                        [b.center()[0] + rng.random_range(-0.3..0.3), b.center()[1] + rng.random_range(-0.3..0.3), 0.0],
                        b.size(),
                        b.yaw() + rng.random_range(-0.05..0.05),
                    )
                    .unwrap();
                    Detection::new(jitter, rng.random_range(0.2..1.0), "car", params).unwrap()
                })
                .collect();
            Frame::new(t, ego, dets)
        })
        .collect()
}

#[test]
fn sequence_matches_independent_windows() {
    let frames = random_stream(3, 200);
    for cfg in [FusionConfig::default(), Preset::MultiMethod.config()] {
        let streamed: Vec<Frame> = fuse_sequence(frames.clone(), &cfg).unwrap().collect::<Result<_, _>>().unwrap();
        assert_eq!(streamed.len(), frames.len());
        for (k, out) in streamed.iter().enumerate() {
            let lo = k.saturating_sub(cfg.n_history);
            assert_eq!(out, &fuse_frames(&frames[lo..=k], &cfg).unwrap());
        }
    }
}

fn arb_dense() -> impl Strategy<Value = Vec<Detection>> {
    let one = (-6.0f64..6.0, -6.0f64..6.0, -PI..PI, 0.05f64..1.0, 0u32..5, 0usize..2, 0u32..2).prop_map(
        |(x, y, yaw, s, lag, class, current)| {
            let b = Box3D::new([x, y, 0.0], [2.0, 4.5, 1.6], yaw).unwrap();
            let mut d = Detection::new(b, s, ["car", "truck"][class], MotionParams::stationary(ModelKind::Cv, 1.0)).unwrap();
            d.lag = if current == 0 { 0 } else { lag + 1 };
            d.weight = Some(s * 0.8f64.powi(d.lag as i32));
            d
        },
    );
    prop::collection::vec(one, 0..100)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracle_equivalence(dense in arb_dense(), preset in 0usize..3) {
        assert_matches_oracle(&dense, &Preset::ALL[preset].config());
    }

    #[test]
    fn conservation(dense in arb_dense(), low in 0.0f64..1.0, span in 0.0f64..1.0) {
        let cfg = FusionConfig { iou_low: low, iou_high: low + span * (1.0 - low), ..Default::default() };
        let report = weighted_nms_report(&dense, &cfg).unwrap();
        let fused: u32 = report.fused.iter().map(|d| d.tally.unwrap().members).sum();
        prop_assert_eq!(fused as usize + report.discarded, dense.len());
    }

    #[test]
    fn score_strategy_never_raises(dense in arb_dense(), preset in 0usize..3) {
        let cfg = Preset::ALL[preset].config();
        let fused = weighted_nms(&dense, &cfg).unwrap();
        let after = apply_score_strategy(fused.clone(), &cfg);
        let mut it = fused.iter();
        for d in &after {
            let src = it.find(|f| f.bbox == d.bbox).unwrap();
            prop_assert!(d.score <= src.score);
            if !d.history_only() {
                prop_assert_eq!(d.score, src.score);
            }
        }
    }

    #[test]
    fn weight_decreases_with_lag(s in 0.01f64..1.0, t in 0.0f64..1.0, dt in 0.001f64..1.0, d in 0.1f64..0.999, k in 0.1f64..1.0) {
        let cfg = FusionConfig { weight_decay: d, ..Default::default() };
        let w = framefusion::fusion::decayed_weight(s, t, &cfg);
        prop_assert!(framefusion::fusion::decayed_weight(s, t + dt, &cfg) < w);
        prop_assert!((framefusion::fusion::decayed_weight(k * s, t, &cfg) - k * w).abs() < 1e-12);
    }
}
