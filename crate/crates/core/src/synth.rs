//! Synthetic scenes: ground-truth trajectories drawn from the motion models
//! and a seeded corruption model that turns them into noisy detections.
//!
//! Every vehicle draws from its own ChaCha8 stream (`seed`, stream = track
//! id), so a scene is reproducible bit for bit and the noise a vehicle sees
//! does not depend on how many other vehicles exist.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{Detection, Frame};
use crate::geometry::{Box3D, EgoPose, Point2, Pose, RigidTransform};
use crate::motion::{
    estimate_params_from_track, forward, BicycleParams, CvParams, ModelKind, MotionParams, TimedPose,
    UnicycleParams,
};

// Stream ids at or above this are reserved for non-vehicle draws.
const FALSE_POSITIVE_STREAM: u64 = 1 << 62;

/// One component of the per-vehicle motion mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionSampler {
    /// Relative mixture weight.
    pub weight: f64,
    /// Speed range in m/s, sampled uniformly.
    pub speed: [f64; 2],
    /// Center-path turning radius range in meters. Absent means straight.
    #[serde(default)]
    pub radius: Option<[f64; 2]>,
}

impl MotionSampler {
    pub fn stationary(weight: f64) -> Self {
        Self { weight, speed: [0.0, 0.0], radius: None }
    }

    pub fn straight(weight: f64, speed: [f64; 2]) -> Self {
        Self { weight, speed, radius: None }
    }

    pub fn turning(weight: f64, speed: [f64; 2], radius: [f64; 2]) -> Self {
        Self { weight, speed, radius: Some(radius) }
    }
}

/// Scripted ego motion (unicycle) for exercising ego compensation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EgoMotion {
    pub speed: f64,
    pub yaw_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectorySpec {
    /// Model whose exact forward map produces the trajectories.
    pub generator: ModelKind,
    /// `l_r` of the bicycle generator and of bicycle parameter estimation.
    pub rear_axle: f64,
    pub mixture: Vec<MotionSampler>,
    /// Grid spacing of initial vehicle positions in meters.
    pub spacing: f64,
    /// Uniform jitter added to each grid position, in meters.
    pub jitter: f64,
    pub duration: f64,
    pub frame_interval: f64,
    /// `(w, l, h)` in meters.
    pub box_size: [f64; 3],
    pub class: String,
    /// `None` keeps the ego frame equal to the world frame.
    pub ego: Option<EgoMotion>,
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        Self {
            generator: ModelKind::Bicycle,
            rear_axle: 4.7 / 4.0,
            mixture: vec![MotionSampler::straight(1.0, [5.0, 15.0])],
            spacing: 30.0,
            jitter: 3.0,
            duration: 2.0,
            frame_interval: 0.1,
            box_size: [2.1, 4.7, 1.7],
            class: "vehicle".to_string(),
            ego: None,
        }
    }
}

impl TrajectorySpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.frame_interval > 0.0 && self.frame_interval.is_finite()) {
            return Err(Error::invalid("frame_interval", "must be positive"));
        }
        if !(self.duration >= self.frame_interval && self.duration.is_finite()) {
            return Err(Error::invalid("duration", "must be at least one frame interval"));
        }
        if !(self.rear_axle > 0.0) {
            return Err(Error::invalid("rear_axle", "must be positive"));
        }
        if self.mixture.is_empty() || self.mixture.iter().map(|m| m.weight).sum::<f64>() <= 0.0 {
            return Err(Error::invalid("mixture", "needs a component with positive weight"));
        }
        for m in &self.mixture {
            if !(m.weight >= 0.0) || m.speed[0] > m.speed[1] || m.speed[0] < 0.0 {
                return Err(Error::invalid("mixture", "bad weight or speed range"));
            }
            if let Some([lo, hi]) = m.radius {
                if !(lo > 0.0 && lo <= hi) {
                    return Err(Error::invalid("mixture.radius", "needs 0 < lo <= hi"));
                }
                if self.generator == ModelKind::Bicycle && lo < self.rear_axle {
                    return Err(Error::invalid("mixture.radius", "bicycle radius cannot be below l_r"));
                }
            }
        }
        Box3D::new([0.0; 3], self.box_size, 0.0)?;
        Ok(())
    }

    pub fn frame_count(&self) -> usize {
        (self.duration / self.frame_interval + 1e-9).floor() as usize + 1
    }

    pub fn ego_at(&self, t: f64) -> EgoPose {
        match self.ego {
            None => EgoPose::identity(),
            Some(m) => {
                let params = MotionParams::Unicycle(UnicycleParams { speed: m.speed, yaw_rate: m.yaw_rate });
                let p = forward(&Pose::from_finite(0.0, 0.0, 0.0), &params, t);
                EgoPose::new(p.x(), p.y(), p.heading()).expect("finite ego pose")
            }
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng, [lo, hi]: [f64; 2]) -> f64 {
    let u: f64 = rng.random();
    lo + (hi - lo) * u
}

fn gaussian(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    sigma * z
}

fn vehicle_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generating parameters of one vehicle in world coordinates.
fn sample_params(spec: &TrajectorySpec, rng: &mut ChaCha8Rng, heading: f64) -> MotionParams {
    let total: f64 = spec.mixture.iter().map(|m| m.weight).sum();
    let mut pick = rng.random::<f64>() * total;
    let comp = spec
        .mixture
        .iter()
        .find(|m| {
            pick -= m.weight;
            pick < 0.0
        })
        .unwrap_or_else(|| spec.mixture.last().expect("validated mixture"));
    let speed = uniform(rng, comp.speed);
    let radius = comp.radius.map(|r| uniform(rng, r));
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    match (spec.generator, radius) {
        (ModelKind::Cv, _) => MotionParams::Cv(CvParams {
            vx: speed * heading.cos(),
            vy: speed * heading.sin(),
        }),
        (ModelKind::Unicycle, r) => MotionParams::Unicycle(UnicycleParams {
            speed,
            yaw_rate: r.map_or(0.0, |r| sign * speed / r),
        }),
        (ModelKind::Bicycle, r) => MotionParams::Bicycle(BicycleParams {
            speed,
            slip: r.map_or(0.0, |r| sign * (spec.rear_axle / r).asin()),
            rear_axle: spec.rear_axle,
        }),
    }
}

/// Ground-truth frames (score 1, track ids `0..n_vehicles`) with motion
/// parameters estimated from each track by the generator's own model.
pub fn generate_ground_truth(spec: &TrajectorySpec, n_vehicles: usize, seed: u64) -> Result<Vec<Frame>> {
    spec.validate()?;
    let n_frames = spec.frame_count();
    let times: Vec<f64> = (0..n_frames).map(|k| k as f64 * spec.frame_interval).collect();
    let cols = (n_vehicles as f64).sqrt().ceil().max(1.0) as usize;

    let mut frames: Vec<Frame> = times.iter().map(|&t| Frame::empty(t, spec.ego_at(t))).collect();
    let to_ego: Vec<RigidTransform> =
        frames.iter().map(|f| RigidTransform::between(&EgoPose::identity(), &f.ego)).collect();

    for id in 0..n_vehicles {
        let mut rng = vehicle_rng(seed, id as u64);
        let gx = (id % cols) as f64 * spec.spacing + spec.jitter * (2.0 * rng.random::<f64>() - 1.0);
        let gy = (id / cols) as f64 * spec.spacing + spec.jitter * (2.0 * rng.random::<f64>() - 1.0);
        let heading = uniform(&mut rng, [-std::f64::consts::PI, std::f64::consts::PI]);
        let p0 = Pose::from_finite(gx, gy, heading);
        let params = sample_params(spec, &mut rng, heading);

        let track: Vec<TimedPose> = times.iter().map(|&t| TimedPose::new(t, forward(&p0, &params, t))).collect();
        let estimated = estimate_params_from_track(&track, spec.generator, spec.rear_axle)?;
        for (k, (tp, motion)) in track.iter().zip(estimated).enumerate() {
            let world = Box3D::new([tp.pose.x(), tp.pose.y(), 0.5 * spec.box_size[2]], spec.box_size, tp.pose.heading())?;
            let det = Detection::new(world.transformed(&to_ego[k]), 1.0, spec.class.clone(), rotate(&motion, &to_ego[k]))?
                .with_track_id(id as u64);
            frames[k].detections.push(det);
        }
    }
    Ok(frames)
}

fn rotate(m: &MotionParams, tf: &RigidTransform) -> MotionParams {
    match *m {
        MotionParams::Cv(p) => {
            let v = tf.apply_vector(Point2::new(p.vx, p.vy));
            MotionParams::Cv(CvParams { vx: v.x, vy: v.y })
        }
        other => other,
    }
}

/// Replaces every detection's motion parameters with ones estimated by
/// `model` from its track (grouped by `track_id`, in world coordinates).
pub fn relabel(frames: &[Frame], model: ModelKind, rear_axle: f64) -> Result<Vec<Frame>> {
    let mut tracks: BTreeMap<u64, Vec<(usize, usize, TimedPose)>> = BTreeMap::new();
    for (k, f) in frames.iter().enumerate() {
        let to_world = RigidTransform::between(&f.ego, &EgoPose::identity());
        for (j, d) in f.detections.iter().enumerate() {
            let id = d.track_id.ok_or(Error::MissingTrackId)?;
            let pose = to_world.apply_pose(&d.bbox.pose());
            tracks.entry(id).or_default().push((k, j, TimedPose::new(f.timestamp, pose)));
        }
    }
    let mut out = frames.to_vec();
    for members in tracks.values() {
        let poses: Vec<TimedPose> = members.iter().map(|m| m.2).collect();
        let params = if poses.len() < 2 {
            vec![MotionParams::stationary(model, rear_axle)]
        } else {
            estimate_params_from_track(&poses, model, rear_axle)?
        };
        for (&(k, j, _), p) in members.iter().zip(params) {
            let to_ego = RigidTransform::between(&EgoPose::identity(), &frames[k].ego);
            out[k].detections[j].motion = rotate(&p, &to_ego);
        }
    }
    Ok(out)
}

/// Consecutive-frame occlusions applied to a share of the vehicles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BurstSpec {
    /// Probability that a vehicle receives one occlusion burst.
    pub vehicle_fraction: f64,
    /// Burst length in frames.
    pub length: usize,
}

impl Default for BurstSpec {
    fn default() -> Self {
        Self { vehicle_fraction: 0.0, length: 3 }
    }
}

/// Detector confidence model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreModel {
    /// Per-vehicle base confidence range, sampled uniformly.
    pub base: [f64; 2],
    /// Per-frame Gaussian score jitter.
    pub jitter: f64,
    /// Scores are multiplied by `exp(-coupling * position_error)`.
    pub error_coupling: f64,
    /// Multiplier for frames adjacent to an occlusion burst.
    pub burst_edge_factor: f64,
}

impl Default for ScoreModel {
    fn default() -> Self {
        Self { base: [0.5, 0.95], jitter: 0.05, error_coupling: 0.0, burst_edge_factor: 1.0 }
    }
}

/// Noise on the attached motion parameters: `speed` for speeds and CV
/// velocity components, `angular` for yaw rate and slip angle.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionNoise {
    pub speed: f64,
    pub angular: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorruptionSpec {
    pub sigma_xy: f64,
    pub sigma_yaw: f64,
    pub score: ScoreModel,
    pub drop_prob: f64,
    pub burst: BurstSpec,
    pub motion_noise: MotionNoise,
    /// Expected number of spurious boxes per frame.
    pub false_positives: f64,
    /// Score range of spurious boxes.
    pub false_positive_score: [f64; 2],
    /// Half-extent of the square where spurious boxes appear, in meters.
    pub false_positive_extent: f64,
}

impl Default for CorruptionSpec {
    fn default() -> Self {
        Self {
            sigma_xy: 0.0,
            sigma_yaw: 0.0,
            score: ScoreModel::default(),
            drop_prob: 0.0,
            burst: BurstSpec::default(),
            motion_noise: MotionNoise::default(),
            false_positives: 0.0,
            false_positive_score: [0.05, 0.4],
            false_positive_extent: 100.0,
        }
    }
}

impl CorruptionSpec {
    pub fn validate(&self) -> Result<()> {
        let prob = |v: f64, name: &'static str| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("{v} outside [0, 1]")))
            }
        };
        prob(self.drop_prob, "drop_prob")?;
        prob(self.burst.vehicle_fraction, "burst.vehicle_fraction")?;
        prob(self.score.burst_edge_factor, "score.burst_edge_factor")?;
        for (v, name) in [
            (self.sigma_xy, "sigma_xy"),
            (self.sigma_yaw, "sigma_yaw"),
            (self.score.jitter, "score.jitter"),
            (self.score.error_coupling, "score.error_coupling"),
            (self.motion_noise.speed, "motion_noise.speed"),
            (self.motion_noise.angular, "motion_noise.angular"),
            (self.false_positives, "false_positives"),
            (self.false_positive_extent, "false_positive_extent"),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("{v} must be finite and non-negative")));
            }
        }
        for [lo, hi] in [self.score.base, self.false_positive_score] {
            if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                return Err(Error::invalid("score", "ranges must satisfy 0 <= lo <= hi <= 1"));
            }
        }
        Ok(())
    }
}

const MIN_SCORE: f64 = 0.01;

struct VehicleState {
    rng: ChaCha8Rng,
    base: f64,
    /// Occluded frame range `[start, end)`.
    burst: Option<(usize, usize)>,
}

impl VehicleState {
    fn new(seed: u64, id: u64, spec: &CorruptionSpec, n_frames: usize) -> Self {
        let mut rng = vehicle_rng(seed, id);
        let base = uniform(&mut rng, spec.score.base);
        let hit = rng.random_bool(spec.burst.vehicle_fraction);
        let span = n_frames.saturating_sub(spec.burst.length);
        let start = if span > 1 { 1 + rng.random_range(0..span - 1) } else { 0 };
        let burst = (hit && spec.burst.length > 0).then_some((start, start + spec.burst.length));
        Self { rng, base, burst }
    }
}

fn noisy_motion(m: &MotionParams, noise: &MotionNoise, z: [f64; 3]) -> MotionParams {
    match *m {
        MotionParams::Cv(p) => MotionParams::Cv(CvParams {
            vx: p.vx + noise.speed * z[0],
            vy: p.vy + noise.speed * z[1],
        }),
        MotionParams::Unicycle(p) => MotionParams::Unicycle(UnicycleParams {
            speed: p.speed + noise.speed * z[0],
            yaw_rate: p.yaw_rate + noise.angular * z[1],
        }),
        MotionParams::Bicycle(p) => MotionParams::Bicycle(BicycleParams {
            speed: p.speed + noise.speed * z[0],
            slip: (p.slip + noise.angular * z[1]).clamp(-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2),
            rear_axle: p.rear_axle,
        }),
    }
}

/// Simulated detector output for a ground-truth sequence.
///
/// Every vehicle consumes a fixed number of draws per frame whatever the
/// model, so relabelled copies of one scene receive identical pose noise,
/// drops and scores. Track ids are not passed through.
pub fn corrupt(gt: &[Frame], spec: &CorruptionSpec, seed: u64) -> Result<Vec<Frame>> {
    spec.validate()?;
    let n_frames = gt.len();

    let mut vehicles: BTreeMap<u64, VehicleState> = BTreeMap::new();

    let mut fp_rng = vehicle_rng(seed, FALSE_POSITIVE_STREAM);
    let poisson = (spec.false_positives > 0.0)
        .then(|| Poisson::new(spec.false_positives).map_err(|e| Error::invalid("false_positives", e.to_string())))
        .transpose()?;
    let template = gt.iter().flat_map(|f| f.detections.first()).next();

    let mut out = Vec::with_capacity(n_frames);
    for (k, frame) in gt.iter().enumerate() {
        let mut dets = Vec::with_capacity(frame.detections.len());
        for (j, d) in frame.detections.iter().enumerate() {
            let id = d.track_id.unwrap_or(j as u64 | (1 << 63));
            let v = vehicles.entry(id).or_insert_with(|| VehicleState::new(seed, id, spec, n_frames));
            let rng = &mut v.rng;
            let (dx, dy, dyaw) = (gaussian(rng, spec.sigma_xy), gaussian(rng, spec.sigma_xy), gaussian(rng, spec.sigma_yaw));
            let z = [gaussian(rng, 1.0), gaussian(rng, 1.0), gaussian(rng, 1.0)];
            let jitter = gaussian(rng, spec.score.jitter);
            let dropped = rng.random::<f64>() < spec.drop_prob;
            let occluded = v.burst.is_some_and(|(a, b)| (a..b).contains(&k));
            if dropped || occluded {
                continue;
            }
            let near_burst = v.burst.is_some_and(|(a, b)| k + 1 == a || k == b);
            let mut score = (v.base + jitter) * (-spec.score.error_coupling * dx.hypot(dy)).exp();
            if near_burst {
                score *= spec.score.burst_edge_factor;
            }
            let c = d.bbox.center();
            let bbox = Box3D::new([c[0] + dx, c[1] + dy, c[2]], d.bbox.size(), d.bbox.yaw() + dyaw)?;
            dets.push(Detection::new(
                bbox,
                score.clamp(MIN_SCORE, 1.0),
                d.class.clone(),
                noisy_motion(&d.motion, &spec.motion_noise, z),
            )?);
        }
        if let (Some(p), Some(t)) = (&poisson, template) {
            let count = p.sample(&mut fp_rng) as usize;
            let e = spec.false_positive_extent;
            for _ in 0..count {
                let bbox = Box3D::new(
                    [uniform(&mut fp_rng, [-e, e]), uniform(&mut fp_rng, [-e, e]), t.bbox.center()[2]],
                    t.bbox.size(),
                    uniform(&mut fp_rng, [-std::f64::consts::PI, std::f64::consts::PI]),
                )?;
                let score = uniform(&mut fp_rng, spec.false_positive_score).max(MIN_SCORE);
                let rear_axle = match t.motion {
                    MotionParams::Bicycle(p) => p.rear_axle,
                    _ => 1.0,
                };
                let motion = MotionParams::stationary(t.motion.kind(), rear_axle);
                dets.push(Detection::new(bbox, score, t.class.clone(), motion)?);
            }
        }
        out.push(Frame::new(frame.timestamp, frame.ego, dets));
    }
    Ok(out)
}

/// A full synthetic experiment: trajectories plus detector corruption.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSpec {
    pub vehicles: usize,
    pub trajectory: TrajectorySpec,
    pub corruption: CorruptionSpec,
}

impl SceneSpec {
    /// 50 vehicles split 0.63 / 0.31 / 0.05 between stationary, straight and
    /// turning, seen by a noisy detector with drops and short occlusions.
    pub fn mixed_traffic() -> Self {
        Self {
            vehicles: 50,
            trajectory: TrajectorySpec {
                mixture: vec![
                    MotionSampler::stationary(0.63),
                    MotionSampler::straight(0.31, [3.0, 15.0]),
                    MotionSampler::turning(0.05, [6.0, 12.0], [12.0, 24.0]),
                ],
                duration: 4.0,
                ..Default::default()
            },
            corruption: CorruptionSpec {
                sigma_xy: 0.3,
                sigma_yaw: 0.05,
                score: ScoreModel { base: [0.4, 0.95], jitter: 0.05, error_coupling: 2.0, burst_edge_factor: 0.7 },
                drop_prob: 0.1,
                burst: BurstSpec { vehicle_fraction: 0.2, length: 3 },
                motion_noise: MotionNoise { speed: 0.3, angular: 0.02 },
                false_positives: 2.0,
                ..Default::default()
            },
        }
    }

    /// Every vehicle turns hard (V in 6..12 m/s, R in 10..20 m) and is
    /// occluded once, with doubled per-frame drops, so many outputs rely on
    /// boxes carried forward through a heading change.
    pub fn turning_traffic() -> Self {
        let mixed = Self::mixed_traffic();
        Self {
            vehicles: 30,
            trajectory: TrajectorySpec {
                mixture: vec![MotionSampler::turning(1.0, [6.0, 12.0], [10.0, 20.0])],
                ..mixed.trajectory
            },
            corruption: CorruptionSpec {
                drop_prob: 0.2,
                burst: BurstSpec { vehicle_fraction: 1.0, length: 3 },
                ..mixed.corruption
            },
        }
    }
}
