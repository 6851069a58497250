//! Inverse models: motion parameters from a pose pair `(p0, pt)` separated by `t`.

use std::f64::consts::{FRAC_PI_2, TAU};

use super::{sinc, sinc_prime, BicycleParams, CvParams, UnicycleParams, STRAIGHT_EPS};
use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Pose};

fn check_interval(t: f64) -> Result<()> {
    if t == 0.0 {
        return Err(Error::ZeroInterval);
    }
    if !t.is_finite() {
        return Err(Error::NonFinite("t"));
    }
    Ok(())
}

pub fn inverse_cv(p0: &Pose, pt: &Pose, t: f64) -> Result<CvParams> {
    check_interval(t)?;
    Ok(CvParams {
        vx: (pt.x() - p0.x()) / t,
        vy: (pt.y() - p0.y()) / t,
    })
}

/// Closed-form unicycle inverse.
///
/// `ω = Δφ / t` and `V = (Δφ / sin Δφ)(Vx cos φ0 + Vy sin φ0)` with the
/// heading change taken wrap-aware. Turns of half a revolution or more
/// between the two poses are not recoverable.
pub fn inverse_unicycle(p0: &Pose, pt: &Pose, t: f64) -> Result<UnicycleParams> {
    check_interval(t)?;
    let dphi = wrap_angle(pt.heading() - p0.heading());
    let vx = (pt.x() - p0.x()) / t;
    let vy = (pt.y() - p0.y()) / t;
    let (s0, c0) = p0.heading().sin_cos();
    let along = vx * c0 + vy * s0;
    let gain = if dphi.abs() < STRAIGHT_EPS * t.abs() {
        1.0
    } else {
        dphi / dphi.sin()
    };
    Ok(UnicycleParams {
        speed: gain * along,
        yaw_rate: dphi / t,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BicycleSolverOptions {
    pub max_iter: usize,
    /// Stop once the loss changes by less than this between iterations.
    pub loss_tol: f64,
    /// Condition number of `JᵀJ` above which the step is damped.
    pub max_condition: f64,
}

impl Default for BicycleSolverOptions {
    fn default() -> Self {
        Self {
            max_iter: 50,
            loss_tol: 1e-6,
            max_condition: 1e12,
        }
    }
}

/// Result of the Gauss–Newton bicycle fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BicycleFit {
    pub params: BicycleParams,
    pub iterations: usize,
    /// `½ rᵀr` at the returned parameters.
    pub loss: f64,
}

/// Predicted `(x, y, unwrapped heading)` at time `t`.
fn predict(p0: &Pose, speed: f64, slip: f64, rear_axle: f64, t: f64) -> [f64; 3] {
    let (sb, _) = slip.sin_cos();
    let u = 0.5 * speed * t * sb / rear_axle;
    let chord = speed * t * sinc(u);
    let (sa, ca) = (p0.heading() + slip + u).sin_cos();
    [p0.x() + chord * ca, p0.y() + chord * sa, p0.heading() + 2.0 * u]
}

/// Jacobian of the predicted pose with respect to `(V, β)`.
///
/// Written through `sinc` so it stays finite at `β = 0`, where the
/// `l_r / sin β` form of the same derivatives is singular.
pub(crate) fn forward_jacobian(p0: &Pose, speed: f64, slip: f64, rear_axle: f64, t: f64) -> [[f64; 2]; 3] {
    let (sb, cb) = slip.sin_cos();
    let u = 0.5 * speed * t * sb / rear_axle;
    let u_v = 0.5 * t * sb / rear_axle;
    let u_b = 0.5 * speed * t * cb / rear_axle;
    let (s, ds) = (sinc(u), sinc_prime(u));
    let (sa, ca) = (p0.heading() + slip + u).sin_cos();
    let vt = speed * t;
    [
        [
            t * s * ca + vt * (ds * ca - s * sa) * u_v,
            vt * (ds * u_b * ca - s * sa * (1.0 + u_b)),
        ],
        [
            t * s * sa + vt * (ds * sa + s * ca) * u_v,
            vt * (ds * u_b * sa + s * ca * (1.0 + u_b)),
        ],
        [t * sb / rear_axle, vt * cb / rear_axle],
    ]
}

fn residual(p0: &Pose, pt: &Pose, speed: f64, slip: f64, rear_axle: f64, t: f64) -> ([f64; 3], f64) {
    let pred = predict(p0, speed, slip, rear_axle, t);
    let r = [
        pt.x() - pred[0],
        pt.y() - pred[1],
        wrap_angle(pt.heading() - pred[2]),
    ];
    (r, 0.5 * (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]))
}

/// Gauss–Newton step `(JᵀJ)⁻¹ Jᵀ r`, damped when `JᵀJ` is ill-conditioned.
fn gauss_newton_step(jac: &[[f64; 2]; 3], r: &[f64; 3], max_condition: f64) -> [f64; 2] {
    let mut a = 0.0;
    let mut b = 0.0;
    let mut c = 0.0;
    let mut g = [0.0; 2];
    for (row, ri) in jac.iter().zip(r) {
        a += row[0] * row[0];
        b += row[0] * row[1];
        c += row[1] * row[1];
        g[0] += row[0] * ri;
        g[1] += row[1] * ri;
    }
    let trace = a + c;
    if !(trace > 0.0) {
        return [0.0, 0.0];
    }
    let spread = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let lambda_max = 0.5 * trace + spread;
    let lambda_min = 0.5 * trace - spread;
    if lambda_min <= 0.0 || lambda_max / lambda_min > max_condition {
        let mu = 1e-6 * trace;
        a += mu;
        c += mu;
    }
    let det = a * c - b * b;
    [(c * g[0] - b * g[1]) / det, (a * g[1] - b * g[0]) / det]
}

/// Seeds whose losses differ by less than this are ranked by turn size.
const SEED_LOSS_TIE: f64 = 1e-9;

fn clamp_slip(slip: f64) -> f64 {
    slip.clamp(-FRAC_PI_2, FRAC_PI_2)
}

/// Seed from the unicycle inverse: keep `V`, match the yaw rate with
/// `β = asin(ω l_r / V)`.
fn unicycle_seed(p0: &Pose, pt: &Pose, t: f64, rear_axle: f64) -> Result<BicycleParams> {
    let uni = inverse_unicycle(p0, pt, t)?;
    let slip = if uni.speed.abs() > 0.1 {
        (uni.yaw_rate * rear_axle / uni.speed).clamp(-1.0, 1.0).asin()
    } else {
        0.0
    };
    Ok(BicycleParams {
        speed: uni.speed,
        slip,
        rear_axle,
    })
}

/// Seeds reading `β` off the chord direction, one per heading-change branch.
///
/// Under constant parameters the chord `pt - p0` points along
/// `φ0 + β + Δφ/2`, so each candidate total turn `Δφ + 2πk` fixes `β`, and
/// the chord length fixes `V`.
fn chord_seeds(p0: &Pose, pt: &Pose, t: f64, rear_axle: f64) -> impl Iterator<Item = BicycleParams> {
    let dx = pt.x() - p0.x();
    let dy = pt.y() - p0.y();
    let dphi = wrap_angle(pt.heading() - p0.heading());
    let p0 = *p0;
    (-1i32..=1).filter_map(move |k| {
        let turn = dphi + TAU * k as f64;
        if dx == 0.0 && dy == 0.0 {
            return None;
        }
        // fold the travel direction into [-π/2, π/2]; the sign goes to V
        let mut slip = wrap_angle(dy.atan2(dx) - p0.heading() - 0.5 * turn);
        if slip > FRAC_PI_2 {
            slip -= std::f64::consts::PI;
        } else if slip < -FRAC_PI_2 {
            slip += std::f64::consts::PI;
        }
        let (s, c) = (p0.heading() + slip + 0.5 * turn).sin_cos();
        let scale = t * sinc(0.5 * turn);
        if scale.abs() < 1e-12 {
            return None;
        }
        Some(BicycleParams {
            speed: (dx * c + dy * s) / scale,
            slip,
            rear_axle,
        })
    })
}

/// Bicycle inverse by Gauss–Newton on `L = ½ rᵀr`, `r = pt - p̂t`.
///
/// Only `(V, β)` are estimated; `l_r` stays fixed. The heading residual is
/// wrapped, `β` is clamped to `[-π/2, π/2]` after every step, and iteration
/// stops once the loss changes by less than `loss_tol`. Without an explicit
/// `init`, the fit starts from the lowest-loss of the unicycle-derived seed
/// and the chord seeds.
pub fn inverse_bicycle(
    p0: &Pose,
    pt: &Pose,
    t: f64,
    rear_axle: f64,
    init: Option<BicycleParams>,
) -> Result<BicycleFit> {
    inverse_bicycle_with(p0, pt, t, rear_axle, init, &BicycleSolverOptions::default())
}

pub fn inverse_bicycle_with(
    p0: &Pose,
    pt: &Pose,
    t: f64,
    rear_axle: f64,
    init: Option<BicycleParams>,
    opts: &BicycleSolverOptions,
) -> Result<BicycleFit> {
    check_interval(t)?;
    if !(rear_axle > 0.0) || !rear_axle.is_finite() {
        return Err(Error::invalid("l_r", format!("{rear_axle} is not positive")));
    }

    let loss_at = |speed: f64, slip: f64| residual(p0, pt, speed, slip, rear_axle, t);

    let seed = match init {
        Some(p) => BicycleParams { rear_axle, slip: clamp_slip(p.slip), ..p },
        None => {
            // Pose pairs cannot tell a turn from the same turn plus a full
            // revolution; among equally good seeds take the smallest turn.
            let first = unicycle_seed(p0, pt, t, rear_axle)?;
            let scored: Vec<(BicycleParams, f64, f64)> = std::iter::once(first)
                .chain(chord_seeds(p0, pt, t, rear_axle))
                .filter(|s| s.speed.is_finite())
                .map(|s| (s, loss_at(s.speed, s.slip).1, (s.yaw_rate() * t).abs()))
                .collect();
            let best_loss = scored.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            scored
                .iter()
                .filter(|c| c.1 <= best_loss + SEED_LOSS_TIE)
                .min_by(|a, b| a.2.total_cmp(&b.2))
                .map(|c| c.0)
                .unwrap_or(first)
        }
    };

    let (mut speed, mut slip) = (seed.speed, seed.slip);
    let (mut r, mut loss) = loss_at(speed, slip);
    if loss == 0.0 {
        return Ok(BicycleFit {
            params: BicycleParams { speed, slip, rear_axle },
            iterations: 0,
            loss,
        });
    }

    for iter in 1..=opts.max_iter {
        let jac = forward_jacobian(p0, speed, slip, rear_axle, t);
        let step = gauss_newton_step(&jac, &r, opts.max_condition);

        // Plain step first; halve it while the loss goes up.
        let mut scale = 1.0;
        let mut next = None;
        for _ in 0..30 {
            let cand_speed = speed + scale * step[0];
            let cand_slip = clamp_slip(slip + scale * step[1]);
            let (cr, cl) = loss_at(cand_speed, cand_slip);
            if cl.is_finite() && cl <= loss {
                next = Some((cand_speed, cand_slip, cr, cl));
                break;
            }
            scale *= 0.5;
        }

        let Some((ns, nb, nr, nl)) = next else {
            // no descent direction left: loss is stationary
            return Ok(BicycleFit {
                params: BicycleParams { speed, slip, rear_axle },
                iterations: iter,
                loss,
            });
        };
        let change = loss - nl;
        speed = ns;
        slip = nb;
        r = nr;
        loss = nl;
        if change.abs() < opts.loss_tol {
            return Ok(BicycleFit {
                params: BicycleParams { speed, slip, rear_axle },
                iterations: iter,
                loss,
            });
        }
    }

    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        loss,
        best: BicycleParams { speed, slip, rear_axle },
    })
}
