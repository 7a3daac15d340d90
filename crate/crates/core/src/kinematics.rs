//! No-slip kinematics of the differential drive.
//!
//! Body frame: x forward, y left, z up; positive yaw rate is counter-clockwise.
//! The right wheel sits at lateral offset `-track_width/2`, the left one at
//! `+track_width/2`, both on the rear axle a distance `l_r` behind the centre
//! of gravity.

use serde::{Deserialize, Serialize};

use crate::scalar::{sinc, wrap_angle};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryParams<T> {
    /// Driving wheel radius `R_t`, metres.
    pub wheel_radius: T,
    /// Distance between the driving wheels `T_r`, metres.
    pub track_width: T,
    /// Rear axle to centre of gravity, metres.
    pub l_r: T,
    /// Centre of gravity to castor contact, metres. Only used for load distribution.
    pub l_f: T,
}

impl<T: Real> GeometryParams<T> {
    pub fn is_valid(&self) -> bool {
        [self.wheel_radius, self.track_width, self.l_f]
            .iter()
            .all(|v| *v > T::zero() && v.is_finite())
            && self.l_r >= T::zero()
            && self.l_r.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WheelRates<T> {
    pub omega_r: T,
    pub omega_l: T,
}

/// Body-frame velocities of the centre of gravity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BodyTwist<T> {
    pub u: T,
    pub v: T,
    pub r: T,
}

impl<T: Real> BodyTwist<T> {
    pub fn new(u: T, v: T, r: T) -> Self {
        Self { u, v, r }
    }
}

/// World-frame pose. `theta` accumulates without wrapping; use
/// [`Pose::heading`] for the wrapped value.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose<T> {
    pub x: T,
    pub y: T,
    pub theta: T,
}

impl<T: Real> Pose<T> {
    pub fn new(x: T, y: T, theta: T) -> Self {
        Self { x, y, theta }
    }

    /// Heading wrapped to `(-pi, pi]`.
    pub fn heading(&self) -> T {
        wrap_angle(self.theta)
    }

    pub fn distance_to(&self, other: &Pose<T>) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// The point `forward` metres ahead along the heading (negative: behind).
    pub fn offset_forward(&self, forward: T) -> Pose<T> {
        Pose::new(
            self.x + forward * self.theta.cos(),
            self.y + forward * self.theta.sin(),
            self.theta,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }
}

/// How poses are advanced over a step of constant twist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoseIntegration {
    /// Closed-form constant-twist arc.
    #[default]
    Exact,
    /// Explicit Euler on the world-frame velocity at the start of the step.
    Euler,
}

pub fn forward_kinematics<T: Real>(rates: WheelRates<T>, geom: &GeometryParams<T>) -> BodyTwist<T> {
    let half = T::lit(0.5);
    let u = (rates.omega_r + rates.omega_l) * geom.wheel_radius * half;
    let r = (rates.omega_r - rates.omega_l) * geom.wheel_radius / geom.track_width;
    BodyTwist { u, v: r * geom.l_r, r }
}

pub fn inverse_kinematics<T: Real>(u: T, r: T, geom: &GeometryParams<T>) -> WheelRates<T> {
    let half_track = T::lit(0.5) * r * geom.track_width;
    WheelRates {
        omega_r: (u + half_track) / geom.wheel_radius,
        omega_l: (u - half_track) / geom.wheel_radius,
    }
}

/// Rotates the body-frame velocity into the world frame, returning `(V_X, V_Y)`.
pub fn body_to_world<T: Real>(twist: &BodyTwist<T>, theta: T) -> (T, T) {
    let (s, c) = theta.sin_cos();
    (twist.u * c - twist.v * s, twist.u * s + twist.v * c)
}

/// Yaw rates at or below this magnitude take the straight-line branch.
pub const STRAIGHT_YAW_RATE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("integration step must be positive and finite")]
pub struct InvalidStep;

/// Advances `pose` by `dt` seconds of constant body twist along the exact arc.
pub fn integrate_pose<T: Real>(pose: &Pose<T>, twist: &BodyTwist<T>, dt: T) -> Result<Pose<T>, InvalidStep> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(InvalidStep);
    }
    Ok(advance_exact(pose, twist, dt))
}

pub(crate) fn advance_exact<T: Real>(pose: &Pose<T>, twist: &BodyTwist<T>, dt: T) -> Pose<T> {
    let half_turn = T::lit(0.5) * twist.r * dt;
    // ∫cos(θ)dt = dt·sinc(h)·cos(θ_mid), same for sin
    let chord = if twist.r.abs() <= T::lit(STRAIGHT_YAW_RATE) {
        dt
    } else {
        dt * sinc(half_turn)
    };
    let mid = pose.theta + half_turn;
    let (s, c) = mid.sin_cos();
    Pose {
        x: pose.x + chord * (twist.u * c - twist.v * s),
        y: pose.y + chord * (twist.u * s + twist.v * c),
        theta: pose.theta + twist.r * dt,
    }
}

/// One explicit Euler step of the world-frame velocity equations.
pub fn integrate_pose_euler<T: Real>(pose: &Pose<T>, twist: &BodyTwist<T>, dt: T) -> Result<Pose<T>, InvalidStep> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(InvalidStep);
    }
    Ok(advance_euler(pose, twist, dt))
}

pub(crate) fn advance_euler<T: Real>(pose: &Pose<T>, twist: &BodyTwist<T>, dt: T) -> Pose<T> {
    let (vx, vy) = body_to_world(twist, pose.theta);
    Pose {
        x: pose.x + vx * dt,
        y: pose.y + vy * dt,
        theta: pose.theta + twist.r * dt,
    }
}

impl PoseIntegration {
    pub(crate) fn advance<T: Real>(self, pose: &Pose<T>, twist: &BodyTwist<T>, dt: T) -> Pose<T> {
        match self {
            PoseIntegration::Exact => advance_exact(pose, twist, dt),
            PoseIntegration::Euler => advance_euler(pose, twist, dt),
        }
    }
}
