//! Differential-drive mobile robot: rigid-body mass properties, kinematics,
//! traction-limited dynamics, path and velocity planning, and an adaptive
//! wheel-speed controller with a slip-aware supervisor.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the aliases at the
//! crate root fix the scalar to `f64`.

mod linalg;
mod scalar;

pub mod adaptive_control;
pub mod body_model;
pub mod dynamics;
pub mod kinematics;
pub mod path_geometry;
pub mod sim;
pub mod supervisor;
pub mod surface;
pub mod velocity_trajectory;

pub use scalar::{wrap_angle, Real};

pub type Particle = body_model::Particle<f64>;
pub type RigidBodySpec = body_model::RigidBodySpec<f64>;
pub type MassProperties = body_model::MassProperties<f64>;
pub type GeometryParams = kinematics::GeometryParams<f64>;
pub type WheelRates = kinematics::WheelRates<f64>;
pub type BodyTwist = kinematics::BodyTwist<f64>;
pub type Pose = kinematics::Pose<f64>;
pub type PathSection = path_geometry::PathSection<f64>;
pub type PathSpec = path_geometry::PathSpec<f64>;
pub type MotionLimits = velocity_trajectory::MotionLimits<f64>;
pub type TrajectoryPlan = velocity_trajectory::TrajectoryPlan<f64>;
pub type SurfaceMap = surface::SurfaceMap<f64>;
pub type DynamicParams = dynamics::DynamicParams<f64>;
pub type DynState = dynamics::DynState<f64>;
pub type WheelTorques = dynamics::WheelTorques<f64>;
pub type StepReport = dynamics::StepReport<f64>;
pub type ArxModel = adaptive_control::ArxModel<f64>;
pub type PidGains = adaptive_control::PidGains<f64>;
pub type WheelController = adaptive_control::WheelController<f64>;
