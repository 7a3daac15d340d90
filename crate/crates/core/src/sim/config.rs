//! Scenario files (TOML) and their validation.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adaptive_control::{ArxModel, DesiredPoles, WheelControllerConfig};
use crate::body_model::{aggregate, Particle, RigidBodySpec};
use crate::dynamics::{normal_loads, DynamicParams, MAX_STEP};
use crate::kinematics::{GeometryParams, Pose, PoseIntegration};
use crate::path_geometry::{PathError, PathSection, PathSpec};
use crate::supervisor::{ControllerMode, SupervisorConfig};
use crate::surface::SurfaceMap;
use crate::velocity_trajectory::{plan, MotionLimits, PlanError};

/// Either a particle list or explicit mass and yaw inertia.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particles: Option<Vec<Particle<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yaw_inertia: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsConfig {
    pub drivetrain_inertia: f64,
    pub gravity: f64,
    pub pose_integration: PoseIntegration,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            drivetrain_inertia: 0.05,
            gravity: 9.81,
            pose_integration: PoseIntegration::Exact,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    #[serde(default)]
    pub start_pose: Pose<f64>,
    pub sections: Vec<PathSection<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    pub mode: ControllerMode,
    pub model_order: usize,
    pub lambda: f64,
    pub p0: f64,
    pub covariance_trace_cap: f64,
    pub redesign_interval: usize,
    /// Continuous-time double pole of the wheel-speed loop, rad/s; ignored when `poles` is set.
    pub bandwidth: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub poles: Option<DesiredPoles<f64>>,
    /// N·m per wheel.
    pub torque_limit: f64,
    /// Cross-coupling gain, N·m per rad/s of differential speed error.
    pub cross_coupling: f64,
    /// Initial plant model; derived from the vehicle parameters when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nominal: Option<ArxModel<f64>>,
    pub supervisor: SupervisorConfig,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            mode: ControllerMode::Low,
            model_order: 1,
            lambda: 0.99,
            p0: 1e3,
            covariance_trace_cap: 1e5,
            redesign_interval: 10,
            bandwidth: 10.0,
            poles: None,
            torque_limit: 10.0,
            cross_coupling: 0.5,
            nominal: None,
            supervisor: SupervisorConfig::default(),
        }
    }
}

/// Point of the robot that follows the path and whose error is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackPoint {
    #[default]
    RearAxle,
    CentreOfGravity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    /// Physics step, s.
    pub dt: f64,
    /// Controller period, s; a whole multiple of `dt`.
    pub control_period: f64,
    /// Duration cap, s.
    pub duration: f64,
    pub track_point: TrackPoint,
    /// Time to wait at rest after the plan ends before giving up on the goal, s.
    pub settle_time: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            dt: 0.001,
            control_period: 0.01,
            duration: 60.0,
            track_point: TrackPoint::RearAxle,
            settle_time: 1.0,
        }
    }
}

/// Zero-mean Gaussian measurement noise (standard deviations).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub seed: u64,
    /// m
    pub position: f64,
    /// rad
    pub heading: f64,
    /// m/s, on both body velocities
    pub speed: f64,
    /// rad/s
    pub yaw_rate: f64,
    /// rad/s
    pub wheel_speed: f64,
}

impl NoiseConfig {
    pub fn is_zero(&self) -> bool {
        [self.position, self.heading, self.speed, self.yaw_rate, self.wheel_speed]
            .iter()
            .all(|v| *v == 0.0)
    }
}

/// Scenario file as written on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub body: BodyConfig,
    pub geometry: GeometryParams<f64>,
    #[serde(default)]
    pub dynamics: DynamicsConfig,
    pub path: PathConfig,
    pub section_v_max: Vec<f64>,
    pub limits: MotionLimits<f64>,
    pub surface: SurfaceMap<f64>,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
}

/// Validation failure with the dotted path of the offending field.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ValidationError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.field.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.field, self.message)
        }
    }
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ValidationError {
    ValidationError {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Invalid(#[from] ValidationError),
    #[error("infeasible plan: {0}")]
    Plan(#[from] PlanError),
}

/// A validated scenario ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub params: DynamicParams<f64>,
    pub path: PathSpec<f64>,
    pub section_v_max: Vec<f64>,
    pub limits: MotionLimits<f64>,
    pub surface: SurfaceMap<f64>,
    pub controller: ControllerConfig,
    pub simulation: SimulationConfig,
    pub noise: NoiseConfig,
    /// Ticks of `dt` per control period.
    pub substeps: usize,
}

fn positive(field: &str, v: f64) -> Result<(), ValidationError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive and finite, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<(), ValidationError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be non-negative and finite, got {v}")))
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }

    /// Mass and yaw inertia from the body description.
    fn mass_properties(&self, l_r: f64) -> Result<(f64, f64), ValidationError> {
        match (&self.body.particles, self.body.mass, self.body.yaw_inertia) {
            (Some(particles), None, None) => {
                let spec = RigidBodySpec {
                    particles: particles.clone(),
                };
                let mp = aggregate(&spec).map_err(|e| invalid("body.particles", e.to_string()))?;
                if (mp.cg[0] - l_r).abs() > 1e-3 {
                    return Err(invalid(
                        "geometry.l_r",
                        format!("{l_r} does not match the body centre of gravity at x = {:.6}", mp.cg[0]),
                    ));
                }
                Ok((mp.mass, mp.yaw_inertia()))
            }
            (None, Some(m), Some(i)) => {
                positive("body.mass", m)?;
                positive("body.yaw_inertia", i)?;
                Ok((m, i))
            }
            (Some(_), _, _) => Err(invalid("body", "give either particles or mass and yaw_inertia, not both")),
            (None, None, _) => Err(invalid("body.mass", "missing")),
            (None, _, None) => Err(invalid("body.yaw_inertia", "missing")),
        }
    }

    pub fn validate(&self) -> Result<Scenario, ScenarioError> {
        let g = &self.geometry;
        positive("geometry.wheel_radius", g.wheel_radius)?;
        positive("geometry.track_width", g.track_width)?;
        non_negative("geometry.l_r", g.l_r)?;
        positive("geometry.l_f", g.l_f)?;
        let (mass, yaw_inertia) = self.mass_properties(g.l_r)?;

        let d = &self.dynamics;
        positive("dynamics.drivetrain_inertia", d.drivetrain_inertia)?;
        positive("dynamics.gravity", d.gravity)?;
        let params = DynamicParams {
            mass,
            yaw_inertia,
            drivetrain_inertia: d.drivetrain_inertia,
            geom: *g,
            gravity: d.gravity,
            pose_integration: d.pose_integration,
        };
        normal_loads(&params).map_err(|e| invalid("geometry", e.to_string()))?;

        let path = PathSpec::new(self.path.start_pose, self.path.sections.clone()).map_err(|e| match e {
            PathError::InvalidSection { index, reason } => invalid(format!("path.sections[{index}]"), reason),
            other => invalid("path.sections", other.to_string()),
        })?;
        if !self.path.start_pose.is_finite() {
            return Err(invalid("path.start_pose", "must be finite").into());
        }
        let l = &self.limits;
        positive("limits.a_max", l.a_max)?;
        positive("limits.d_max", l.d_max)?;
        positive("limits.v_cap", l.v_cap)?;
        positive("limits.omega_max", l.omega_max)?;
        positive("limits.alpha_max", l.alpha_max)?;

        non_negative("surface.default_mu", self.surface.default_mu)?;
        for (i, p) in self.surface.patches.iter().enumerate() {
            non_negative(&format!("surface.patches[{i}].mu"), p.mu)?;
            if !(p.min[0] <= p.max[0] && p.min[1] <= p.max[1]) {
                return Err(invalid(format!("surface.patches[{i}]"), "min must not exceed max").into());
            }
        }

        let c = &self.controller;
        if !(c.model_order == 1 || c.model_order == 2) {
            return Err(invalid("controller.model_order", format!("must be 1 or 2, got {}", c.model_order)).into());
        }
        if !(c.lambda > 0.0 && c.lambda <= 1.0) {
            return Err(invalid("controller.lambda", format!("must lie in (0, 1], got {}", c.lambda)).into());
        }
        positive("controller.p0", c.p0)?;
        positive("controller.covariance_trace_cap", c.covariance_trace_cap)?;
        if c.redesign_interval == 0 {
            return Err(invalid("controller.redesign_interval", "must be at least 1").into());
        }
        positive("controller.bandwidth", c.bandwidth)?;
        if let Some(p) = c.poles {
            if !p.inside_unit_circle() {
                return Err(invalid("controller.poles", "must lie strictly inside the unit circle").into());
            }
        }
        positive("controller.torque_limit", c.torque_limit)?;
        non_negative("controller.cross_coupling", c.cross_coupling)?;
        let s = &c.supervisor;
        for (name, v) in [
            ("k_y", s.k_y),
            ("k_theta", s.k_theta),
            ("debounce", s.debounce),
            ("relax_after", s.relax_after),
            ("min_ceiling", s.min_ceiling),
        ] {
            non_negative(&format!("controller.supervisor.{name}"), v)?;
        }
        for (name, v) in [
            ("beta", s.beta),
            ("slip_threshold", s.slip_threshold),
            ("mu_filter_tau", s.mu_filter_tau),
            ("mu_initial", s.mu_initial),
            ("goal_tolerance", s.goal_tolerance),
            ("stop_speed", s.stop_speed),
        ] {
            positive(&format!("controller.supervisor.{name}"), v)?;
        }
        if !(s.replan_drop >= 0.0 && s.replan_drop < 1.0) {
            return Err(invalid("controller.supervisor.replan_drop", "must lie in [0, 1)").into());
        }

        let sim = &self.simulation;
        positive("simulation.dt", sim.dt)?;
        if sim.dt > MAX_STEP {
            return Err(invalid("simulation.dt", format!("must not exceed {MAX_STEP} s")).into());
        }
        positive("simulation.control_period", sim.control_period)?;
        let ratio = sim.control_period / sim.dt;
        let substeps = ratio.round();
        if substeps < 1.0 || (ratio - substeps).abs() > 1e-9 * ratio {
            return Err(invalid("simulation.control_period", "must be a whole multiple of simulation.dt").into());
        }
        positive("simulation.duration", sim.duration)?;
        non_negative("simulation.settle_time", sim.settle_time)?;

        let n = &self.noise;
        for (name, v) in [
            ("position", n.position),
            ("heading", n.heading),
            ("speed", n.speed),
            ("yaw_rate", n.yaw_rate),
            ("wheel_speed", n.wheel_speed),
        ] {
            non_negative(&format!("noise.{name}"), v)?;
        }

        let trajectory = plan(&path, &self.section_v_max, l, 0.0, 0.0)?;
        if !(sim.duration > trajectory.duration()) {
            return Err(invalid(
                "simulation.duration",
                format!("{} s does not exceed the planned duration {:.3} s", sim.duration, trajectory.duration()),
            )
            .into());
        }

        Ok(Scenario {
            name: self.name.clone(),
            params,
            path,
            section_v_max: self.section_v_max.clone(),
            limits: *l,
            surface: self.surface.clone(),
            controller: *c,
            simulation: *sim,
            noise: *n,
            substeps: substeps as usize,
        })
    }
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        ScenarioConfig::from_toml_str(text)?.validate()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml_str(&text)
    }

    /// First-order wheel model `ω_k = ω_{k−1} + b0·τ_{k−1}` for common-mode motion.
    pub fn nominal_wheel_model(&self) -> ArxModel<f64> {
        if let Some(m) = self.controller.nominal {
            return ArxModel {
                ts: self.simulation.control_period,
                ..m
            };
        }
        let p = &self.params;
        let radius = p.geom.wheel_radius;
        let inertia = p.drivetrain_inertia + 0.5 * p.mass * radius * radius;
        ArxModel::first_order(-1.0, self.simulation.control_period / inertia, self.simulation.control_period)
    }

    pub fn wheel_controller_config(&self) -> WheelControllerConfig<f64> {
        let c = &self.controller;
        WheelControllerConfig {
            model_order: c.model_order,
            lambda: c.lambda,
            p0: c.p0,
            covariance_trace_cap: c.covariance_trace_cap,
            redesign_interval: c.redesign_interval,
            poles: c
                .poles
                .unwrap_or_else(|| DesiredPoles::double_from_continuous(c.bandwidth, self.simulation.control_period)),
            torque_limit: c.torque_limit,
        }
    }
}
