//! High-level control: turns the velocity plan into wheel-speed references,
//! watches for slip, estimates the friction ceiling and replans the rest of
//! the path under reduced limits.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dynamics::WheelTorques;
use crate::kinematics::{inverse_kinematics, integrate_pose, BodyTwist, GeometryParams, Pose, WheelRates};
use crate::path_geometry::{PathSection, PathSpec};
use crate::velocity_trajectory::{plan, MotionLimits, PlanError, TrajectoryPlan};
use crate::wrap_angle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerMode {
    /// Wheel-speed loops and path feedback only.
    #[default]
    Low,
    /// Adds slip detection, friction estimation and replanning.
    Combined,
}

impl fmt::Display for ControllerMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ControllerMode::Low => "low",
            ControllerMode::Combined => "combined",
        })
    }
}

impl FromStr for ControllerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "low" => Ok(ControllerMode::Low),
            "combined" => Ok(ControllerMode::Combined),
            other => Err(format!("unknown mode `{other}` (expected low or combined)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SupervisorConfig {
    /// Lateral error gain, 1/(m·s).
    pub k_y: f64,
    /// Heading error gain, 1/s.
    pub k_theta: f64,
    /// Safety factor on the estimated traction ceiling.
    pub beta: f64,
    pub slip_threshold: f64,
    /// Slip must persist longer than this before it counts as an event, s.
    pub debounce: f64,
    /// Adapted limits relax after this long without slip, s.
    pub relax_after: f64,
    /// Friction estimate filter time constant, s.
    pub mu_filter_tau: f64,
    /// Friction coefficient assumed before any slip is seen.
    pub mu_initial: f64,
    /// Relative drop of the traction ceiling that triggers another replan.
    pub replan_drop: f64,
    /// Below this ceiling (m/s²) no motion is planned.
    pub min_ceiling: f64,
    /// Distance from the path end at which the goal counts as reached, m.
    pub goal_tolerance: f64,
    /// Speed below which the robot counts as stopped, m/s.
    pub stop_speed: f64,
    pub max_goal_replans: usize,
}

impl Default for SupervisorConfig {
    fn default() -> Self {
        Self {
            k_y: 2.0,
            k_theta: 3.0,
            beta: 0.8,
            slip_threshold: 0.05,
            debounce: 0.05,
            relax_after: 2.0,
            mu_filter_tau: 0.2,
            mu_initial: 0.8,
            replan_drop: 0.1,
            min_ceiling: 0.05,
            goal_tolerance: 0.001,
            stop_speed: 0.01,
            max_goal_replans: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackGains {
    pub k_y: f64,
    pub k_theta: f64,
}

/// Output of [`reference_generator`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub rates: WheelRates<f64>,
    pub u: f64,
    pub r: f64,
    /// Path pose at the scheduled arc length.
    pub pose: Pose<f64>,
    /// Scheduled arc length along the planned path.
    pub s: f64,
    pub v: f64,
    /// Yaw-rate correction after rate limiting.
    pub correction: f64,
}

/// Lateral and heading error of `measured` relative to the path pose `reference`.
///
/// Positive lateral error means the path lies to the left of the robot.
pub fn tracking_errors(reference: &Pose<f64>, measured: &Pose<f64>) -> (f64, f64) {
    let (s, c) = reference.theta.sin_cos();
    let e_lat = s * (measured.x - reference.x) - c * (measured.y - reference.y);
    let e_theta = wrap_angle(reference.theta - measured.theta);
    (e_lat, e_theta)
}

/// Feed-forward `(u, r) = (v, v·κ)` from the plan plus a rate-limited
/// yaw-rate correction toward the scheduled path point.
#[allow(clippy::too_many_arguments)]
pub fn reference_generator(
    trajectory: &TrajectoryPlan<f64>,
    path: &PathSpec<f64>,
    t: f64,
    measured: &Pose<f64>,
    geom: &GeometryParams<f64>,
    limits: &MotionLimits<f64>,
    gains: FeedbackGains,
    prev_correction: f64,
    period: f64,
) -> Result<Reference, PlanError> {
    let sample = trajectory.sample(t)?;
    let s = sample.s.min(path.total_length());
    let pose = path.pose_at_arclength(s).map_err(|_| PlanError::OutOfRange {
        t,
        duration: trajectory.duration(),
    })?;
    let kappa = path.sections()[path.section_index(s)].curvature();
    let (e_lat, e_theta) = tracking_errors(&pose, measured);
    let target = if sample.v > 0.0 {
        gains.k_y * e_lat + gains.k_theta * e_theta
    } else {
        0.0
    };
    let step = limits.alpha_max * period;
    let correction = prev_correction + (target - prev_correction).clamp(-step, step);
    let u = sample.v.clamp(-limits.v_cap, limits.v_cap);
    let r = (sample.v * kappa + correction).clamp(-limits.omega_max, limits.omega_max);
    Ok(Reference {
        rates: inverse_kinematics(u, r, geom),
        u,
        r,
        pose,
        s,
        v: sample.v,
        correction,
    })
}

/// Normalised mismatch between wheel surface speed and ground speed; 0 is pure rolling.
pub fn slip_ratio(wheel_speed: f64, ground_speed: f64) -> f64 {
    let scale = wheel_speed.abs().max(ground_speed.abs());
    if scale < 1e-3 {
        0.0
    } else {
        ((wheel_speed - ground_speed).abs() / scale).min(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SlipMetrics {
    pub ratio_r: f64,
    pub ratio_l: f64,
    /// Sideways speed of the axle midpoint, m/s.
    pub lateral: f64,
    /// Distance between dead-reckoned and measured pose, m.
    pub deviation: f64,
    pub event: bool,
    pub onset: Option<f64>,
}

impl SlipMetrics {
    pub fn max_ratio(&self) -> f64 {
        self.ratio_r.max(self.ratio_l)
    }
}

/// Instantaneous slip quantities; the event flag is left to [`SlipDetector`].
pub fn slip_detect(
    rates: WheelRates<f64>,
    twist: &BodyTwist<f64>,
    odometry: &Pose<f64>,
    measured: &Pose<f64>,
    geom: &GeometryParams<f64>,
) -> SlipMetrics {
    let half = 0.5 * twist.r * geom.track_width;
    SlipMetrics {
        ratio_r: slip_ratio(geom.wheel_radius * rates.omega_r, twist.u + half),
        ratio_l: slip_ratio(geom.wheel_radius * rates.omega_l, twist.u - half),
        lateral: (twist.v - twist.r * geom.l_r).abs(),
        deviation: odometry.distance_to(measured),
        event: false,
        onset: None,
    }
}

/// Debounces the slip ratio into events.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlipDetector {
    pub threshold: f64,
    pub debounce: f64,
    above_since: Option<f64>,
    onset: Option<f64>,
}

impl SlipDetector {
    pub fn new(threshold: f64, debounce: f64) -> Self {
        Self {
            threshold,
            debounce,
            above_since: None,
            onset: None,
        }
    }

    /// Returns `(event active, event started at this call)`.
    pub fn update(&mut self, t: f64, ratio: f64) -> (bool, bool) {
        if ratio > self.threshold {
            let since = *self.above_since.get_or_insert(t);
            if self.onset.is_none() && t - since > self.debounce + 1e-9 {
                self.onset = Some(t);
                return (true, true);
            }
        } else {
            self.above_since = None;
            self.onset = None;
        }
        (self.onset.is_some(), false)
    }

    pub fn onset(&self) -> Option<f64> {
        self.onset
    }
}

/// Friction coefficient implied by a realised traction force.
pub fn mu_estimate(force: f64, normal: f64) -> f64 {
    if normal > 0.0 {
        force.abs() / normal
    } else {
        0.0
    }
}

/// First-order filtered friction estimate, bounded by the initial assumption.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuEstimator {
    pub value: f64,
    pub initial: f64,
    pub tau: f64,
}

impl MuEstimator {
    pub fn new(initial: f64, tau: f64) -> Self {
        Self { value: initial, initial, tau }
    }

    /// At an event onset the estimate drops straight to the sample; later
    /// samples of the same event are low-pass filtered.
    pub fn update(&mut self, sample: f64, onset: bool, dt: f64) {
        if onset {
            self.value = self.value.min(sample);
        } else {
            let alpha = 1.0 - (-dt / self.tau).exp();
            self.value += alpha * (sample - self.value);
        }
        self.value = self.value.clamp(0.0, self.initial);
    }

    pub fn reset(&mut self) {
        self.value = self.initial;
    }
}

/// Acceleration the driven axle can sustain: `β·μ̂·g` scaled by the share of weight it carries.
pub fn traction_ceiling(mu: f64, beta: f64, gravity: f64, load_share: f64) -> f64 {
    beta * mu * gravity * load_share
}

/// Limits with acceleration and deceleration capped by `ceiling`.
pub fn scaled_limits(limits: &MotionLimits<f64>, ceiling: f64) -> MotionLimits<f64> {
    MotionLimits {
        a_max: limits.a_max.min(ceiling),
        d_max: limits.d_max.min(ceiling),
        ..*limits
    }
}

/// Highest speed on an arc whose centripetal acceleration stays under `ceiling`.
pub fn arc_speed_cap(ceiling: f64, radius: f64) -> f64 {
    (ceiling * radius).sqrt()
}

/// Current traction adaptation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptationState {
    pub mu_hat: f64,
    /// Ceiling currently applied to the plan; `None` while running on configured limits.
    pub ceiling: Option<f64>,
    pub limits: MotionLimits<f64>,
    pub replans: usize,
}

/// Folds a new friction estimate into the adaptation. Within an episode the
/// applied ceiling only decreases. Returns whether the remaining path must be replanned.
pub fn traction_adapt(
    state: &AdaptationState,
    mu_hat: f64,
    base: &MotionLimits<f64>,
    cfg: &SupervisorConfig,
    gravity: f64,
    load_share: f64,
) -> (AdaptationState, bool) {
    let ceiling = traction_ceiling(mu_hat, cfg.beta, gravity, load_share);
    let mut next = *state;
    next.mu_hat = mu_hat;
    let replan = match state.ceiling {
        None => true,
        Some(applied) => ceiling < applied * (1.0 - cfg.replan_drop),
    };
    if replan {
        let applied = state.ceiling.map_or(ceiling, |c| c.min(ceiling));
        next.ceiling = Some(applied);
        next.limits = scaled_limits(base, applied);
    }
    (next, replan)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleInfo {
    pub geom: GeometryParams<f64>,
    pub mass: f64,
    pub gravity: f64,
    /// Sum of the driven wheels' normal loads, N.
    pub driven_load: f64,
    /// Rotational inertia of one wheel and its drivetrain, kg·m².
    pub drivetrain_inertia: f64,
}

impl VehicleInfo {
    pub fn load_share(&self) -> f64 {
        self.driven_load / (self.mass * self.gravity)
    }
}

/// Controller inputs for one tick. `pose` is the tracked point; `twist` is at the centre of gravity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub t: f64,
    pub pose: Pose<f64>,
    pub twist: BodyTwist<f64>,
    pub omega_r: f64,
    pub omega_l: f64,
    /// Torques applied over the previous control period.
    pub torques: WheelTorques<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Command {
    pub rates: WheelRates<f64>,
    pub u: f64,
    pub r: f64,
    /// Scheduled reference point on the path.
    pub reference: Pose<f64>,
    pub planned_v: f64,
    pub scheduled_s: f64,
    /// Wheel estimators should not learn from this tick.
    pub freeze_estimation: bool,
    /// The current plan has run out.
    pub plan_finished: bool,
    pub metrics: Option<SlipMetrics>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SupervisorEvent {
    SlipOnset { t: f64, mu_hat: f64 },
    Replan { t: f64, s: f64, v: f64, a_max: f64 },
    Emergency { t: f64, v: f64, reason: String },
    Relaxed { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Tracking,
    /// Straight-line stop at maximum deceleration.
    Emergency { t0: f64, v0: f64, s0: f64, decel: f64 },
    /// Stopped, waiting for a feasible plan.
    Holding { s: f64 },
}

pub struct Supervisor {
    cfg: SupervisorConfig,
    mode: ControllerMode,
    vehicle: VehicleInfo,
    period: f64,
    path: PathSpec<f64>,
    requested: Vec<f64>,
    base_limits: MotionLimits<f64>,
    adaptation: AdaptationState,
    trajectory: TrajectoryPlan<f64>,
    plan_path: PathSpec<f64>,
    plan_offset: f64,
    plan_t0: f64,
    phase: Phase,
    correction: f64,
    detector: SlipDetector,
    mu: MuEstimator,
    last_slip: Option<f64>,
    prev_rates: Option<WheelRates<f64>>,
    odometry: Pose<f64>,
    goal_replans: usize,
    events: Vec<SupervisorEvent>,
}

impl Supervisor {
    /// Plans the whole path from rest.
    pub fn new(
        path: PathSpec<f64>,
        requested: Vec<f64>,
        limits: MotionLimits<f64>,
        mode: ControllerMode,
        cfg: SupervisorConfig,
        vehicle: VehicleInfo,
        period: f64,
    ) -> Result<Self, PlanError> {
        let trajectory = plan(&path, &requested, &limits, 0.0, 0.0)?;
        Ok(Self {
            detector: SlipDetector::new(cfg.slip_threshold, cfg.debounce),
            mu: MuEstimator::new(cfg.mu_initial, cfg.mu_filter_tau),
            adaptation: AdaptationState {
                mu_hat: cfg.mu_initial,
                ceiling: None,
                limits,
                replans: 0,
            },
            odometry: path.start(),
            plan_path: path.clone(),
            cfg,
            mode,
            vehicle,
            period,
            path,
            requested,
            base_limits: limits,
            trajectory,
            plan_offset: 0.0,
            plan_t0: 0.0,
            phase: Phase::Tracking,
            correction: 0.0,
            last_slip: None,
            prev_rates: None,
            goal_replans: 0,
            events: Vec::new(),
        })
    }

    pub fn initial_plan(&self) -> &TrajectoryPlan<f64> {
        &self.trajectory
    }

    pub fn replans(&self) -> usize {
        self.adaptation.replans
    }

    pub fn events(&self) -> &[SupervisorEvent] {
        &self.events
    }

    pub fn adaptation(&self) -> &AdaptationState {
        &self.adaptation
    }

    pub fn mu_hat(&self) -> f64 {
        self.mu.value
    }

    pub fn in_emergency(&self) -> bool {
        matches!(self.phase, Phase::Emergency { .. })
    }

    fn plan_time(&self, t: f64) -> f64 {
        (t - self.plan_t0).clamp(0.0, self.trajectory.duration())
    }

    fn scheduled(&self, t: f64) -> (f64, f64) {
        match self.trajectory.sample(self.plan_time(t)) {
            Ok(s) => (self.plan_offset + s.s, s.v),
            Err(_) => (self.plan_offset + self.trajectory.total_length(), 0.0),
        }
    }

    fn robot_arclength(&self, pose: &Pose<f64>) -> f64 {
        self.path.nearest_arclength(pose.x, pose.y)
    }

    /// Replans the path beyond `s` starting at speed `v`.
    fn replan(&mut self, t: f64, s: f64, v: f64) -> Result<(), PlanError> {
        let total = self.path.total_length();
        let s = s.clamp(0.0, total);
        if total - s < 1e-6 {
            return Err(PlanError::InvalidBoundary { speed: v });
        }
        if !self.adaptation.limits.is_valid() {
            return Err(PlanError::InvalidLimits);
        }
        let (rest, first) = self.path.remainder(s).map_err(|_| PlanError::OutOfRange { t, duration: 0.0 })?;
        let mut requested: Vec<f64> = rest
            .sections()
            .iter()
            .zip(&self.requested[first..])
            .map(|(section, &req)| match (section, self.adaptation.ceiling) {
                (PathSection::Arc { radius, .. }, Some(c)) => req.min(arc_speed_cap(c, *radius)),
                _ => req,
            })
            .collect();
        if requested[0] < v {
            requested[0] = v;
        }
        let trajectory = plan(&rest, &requested, &self.adaptation.limits, v, 0.0)?;
        self.trajectory = trajectory;
        self.plan_path = rest;
        self.plan_offset = s;
        self.plan_t0 = t;
        self.phase = Phase::Tracking;
        self.adaptation.replans += 1;
        self.events.push(SupervisorEvent::Replan {
            t,
            s,
            v,
            a_max: self.adaptation.limits.a_max,
        });
        Ok(())
    }

    fn enter_emergency(&mut self, t: f64, s: f64, v: f64, reason: String) {
        let decel = self.adaptation.limits.d_max.min(self.base_limits.d_max);
        self.events.push(SupervisorEvent::Emergency { t, v, reason });
        self.correction = 0.0;
        self.phase = if v > 0.0 {
            Phase::Emergency { t0: t, v0: v, s0: s, decel }
        } else {
            Phase::Holding { s }
        };
    }

    /// Friction coefficient under the sliding wheels, from the wheel equation
    /// `F = (τ − I_w·ω̇)/R`; the weakest wheel wins.
    fn traction_sample(&self, sm: &SlipMetrics, m: &Measurement, prev: &WheelRates<f64>) -> Option<f64> {
        let v = &self.vehicle;
        let load = 0.5 * v.driven_load;
        [
            (sm.ratio_r, m.torques.tau_r, m.omega_r - prev.omega_r),
            (sm.ratio_l, m.torques.tau_l, m.omega_l - prev.omega_l),
        ]
        .into_iter()
        .filter(|(ratio, _, _)| *ratio > self.cfg.slip_threshold)
        .map(|(_, tau, dw)| {
            let force = (tau - v.drivetrain_inertia * dw / self.period) / v.geom.wheel_radius;
            mu_estimate(force, load)
        })
        .reduce(f64::min)
    }

    fn ceiling_allows_motion(&self) -> bool {
        self.adaptation.ceiling.is_none_or(|c| c >= self.cfg.min_ceiling)
    }

    pub fn tick(&mut self, m: &Measurement) -> Command {
        let t = m.t;
        let geom = self.vehicle.geom;
        let rates = WheelRates {
            omega_r: m.omega_r,
            omega_l: m.omega_l,
        };
        let mut metrics = None;
        let mut freeze = false;

        if self.mode == ControllerMode::Combined {
            if let Ok(p) = integrate_pose(&self.odometry, &crate::kinematics::forward_kinematics(rates, &geom), self.period) {
                self.odometry = p;
            }
            let mut sm = slip_detect(rates, &m.twist, &self.odometry, &m.pose, &geom);
            let (event, onset) = self.detector.update(t, sm.max_ratio());
            sm.event = event;
            sm.onset = self.detector.onset();
            freeze = sm.max_ratio() > self.cfg.slip_threshold || event;

            if event {
                self.last_slip = Some(t);
                if let Some(prev) = self.prev_rates {
                    if let Some(sample) = self.traction_sample(&sm, m, &prev) {
                        self.mu.update(sample, onset, self.period);
                    }
                }
                if onset {
                    self.events.push(SupervisorEvent::SlipOnset { t, mu_hat: self.mu.value });
                }
                let (next, replan) = traction_adapt(
                    &self.adaptation,
                    self.mu.value,
                    &self.base_limits,
                    &self.cfg,
                    self.vehicle.gravity,
                    self.vehicle.load_share(),
                );
                self.adaptation = next;
                if replan {
                    self.adapt_plan(t, &m.pose);
                }
            } else if self.adaptation.ceiling.is_some() && self.last_slip.is_some_and(|ls| t - ls >= self.cfg.relax_after) {
                self.adaptation.ceiling = None;
                self.adaptation.limits = self.base_limits;
                self.mu.reset();
                self.adaptation.mu_hat = self.mu.value;
                self.events.push(SupervisorEvent::Relaxed { t });
                self.adapt_plan(t, &m.pose);
            }
            metrics = Some(sm);
        }
        self.prev_rates = Some(rates);

        let speed = m.twist.u.hypot(m.twist.v);
        if self.mode == ControllerMode::Combined {
            match self.phase {
                Phase::Emergency { t0, v0, decel, .. } => {
                    let v_cmd = (v0 - decel * (t - t0)).max(0.0);
                    if v_cmd == 0.0 && speed < self.cfg.stop_speed {
                        let s = self.robot_arclength(&m.pose);
                        self.phase = Phase::Holding { s };
                    }
                }
                Phase::Holding { .. } => {}
                Phase::Tracking => {
                    let finished = self.plan_time(t) >= self.trajectory.duration();
                    let s_robot = self.robot_arclength(&m.pose);
                    let short = self.path.total_length() - s_robot;
                    let end = self.path.end_pose();
                    let far = (m.pose.x - end.x).hypot(m.pose.y - end.y) > self.cfg.goal_tolerance;
                    // only after slip: without it both modes must behave identically
                    let slipped = self.last_slip.is_some();
                    if slipped
                        && finished
                        && speed < self.cfg.stop_speed
                        && far
                        && short > self.cfg.goal_tolerance
                        && self.goal_replans < self.cfg.max_goal_replans
                    {
                        self.goal_replans += 1;
                        if self.ceiling_allows_motion() {
                            let _ = self.replan(t, s_robot, 0.0);
                        }
                    }
                }
            }
            if let Phase::Holding { .. } = self.phase {
                if self.ceiling_allows_motion() {
                    let s = self.robot_arclength(&m.pose);
                    let _ = self.replan(t, s, 0.0);
                }
            }
        }

        match self.phase {
            Phase::Tracking => {
                let tp = self.plan_time(t);
                let gains = FeedbackGains {
                    k_y: self.cfg.k_y,
                    k_theta: self.cfg.k_theta,
                };
                let reference = reference_generator(
                    &self.trajectory,
                    &self.plan_path,
                    tp,
                    &m.pose,
                    &geom,
                    &self.base_limits,
                    gains,
                    self.correction,
                    self.period,
                )
                .expect("plan time clamped to the plan duration");
                self.correction = reference.correction;
                Command {
                    rates: reference.rates,
                    u: reference.u,
                    r: reference.r,
                    reference: reference.pose,
                    planned_v: reference.v,
                    scheduled_s: self.plan_offset + reference.s,
                    freeze_estimation: freeze,
                    plan_finished: tp >= self.trajectory.duration(),
                    metrics,
                }
            }
            Phase::Emergency { t0, v0, s0, decel } => {
                let dt = (t - t0).min(v0 / decel);
                let v = (v0 - decel * dt).max(0.0);
                let s = (s0 + v0 * dt - 0.5 * decel * dt * dt).min(self.path.total_length());
                self.stopped_command(v, s, freeze, metrics)
            }
            Phase::Holding { s } => self.stopped_command(0.0, s, freeze, metrics),
        }
    }

    fn stopped_command(&self, v: f64, s: f64, freeze: bool, metrics: Option<SlipMetrics>) -> Command {
        let reference = self.path.pose_at_arclength(s.clamp(0.0, self.path.total_length())).unwrap_or(self.path.end_pose());
        Command {
            rates: inverse_kinematics(v, 0.0, &self.vehicle.geom),
            u: v,
            r: 0.0,
            reference,
            planned_v: v,
            scheduled_s: s,
            freeze_estimation: freeze,
            plan_finished: false,
            metrics,
        }
    }

    /// Replans after a change of the applied limits, or stops when that is impossible.
    fn adapt_plan(&mut self, t: f64, pose: &Pose<f64>) {
        match self.phase {
            Phase::Tracking => {
                let (s_sched, v) = self.scheduled(t);
                if self.plan_time(t) >= self.trajectory.duration() {
                    return;
                }
                let s = self.robot_arclength(pose);
                if !self.ceiling_allows_motion() {
                    self.enter_emergency(t, s_sched, v, "traction ceiling below minimum".into());
                    return;
                }
                if let Err(e) = self.replan(t, s, v) {
                    self.enter_emergency(t, s_sched, v, e.to_string());
                }
            }
            Phase::Emergency { .. } | Phase::Holding { .. } => {}
        }
    }
}
