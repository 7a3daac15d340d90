//! The fixed-step simulation loop and mode comparison.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::adaptive_control::{cross_coupling_correction, ControllerError, WheelController};
use crate::dynamics::{normal_loads, step_dynamics, DynError, DynState, WheelTorques};
use crate::kinematics::{BodyTwist, Pose};
use crate::supervisor::{ControllerMode, Measurement, Supervisor, SupervisorEvent, VehicleInfo};
use crate::velocity_trajectory::PlanError;

use super::config::{Scenario, TrackPoint};
use super::trace::{format_value, TraceRow, SLIP_LATERAL, SLIP_LEFT, SLIP_RIGHT};

/// Along-track distance from the end of the path within which a stopped robot has arrived.
pub const COMPLETION_DISTANCE: f64 = 1e-3;
/// Speed below which the robot counts as stopped, m/s.
pub const STOP_SPEED: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error("infeasible plan: {0}")]
    Plan(#[from] PlanError),
    #[error("controller: {0}")]
    Controller(#[from] ControllerError),
    #[error("dynamics at t = {t:.3} s: {source}")]
    Dynamics { t: f64, source: DynError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Stopped within [`COMPLETION_DISTANCE`] of the path end.
    Completed,
    /// The plan ran out and the robot stayed stopped short of the goal for the settle time.
    Stalled,
    /// Hit the duration cap.
    DurationCap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub name: String,
    pub mode: ControllerMode,
    pub seed: u64,
    pub termination: Termination,
    pub completion_time: Option<f64>,
    pub ticks: usize,
    pub final_time: f64,
    pub max_error: f64,
    pub mean_error: f64,
    pub final_error: f64,
    /// Time with at least one contact sliding, s.
    pub slip_time: f64,
    pub replans: usize,
    pub emergencies: usize,
    pub planned_duration: f64,
    pub max_planned_speed: f64,
    pub max_friction_excess: f64,
    pub input_work: f64,
    pub dissipation: f64,
    /// Smallest dissipation of any single physics step, J.
    pub min_step_dissipation: f64,
    /// `input work − ΔKE − dissipation`, J.
    pub energy_residual: f64,
    pub redesigns: usize,
    pub design_failures: usize,
    pub final_mu_hat: Option<f64>,
}

impl Summary {
    pub fn completed(&self) -> bool {
        self.termination == Termination::Completed
    }

    /// Key-value text, one `key = value` per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let termination = match self.termination {
            Termination::Completed => "completed",
            Termination::Stalled => "stalled",
            Termination::DurationCap => "duration_cap",
        };
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), format_value);
        let _ = writeln!(out, "name = {}", self.name);
        let _ = writeln!(out, "mode = {}", self.mode);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "termination = {termination}");
        let _ = writeln!(out, "completed = {}", self.completed());
        let _ = writeln!(out, "completion_time = {}", opt(self.completion_time));
        let _ = writeln!(out, "ticks = {}", self.ticks);
        let _ = writeln!(out, "final_time = {}", format_value(self.final_time));
        let _ = writeln!(out, "max_displacement_error = {}", format_value(self.max_error));
        let _ = writeln!(out, "mean_displacement_error = {}", format_value(self.mean_error));
        let _ = writeln!(out, "final_displacement_error = {}", format_value(self.final_error));
        let _ = writeln!(out, "slip_time = {}", format_value(self.slip_time));
        let _ = writeln!(out, "replans = {}", self.replans);
        let _ = writeln!(out, "emergencies = {}", self.emergencies);
        let _ = writeln!(out, "planned_duration = {}", format_value(self.planned_duration));
        let _ = writeln!(out, "max_planned_speed = {}", format_value(self.max_planned_speed));
        let _ = writeln!(out, "max_friction_excess = {}", format_value(self.max_friction_excess));
        let _ = writeln!(out, "input_work = {}", format_value(self.input_work));
        let _ = writeln!(out, "dissipation = {}", format_value(self.dissipation));
        let _ = writeln!(out, "min_step_dissipation = {}", format_value(self.min_step_dissipation));
        let _ = writeln!(out, "energy_residual = {}", format_value(self.energy_residual));
        let _ = writeln!(out, "redesigns = {}", self.redesigns);
        let _ = writeln!(out, "design_failures = {}", self.design_failures);
        let _ = writeln!(out, "final_mu_hat = {}", opt(self.final_mu_hat));
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub trace: Vec<TraceRow>,
    pub summary: Summary,
    pub events: Vec<SupervisorEvent>,
}

pub fn events_to_text(events: &[SupervisorEvent]) -> String {
    let mut out = String::from("t,event,detail\n");
    for e in events {
        let _ = match e {
            SupervisorEvent::SlipOnset { t, mu_hat } => {
                writeln!(out, "{},slip_onset,mu_hat={}", format_value(*t), format_value(*mu_hat))
            }
            SupervisorEvent::Replan { t, s, v, a_max } => writeln!(
                out,
                "{},replan,s={} v={} a_max={}",
                format_value(*t),
                format_value(*s),
                format_value(*v),
                format_value(*a_max)
            ),
            SupervisorEvent::Emergency { t, v, reason } => {
                writeln!(out, "{},emergency,v={} {}", format_value(*t), format_value(*v), reason.replace(',', ";"))
            }
            SupervisorEvent::Relaxed { t } => writeln!(out, "{},relaxed,", format_value(*t)),
        };
    }
    out
}

/// Gaussian measurement noise; draws nothing for zero deviations.
struct Noise {
    rng: ChaCha8Rng,
}

impl Noise {
    fn sample(&mut self, sigma: f64) -> f64 {
        if sigma > 0.0 {
            Normal::new(0.0, sigma).expect("positive deviation").sample(&mut self.rng)
        } else {
            0.0
        }
    }
}

fn tracked_offset(scenario: &Scenario) -> f64 {
    match scenario.simulation.track_point {
        TrackPoint::RearAxle => -scenario.params.geom.l_r,
        TrackPoint::CentreOfGravity => 0.0,
    }
}

/// Signed along-track distance still to go; negative once past the end.
fn distance_to_go(scenario: &Scenario, pose: &Pose<f64>) -> f64 {
    let path = &scenario.path;
    let total = path.total_length();
    let s = path.nearest_arclength(pose.x, pose.y);
    if s < total {
        return total - s;
    }
    let end = path.end_pose();
    -((pose.x - end.x) * end.theta.cos() + (pose.y - end.y) * end.theta.sin())
}

/// Runs one scenario in `mode` with the noise generator seeded by `seed`.
pub fn run_scenario(scenario: &Scenario, mode: ControllerMode, seed: u64) -> Result<RunOutput, RunError> {
    let params = &scenario.params;
    let geom = params.geom;
    let sim = &scenario.simulation;
    let period = sim.control_period;
    let dt = period / scenario.substeps as f64;
    let offset = tracked_offset(scenario);

    let (load_r, load_l) = normal_loads(params).map_err(|source| RunError::Dynamics { t: 0.0, source })?;
    let vehicle = VehicleInfo {
        geom,
        mass: params.mass,
        gravity: params.gravity,
        driven_load: load_r + load_l,
        drivetrain_inertia: params.drivetrain_inertia,
    };
    let mut supervisor = Supervisor::new(
        scenario.path.clone(),
        scenario.section_v_max.clone(),
        scenario.limits,
        mode,
        scenario.controller.supervisor,
        vehicle,
        period,
    )?;
    let planned_duration = supervisor.initial_plan().duration();
    let nominal = scenario.nominal_wheel_model();
    let cfg = scenario.wheel_controller_config();
    let mut ctrl_r = WheelController::new(cfg, nominal)?;
    let mut ctrl_l = WheelController::new(cfg, nominal)?;
    let limit = cfg.torque_limit;
    let k_c = scenario.controller.cross_coupling;

    let mut noise = Noise {
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    let sigma = scenario.noise;

    let start = scenario.path.start().offset_forward(-offset);
    let mut state = DynState::at_rest(start);
    let initial_energy = state.body_energy(params) + state.wheel_energy(params);

    let max_ticks = (sim.duration / period).floor() as usize;
    let mut trace = Vec::with_capacity(max_ticks.min(1 << 20));
    let mut termination = Termination::DurationCap;
    let mut completion_time = None;
    let mut stalled_since: Option<f64> = None;
    let mut slip_time = 0.0;
    let mut input_work = 0.0;
    let mut dissipation = 0.0;
    let mut min_step_dissipation = f64::INFINITY;
    let mut max_excess = f64::NEG_INFINITY;
    let mut final_time = 0.0;
    let mut applied = WheelTorques { tau_r: 0.0, tau_l: 0.0 };

    for k in 0..max_ticks {
        let t = k as f64 * period;
        final_time = t;
        let true_point = state.pose.offset_forward(offset);
        let meas = Measurement {
            t,
            pose: Pose::new(
                true_point.x + noise.sample(sigma.position),
                true_point.y + noise.sample(sigma.position),
                true_point.theta + noise.sample(sigma.heading),
            ),
            twist: BodyTwist::new(
                state.twist.u + noise.sample(sigma.speed),
                state.twist.v + noise.sample(sigma.speed),
                state.twist.r + noise.sample(sigma.yaw_rate),
            ),
            omega_r: state.omega_r + noise.sample(sigma.wheel_speed),
            omega_l: state.omega_l + noise.sample(sigma.wheel_speed),
            torques: applied,
        };

        let speed = state.twist.u.hypot(state.twist.v);
        let cmd = supervisor.tick(&meas);
        if cmd.plan_finished && speed < STOP_SPEED {
            if distance_to_go(scenario, &true_point).abs() <= COMPLETION_DISTANCE {
                termination = Termination::Completed;
                completion_time = Some(t);
                break;
            }
            let since = *stalled_since.get_or_insert(t);
            if t - since >= sim.settle_time {
                termination = Termination::Stalled;
                break;
            }
        } else {
            stalled_since = None;
        }

        let adapt = !cmd.freeze_estimation;
        let raw_r = ctrl_r.control(cmd.rates.omega_r, meas.omega_r, adapt);
        let raw_l = ctrl_l.control(cmd.rates.omega_l, meas.omega_l, adapt);
        let (dr, dl) = cross_coupling_correction(
            meas.omega_r - cmd.rates.omega_r,
            meas.omega_l - cmd.rates.omega_l,
            k_c,
        );
        let tau_r = (raw_r + dr).clamp(-limit, limit);
        let tau_l = (raw_l + dl).clamp(-limit, limit);
        ctrl_r.commit(tau_r);
        ctrl_l.commit(tau_l);

        let (cr, cl) = state.contact_points(&geom);
        let mu = scenario.surface.friction_at(cr).min(scenario.surface.friction_at(cl));
        let mut row = TraceRow {
            t,
            x: meas.pose.x,
            y: meas.pose.y,
            theta: meas.pose.theta,
            x_ref: cmd.reference.x,
            y_ref: cmd.reference.y,
            u: meas.twist.u,
            v: meas.twist.v,
            r: meas.twist.r,
            omega_r: meas.omega_r,
            omega_l: meas.omega_l,
            tau_r,
            tau_l,
            mu,
            v_planned: cmd.planned_v,
            displacement_error: (meas.pose.x - cmd.reference.x).hypot(meas.pose.y - cmd.reference.y),
            ..TraceRow::default()
        };

        let torques = WheelTorques { tau_r, tau_l };
        applied = torques;
        for j in 0..scenario.substeps {
            let (next, report) = step_dynamics(&state, torques, &scenario.surface, params, dt).map_err(|source| {
                RunError::Dynamics {
                    t: t + j as f64 * dt,
                    source,
                }
            })?;
            state = next;
            row.f_xr += report.fx_r;
            row.f_xl += report.fx_l;
            input_work += report.input_work;
            dissipation += report.dissipation;
            min_step_dissipation = min_step_dissipation.min(report.dissipation);
            max_excess = max_excess.max(report.friction_excess);
            let mut flags = 0;
            if state.slip_r {
                flags |= SLIP_RIGHT;
            }
            if state.slip_l {
                flags |= SLIP_LEFT;
            }
            if state.slip_lateral {
                flags |= SLIP_LATERAL;
            }
            if flags != 0 {
                slip_time += dt;
            }
            row.slip_flags |= flags;
        }
        row.f_xr /= scenario.substeps as f64;
        row.f_xl /= scenario.substeps as f64;
        trace.push(row);
    }

    let n = trace.len();
    let errors = trace.iter().map(|r| r.displacement_error);
    let max_error = errors.clone().fold(0.0, f64::max);
    let mean_error = if n == 0 { 0.0 } else { errors.sum::<f64>() / n as f64 };
    let final_point = state.pose.offset_forward(offset);
    let end = scenario.path.end_pose();
    // after the loop the scheduled reference is the path end unless the run was cut short
    let final_error = match termination {
        Termination::DurationCap => trace.last().map_or(0.0, |r| r.displacement_error),
        _ => final_point.distance_to(&end),
    };
    let final_energy = state.body_energy(params) + state.wheel_energy(params);
    let events = supervisor.events().to_vec();
    let summary = Summary {
        name: scenario.name.clone(),
        mode,
        seed,
        termination,
        completion_time,
        ticks: n,
        final_time,
        max_error,
        mean_error,
        final_error,
        slip_time,
        replans: supervisor.replans(),
        emergencies: events
            .iter()
            .filter(|e| matches!(e, SupervisorEvent::Emergency { .. }))
            .count(),
        planned_duration,
        max_planned_speed: trace.iter().map(|r| r.v_planned).fold(0.0, f64::max),
        max_friction_excess: max_excess,
        input_work,
        dissipation,
        min_step_dissipation: if min_step_dissipation.is_finite() { min_step_dissipation } else { 0.0 },
        energy_residual: input_work - (final_energy - initial_energy) - dissipation,
        redesigns: ctrl_r.redesigns() + ctrl_l.redesigns(),
        design_failures: ctrl_r.design_failures() + ctrl_l.design_failures(),
        final_mu_hat: (mode == ControllerMode::Combined).then(|| supervisor.mu_hat()),
    };
    Ok(RunOutput { trace, summary, events })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub low: RunOutput,
    pub combined: RunOutput,
}

impl Comparison {
    /// Final displacement error of low mode over that of combined mode.
    pub fn error_ratio(&self) -> f64 {
        let (low, combined) = (self.low.summary.final_error, self.combined.summary.final_error);
        if low == combined {
            1.0
        } else {
            low / combined
        }
    }

    pub fn combined_wins(&self) -> bool {
        self.combined.summary.final_error <= self.low.summary.final_error
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (label, run) in [("low", &self.low), ("combined", &self.combined)] {
            let _ = writeln!(out, "[{label}]");
            out.push_str(&run.summary.to_text());
            out.push('\n');
        }
        let _ = writeln!(out, "[comparison]");
        let _ = writeln!(out, "error_ratio = {}", format_value(self.error_ratio()));
        let winner = if self.combined_wins() { "combined" } else { "low" };
        let _ = writeln!(out, "better_mode = {winner}");
        let both_failed = !self.low.summary.completed() && !self.combined.summary.completed();
        let _ = writeln!(out, "neither_completed = {both_failed}");
        out
    }
}

/// Runs the scenario in both modes on separate threads.
pub fn compare_modes(scenario: &Scenario, seed: u64) -> Result<Comparison, RunError> {
    let (low, combined) = std::thread::scope(|s| {
        let low = s.spawn(|| run_scenario(scenario, ControllerMode::Low, seed));
        let combined = run_scenario(scenario, ControllerMode::Combined, seed);
        (low.join().expect("low-mode run panicked"), combined)
    });
    Ok(Comparison {
        low: low?,
        combined: combined?,
    })
}
