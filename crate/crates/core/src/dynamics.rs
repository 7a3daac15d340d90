//! Force-level motion model with Coulomb traction limits at the driving wheels.
//!
//! Three contact constraints couple the wheels to the ground:
//!
//! * right and left longitudinal rolling, `R·ω = u ± r·T/2`;
//! * lateral rolling of the rear axle, `v = r·L_R`.
//!
//! While a constraint sticks, its force is whatever keeps it satisfied at the
//! end of the step. A longitudinal force larger than `μ·N` saturates and the
//! wheel slides; the lateral force is limited to what is left of each wheel's
//! friction circle. Sliding constraints carry a constant-magnitude force
//! opposing the current slip until the slip velocity crosses zero, at which
//! point the step is split and the constraint is tried again as sticking.
//!
//! Velocities are advanced with the Coriolis coupling treated as a Cayley
//! rotation, so the work of the torques minus the change of kinetic energy
//! equals the friction dissipation exactly (to rounding).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{BodyTwist, GeometryParams, Pose, PoseIntegration};
use crate::linalg;
use crate::surface::SurfaceMap;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicParams<T> {
    /// kg
    pub mass: T,
    /// Yaw inertia about the centre of gravity, kg·m².
    pub yaw_inertia: T,
    /// Wheel, gearbox and rotor inertia reflected at one wheel, kg·m².
    pub drivetrain_inertia: T,
    pub geom: GeometryParams<T>,
    /// m/s²
    pub gravity: T,
    #[serde(default)]
    pub pose_integration: PoseIntegration,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WheelTorques<T> {
    pub tau_r: T,
    pub tau_l: T,
}

/// Full mechanical state. `pose` locates the centre of gravity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DynState<T> {
    pub pose: Pose<T>,
    pub twist: BodyTwist<T>,
    pub omega_r: T,
    pub omega_l: T,
    /// Longitudinal slip of the right wheel.
    pub slip_r: bool,
    pub slip_l: bool,
    /// Rear axle sliding sideways.
    pub slip_lateral: bool,
}

impl<T: Real> DynState<T> {
    pub fn at_rest(pose: Pose<T>) -> Self {
        Self {
            pose,
            ..Default::default()
        }
    }

    pub fn is_finite(&self) -> bool {
        self.pose.is_finite()
            && self.twist.u.is_finite()
            && self.twist.v.is_finite()
            && self.twist.r.is_finite()
            && self.omega_r.is_finite()
            && self.omega_l.is_finite()
    }

    /// Kinetic energy of the body alone.
    pub fn body_energy(&self, params: &DynamicParams<T>) -> T {
        let t = &self.twist;
        T::lit(0.5) * (params.mass * (t.u * t.u + t.v * t.v) + params.yaw_inertia * t.r * t.r)
    }

    pub fn wheel_energy(&self, params: &DynamicParams<T>) -> T {
        T::lit(0.5) * params.drivetrain_inertia * (self.omega_r * self.omega_r + self.omega_l * self.omega_l)
    }

    /// World positions of the right and left wheel contacts.
    pub fn contact_points(&self, geom: &GeometryParams<T>) -> ([T; 2], [T; 2]) {
        contact_points(&self.pose, geom)
    }
}

pub(crate) fn contact_points<T: Real>(cg: &Pose<T>, geom: &GeometryParams<T>) -> ([T; 2], [T; 2]) {
    let (s, c) = cg.theta.sin_cos();
    let axle = [cg.x - geom.l_r * c, cg.y - geom.l_r * s];
    let half = T::lit(0.5) * geom.track_width;
    (
        [axle[0] + half * s, axle[1] - half * c],
        [axle[0] - half * s, axle[1] + half * c],
    )
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynError {
    #[error("step {dt} s outside (0, {max}] s")]
    InvalidStep { dt: f64, max: f64 },
    #[error("invalid dynamic parameters: {0}")]
    InvalidParams(&'static str),
    #[error("state became non-finite")]
    NonFinite,
}

/// Largest accepted integration step.
pub const MAX_STEP: f64 = 0.01;
/// Slip speed below which a sliding contact is considered rolling again, m/s.
pub const RESTICK_BAND: f64 = 1e-6;

impl<T: Real> DynamicParams<T> {
    pub fn validate(&self) -> Result<(), DynError> {
        let pos = |v: T| v > T::zero() && v.is_finite();
        if !pos(self.mass) {
            return Err(DynError::InvalidParams("mass must be positive"));
        }
        if !pos(self.yaw_inertia) {
            return Err(DynError::InvalidParams("yaw inertia must be positive"));
        }
        if !pos(self.drivetrain_inertia) {
            return Err(DynError::InvalidParams("drivetrain inertia must be positive"));
        }
        if !pos(self.gravity) {
            return Err(DynError::InvalidParams("gravity must be positive"));
        }
        if !self.geom.is_valid() {
            return Err(DynError::InvalidParams("geometry lengths must be positive"));
        }
        Ok(())
    }
}

/// Static wheel loads `(N_r, N_l)` from the moment balance about the castor contact.
pub fn normal_loads<T: Real>(params: &DynamicParams<T>) -> Result<(T, T), DynError> {
    let base = params.geom.l_f + params.geom.l_r;
    if !(base > T::zero()) {
        return Err(DynError::InvalidParams("wheelbase l_f + l_r must be positive"));
    }
    let axle = params.mass * params.gravity * params.geom.l_f / base;
    let each = T::lit(0.5) * axle;
    Ok((each, each))
}

/// Ground force a rolling wheel transmits for applied torque `tau_app` while
/// its contact accelerates at `wheel_accel`.
pub fn traction_demand<T: Real>(tau_app: T, wheel_accel: T, params: &DynamicParams<T>) -> T {
    let radius = params.geom.wheel_radius;
    (radius * tau_app - params.drivetrain_inertia * wheel_accel) / (radius * radius)
}

/// Contact forces and bookkeeping of one call to [`step_dynamics`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepReport<T> {
    /// Time-averaged longitudinal forces, N.
    pub fx_r: T,
    pub fx_l: T,
    /// Time-averaged lateral forces, N.
    pub fy_r: T,
    pub fy_l: T,
    pub mu_r: T,
    pub mu_l: T,
    /// Traction limits `μ·N` of each wheel, N.
    pub limit_r: T,
    pub limit_l: T,
    /// Largest `|F| − μN` seen over all sub-intervals; non-positive when the bound holds.
    pub friction_excess: T,
    /// `∫ τ·ω dt` over the step, J.
    pub input_work: T,
    /// Energy removed by sliding contacts, J.
    pub dissipation: T,
    pub substeps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Vel<T> {
    u: T,
    v: T,
    r: T,
    wr: T,
    wl: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Stick,
    /// Sliding with force sign `+1`/`-1`; `fresh` marks a slide that began in this sub-interval.
    Slide { positive: bool, fresh: bool },
}

impl Mode {
    fn sign<T: Real>(self) -> T {
        match self {
            Mode::Slide { positive: true, .. } => T::one(),
            Mode::Slide { positive: false, .. } => -T::one(),
            Mode::Stick => T::zero(),
        }
    }
}

struct Contact<'a, T> {
    params: &'a DynamicParams<T>,
    torques: WheelTorques<T>,
    limit: [T; 2],
}

impl<T: Real> Contact<'_, T> {
    fn propagate(&self, s: &Vel<T>, f: [T; 3], h: T) -> Vel<T> {
        let p = self.params;
        let half = T::lit(0.5);
        let c = half * h * s.r;
        let bu = s.u + c * s.v + h * (f[0] + f[1]) / p.mass;
        let bv = s.v - c * s.u + h * f[2] / p.mass;
        let det = T::one() + c * c;
        let moment = (f[0] - f[1]) * half * p.geom.track_width - p.geom.l_r * f[2];
        let radius = p.geom.wheel_radius;
        Vel {
            u: (bu + c * bv) / det,
            v: (bv - c * bu) / det,
            r: s.r + h * moment / p.yaw_inertia,
            wr: s.wr + h * (self.torques.tau_r - f[0] * radius) / p.drivetrain_inertia,
            wl: s.wl + h * (self.torques.tau_l - f[1] * radius) / p.drivetrain_inertia,
        }
    }

    /// Constraint velocities; a positive force on constraint `i` lowers `g[i]`.
    fn gaps(&self, s: &Vel<T>) -> [T; 3] {
        let g = &self.params.geom;
        let half_track = T::lit(0.5) * s.r * g.track_width;
        [
            g.wheel_radius * s.wr - (s.u + half_track),
            g.wheel_radius * s.wl - (s.u - half_track),
            g.l_r * s.r - s.v,
        ]
    }

    fn lateral_limits(&self, f: &[T; 3]) -> [T; 2] {
        [0, 1].map(|w| (self.limit[w] * self.limit[w] - f[w] * f[w]).max(T::zero()).sqrt())
    }

    /// Forces for fixed modes over a sub-interval of length `h`.
    fn forces(&self, s: &Vel<T>, modes: &[Mode; 3], h: T, lateral_guess: T) -> [T; 3] {
        let mut f = [T::zero(); 3];
        for w in 0..2 {
            if let m @ Mode::Slide { .. } = modes[w] {
                f[w] = m.sign::<T>() * self.limit[w];
            }
        }
        if let m @ Mode::Slide { .. } = modes[2] {
            f[2] = m.sign::<T>() * lateral_guess;
        }
        let active: Vec<usize> = (0..3).filter(|&i| modes[i] == Mode::Stick).collect();
        if active.is_empty() {
            return f;
        }
        // g_end is affine in the forces: g0 + G·f
        let g0 = self.gaps(&self.propagate(s, f, h));
        let cols: Vec<[T; 3]> = active
            .iter()
            .map(|&j| {
                let mut fj = f;
                fj[j] += T::one();
                let gj = self.gaps(&self.propagate(s, fj, h));
                [gj[0] - g0[0], gj[1] - g0[1], gj[2] - g0[2]]
            })
            .collect();
        let mut a: Vec<Vec<T>> = active.iter().map(|&i| cols.iter().map(|col| col[i]).collect()).collect();
        let mut b: Vec<T> = active.iter().map(|&i| -g0[i]).collect();
        if let Some(x) = linalg::solve(&mut a, &mut b, T::lit(1e-14)) {
            for (k, &i) in active.iter().enumerate() {
                f[i] += x[k];
            }
        }
        f
    }

    /// Settles stick/slide modes for a sub-interval, flipping sticking
    /// constraints whose force would leave the friction circle.
    fn resolve(&self, s: &Vel<T>, modes: &mut [Mode; 3], h: T) -> [T; 3] {
        let mut lateral = self.lateral_limits(&[T::zero(); 3]);
        let mut lateral_total = lateral[0] + lateral[1];
        let mut f = self.forces(s, modes, h, lateral_total);
        for _ in 0..16 {
            let mut changed = false;
            for w in 0..2 {
                if modes[w] == Mode::Stick && f[w].abs() > self.limit[w] {
                    modes[w] = Mode::Slide { positive: f[w] > T::zero(), fresh: true };
                    changed = true;
                }
            }
            lateral = self.lateral_limits(&f);
            let available = lateral[0] + lateral[1];
            match modes[2] {
                Mode::Stick if f[2].abs() > available => {
                    modes[2] = Mode::Slide { positive: f[2] > T::zero(), fresh: true };
                    changed = true;
                }
                Mode::Slide { .. } if (available - lateral_total).abs() > T::lit(1e-12) * (T::one() + available) => {
                    changed = true;
                }
                _ => {}
            }
            lateral_total = available;
            if !changed {
                break;
            }
            f = self.forces(s, modes, h, lateral_total);
        }
        self.clamp(&mut f, modes);
        f
    }

    /// Enforces the friction circles regardless of how the mode iteration ended.
    fn clamp(&self, f: &mut [T; 3], modes: &mut [Mode; 3]) {
        for w in 0..2 {
            if f[w].abs() > self.limit[w] {
                let positive = f[w] > T::zero();
                f[w] = if positive { self.limit[w] } else { -self.limit[w] };
                modes[w] = Mode::Slide { positive, fresh: true };
            }
        }
        let lateral = self.lateral_limits(f);
        let available = lateral[0] + lateral[1];
        if f[2].abs() > available {
            let positive = f[2] > T::zero();
            f[2] = if positive { available } else { -available };
            if modes[2] == Mode::Stick {
                modes[2] = Mode::Slide { positive, fresh: true };
            }
        }
    }

    /// Splits the lateral force between the wheels in proportion to their remaining capacity.
    fn lateral_split(&self, f: &[T; 3]) -> [T; 2] {
        let lateral = self.lateral_limits(f);
        let total = lateral[0] + lateral[1];
        if total > T::zero() {
            [f[2] * lateral[0] / total, f[2] * lateral[1] / total]
        } else {
            [T::zero(); 2]
        }
    }
}

/// Advances the state by `dt` seconds under constant wheel torques.
pub fn step_dynamics<T: Real>(
    state: &DynState<T>,
    torques: WheelTorques<T>,
    surface: &SurfaceMap<T>,
    params: &DynamicParams<T>,
    dt: T,
) -> Result<(DynState<T>, StepReport<T>), DynError> {
    if !(dt > T::zero() && dt <= T::lit(MAX_STEP)) {
        return Err(DynError::InvalidStep {
            dt: dt.as_f64(),
            max: MAX_STEP,
        });
    }
    if !state.is_finite() || !torques.tau_r.is_finite() || !torques.tau_l.is_finite() {
        return Err(DynError::NonFinite);
    }
    let (load_r, load_l) = normal_loads(params)?;
    let (cr, cl) = state.contact_points(&params.geom);
    let mu_r = surface.friction_at(cr);
    let mu_l = surface.friction_at(cl);
    let contact = Contact {
        params,
        torques,
        limit: [mu_r * load_r, mu_l * load_l],
    };

    let mut vel = Vel {
        u: state.twist.u,
        v: state.twist.v,
        r: state.twist.r,
        wr: state.omega_r,
        wl: state.omega_l,
    };
    let mut pose = state.pose;
    let slide_from = |flag: bool, gap: T| {
        if flag {
            Mode::Slide { positive: gap > T::zero(), fresh: false }
        } else {
            Mode::Stick
        }
    };
    let g_start = contact.gaps(&vel);
    let mut modes = [
        slide_from(state.slip_r, g_start[0]),
        slide_from(state.slip_l, g_start[1]),
        slide_from(state.slip_lateral, g_start[2]),
    ];

    let mut report = StepReport {
        mu_r,
        mu_l,
        limit_r: contact.limit[0],
        limit_l: contact.limit[1],
        friction_excess: T::neg_infinity(),
        ..Default::default()
    };
    let band = T::lit(RESTICK_BAND);
    let half = T::lit(0.5);
    let mut remaining = dt;
    let min_split = dt * T::lit(1e-12);
    let mut last = [T::zero(); 4];

    for iteration in 0..64 {
        if !(remaining > T::zero()) {
            break;
        }
        let g_now = contact.gaps(&vel);
        for i in 0..3 {
            match modes[i] {
                Mode::Slide { .. } if g_now[i].abs() <= band => modes[i] = Mode::Stick,
                Mode::Slide { positive, .. } => modes[i] = Mode::Slide { positive: g_now[i] > T::zero() || (g_now[i] == T::zero() && positive), fresh: false },
                Mode::Stick => {}
            }
        }

        let mut h = remaining;
        let mut f = contact.resolve(&vel, &mut modes, h);
        let mut next = contact.propagate(&vel, f, h);

        // a sliding contact whose slip velocity changes sign re-sticks at the crossing
        let crossed = |m: &[Mode; 3], end: &Vel<T>| -> Option<usize> {
            let g_end = contact.gaps(end);
            (0..3).find(|&i| matches!(m[i], Mode::Slide { fresh: false, .. }) && g_end[i] * m[i].sign::<T>() < T::zero())
        };
        let mut restick = None;
        if iteration < 63 {
            if let Some(first) = crossed(&modes, &next) {
                let lateral_now = |f: &[T; 3]| {
                    let l = contact.lateral_limits(f);
                    l[0] + l[1]
                };
                let fixed = modes;
                let mut earliest = (h, first);
                for i in 0..3 {
                    let Mode::Slide { fresh: false, .. } = fixed[i] else { continue };
                    let sign = fixed[i].sign::<T>();
                    if contact.gaps(&next)[i] * sign >= T::zero() {
                        continue;
                    }
                    let (mut lo, mut hi) = (T::zero(), h);
                    for _ in 0..60 {
                        let mid = half * (lo + hi);
                        let fm = contact.forces(&vel, &fixed, mid, lateral_now(&f));
                        let gm = contact.gaps(&contact.propagate(&vel, fm, mid));
                        if gm[i] * sign > T::zero() {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    if lo < earliest.0 {
                        earliest = (lo, i);
                    }
                }
                let (h_cross, which) = earliest;
                restick = Some(which);
                if h_cross <= min_split {
                    modes[which] = Mode::Stick;
                    continue;
                }
                h = h_cross;
                let mut fixed_modes = fixed;
                f = contact.forces(&vel, &fixed_modes, h, lateral_now(&f));
                contact.clamp(&mut f, &mut fixed_modes);
                next = contact.propagate(&vel, f, h);
            }
        }

        // bookkeeping with midpoint velocities
        let mid = Vel {
            u: half * (vel.u + next.u),
            v: half * (vel.v + next.v),
            r: half * (vel.r + next.r),
            wr: half * (vel.wr + next.wr),
            wl: half * (vel.wl + next.wl),
        };
        let g_mid = contact.gaps(&mid);
        report.input_work += h * (torques.tau_r * mid.wr + torques.tau_l * mid.wl);
        report.dissipation += h * (f[0] * g_mid[0] + f[1] * g_mid[1] + f[2] * g_mid[2]);
        let fy = contact.lateral_split(&f);
        for w in 0..2 {
            let excess = f[w].hypot(fy[w]) - contact.limit[w];
            report.friction_excess = report.friction_excess.max(excess);
        }
        last = [f[0], f[1], fy[0], fy[1]];
        report.fx_r += h * f[0];
        report.fx_l += h * f[1];
        report.fy_r += h * fy[0];
        report.fy_l += h * fy[1];
        report.substeps += 1;

        let twist = BodyTwist::new(mid.u, mid.v, mid.r);
        pose = params.pose_integration.advance(&pose, &twist, h);
        vel = next;
        remaining -= h;
        if let Some(i) = restick {
            modes[i] = Mode::Stick;
        }
        for m in modes.iter_mut() {
            if let Mode::Slide { positive, .. } = *m {
                *m = Mode::Slide { positive, fresh: false };
            }
        }
    }

    if report.substeps == 1 {
        report.fx_r = last[0];
        report.fx_l = last[1];
        report.fy_r = last[2];
        report.fy_l = last[3];
    } else {
        report.fx_r /= dt;
        report.fx_l /= dt;
        report.fy_r /= dt;
        report.fy_l /= dt;
    }

    let next = DynState {
        pose,
        twist: BodyTwist::new(vel.u, vel.v, vel.r),
        omega_r: vel.wr,
        omega_l: vel.wl,
        slip_r: modes[0] != Mode::Stick,
        slip_l: modes[1] != Mode::Stick,
        slip_lateral: modes[2] != Mode::Stick,
    };
    if !next.is_finite() {
        return Err(DynError::NonFinite);
    }
    Ok((next, report))
}
