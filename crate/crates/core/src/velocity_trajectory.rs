//! Section-wise velocity trajectories.
//!
//! Every section of a path is split into an acceleration, a cruise and a
//! deceleration region. Joint velocities are the largest values that are
//! both reachable by accelerating from the previous joint and brakeable to
//! the next one, which makes the plan time-optimal for piecewise-constant
//! speed caps and constant acceleration/deceleration limits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::path_geometry::{PathSection, PathSpec};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionLimits<T> {
    /// m/s²
    pub a_max: T,
    /// Deceleration magnitude, m/s².
    pub d_max: T,
    /// m/s
    pub v_cap: T,
    /// rad/s
    pub omega_max: T,
    /// Yaw acceleration limit in rad/s², applied to commanded yaw-rate corrections.
    pub alpha_max: T,
}

impl<T: Real> MotionLimits<T> {
    pub fn is_valid(&self) -> bool {
        [self.a_max, self.d_max, self.v_cap, self.omega_max, self.alpha_max]
            .iter()
            .all(|v| *v > T::zero() && v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectionProfile<T> {
    pub section: usize,
    pub length: T,
    /// Effective speed cap of the section.
    pub v_max: T,
    pub v_start: T,
    pub v_peak: T,
    pub v_exit: T,
    pub d_a: T,
    pub d_c: T,
    pub d_d: T,
    pub t_a: T,
    pub t_c: T,
    pub t_d: T,
}

impl<T: Real> SectionProfile<T> {
    pub fn duration(&self) -> T {
        self.t_a + self.t_c + self.t_d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryPlan<T> {
    pub sections: Vec<SectionProfile<T>>,
    /// Start time of each section.
    pub start_times: Vec<T>,
    /// Arc length at the start of each section.
    pub start_distances: Vec<T>,
    pub a_max: T,
    pub d_max: T,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("motion limits must be positive and finite")]
    InvalidLimits,
    #[error("expected {expected} per-section speed requests, got {got}")]
    RequestCount { expected: usize, got: usize },
    #[error("section {section}: requested speed must be positive")]
    InvalidRequest { section: usize },
    #[error("boundary speed {speed} must be non-negative and finite")]
    InvalidBoundary { speed: f64 },
    #[error("initial speed {v_initial} exceeds the cap {cap} of the first section")]
    InitialAboveCap { v_initial: f64, cap: f64 },
    #[error("final speed {v_final} exceeds the cap {cap} of the last section")]
    FinalAboveCap { v_final: f64, cap: f64 },
    #[error("section {section}: initial speed {v_initial} cannot be braked to the planned speeds (at most {max_entry})")]
    CannotBrake { section: usize, v_initial: f64, max_entry: f64 },
    #[error("section {section}: final speed {v_final} is not reachable (at most {reachable})")]
    FinalUnreachable { section: usize, v_final: f64, reachable: f64 },
    #[error("time {t} outside plan duration {duration}")]
    OutOfRange { t: f64, duration: f64 },
}

/// Speed cap of a section: the request, the global cap and on arcs `omega_max·radius`.
pub fn effective_section_vmax<T: Real>(section: &PathSection<T>, requested: T, limits: &MotionLimits<T>) -> T {
    let v = requested.min(limits.v_cap);
    match *section {
        PathSection::Line { .. } => v,
        PathSection::Arc { radius, .. } => v.min(limits.omega_max * radius),
    }
}

/// Highest entry speed that can still brake to `v_exit` within `length`.
pub fn max_feasible_entry<T: Real>(length: T, v_exit: T, d_max: T) -> T {
    (v_exit * v_exit + (d_max + d_max) * length.max(T::zero())).sqrt()
}

fn profile<T: Real>(section: usize, length: T, v_max: T, vs: T, ve: T, a: T, d: T) -> SectionProfile<T> {
    let two = T::lit(2.0);
    let d_a_full = ((v_max * v_max - vs * vs) / (two * a)).max(T::zero());
    let d_d_full = ((v_max * v_max - ve * ve) / (two * d)).max(T::zero());
    let (v_peak, d_a, d_c, d_d) = if d_a_full + d_d_full <= length {
        (v_max, d_a_full, length - d_a_full - d_d_full, d_d_full)
    } else {
        // intersection of the acceleration and braking parabolas
        let vp2 = (two * a * d * length + d * vs * vs + a * ve * ve) / (a + d);
        let vp = vp2.sqrt().min(v_max).max(vs).max(ve);
        let mut d_a = ((vp * vp - vs * vs) / (two * a)).max(T::zero()).min(length);
        let snap = T::lit(1e-12) * length;
        if d_a < snap {
            d_a = T::zero();
        } else if length - d_a < snap {
            d_a = length;
        }
        (vp, d_a, T::zero(), length - d_a)
    };
    let t_c = if d_c > T::zero() { d_c / v_peak } else { T::zero() };
    SectionProfile {
        section,
        length,
        v_max,
        v_start: vs,
        v_peak,
        v_exit: ve,
        d_a,
        d_c,
        d_d,
        t_a: (v_peak - vs) / a,
        t_c,
        t_d: (v_peak - ve) / d,
    }
}

/// Plans the velocity profile along `path`.
pub fn plan<T: Real>(
    path: &PathSpec<T>,
    requested_v_max: &[T],
    limits: &MotionLimits<T>,
    v_initial: T,
    v_final: T,
) -> Result<TrajectoryPlan<T>, PlanError> {
    if !limits.is_valid() {
        return Err(PlanError::InvalidLimits);
    }
    let sections = path.sections();
    let n = sections.len();
    if requested_v_max.len() != n {
        return Err(PlanError::RequestCount {
            expected: n,
            got: requested_v_max.len(),
        });
    }
    for &b in &[v_initial, v_final] {
        if !(b >= T::zero()) || !b.is_finite() {
            return Err(PlanError::InvalidBoundary { speed: b.as_f64() });
        }
    }
    let mut caps = Vec::with_capacity(n);
    for (i, (s, &req)) in sections.iter().zip(requested_v_max).enumerate() {
        if !(req > T::zero()) {
            return Err(PlanError::InvalidRequest { section: i });
        }
        caps.push(effective_section_vmax(s, req, limits));
    }
    let lengths: Vec<T> = sections.iter().map(|s| s.length()).collect();
    let tol = T::lit(1e-12);
    if v_initial > caps[0] + tol {
        return Err(PlanError::InitialAboveCap {
            v_initial: v_initial.as_f64(),
            cap: caps[0].as_f64(),
        });
    }
    if v_final > caps[n - 1] + tol {
        return Err(PlanError::FinalAboveCap {
            v_final: v_final.as_f64(),
            cap: caps[n - 1].as_f64(),
        });
    }

    // joint speeds: w[0] = v_initial, w[n] = v_final
    let mut w = Vec::with_capacity(n + 1);
    w.push(v_initial.min(caps[0]));
    for k in 1..n {
        w.push(caps[k - 1].min(caps[k]));
    }
    w.push(v_final.min(caps[n - 1]));

    let (a, d) = (limits.a_max, limits.d_max);
    for _ in 0..=n {
        let mut changed = false;
        for k in (0..n).rev() {
            let limit = max_feasible_entry(lengths[k], w[k + 1], d);
            if w[k] > limit {
                w[k] = limit;
                changed = true;
            }
        }
        for k in 0..n {
            let reach = max_feasible_entry(lengths[k], w[k], a);
            if w[k + 1] > reach {
                w[k + 1] = reach;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let slack = T::lit(1e-9);
    if w[0] + slack * (T::one() + v_initial) < v_initial {
        // the braking chain that bound joint 0 ends where a cap or the final speed takes over
        let mut k = 0;
        while k + 1 < n && w[k + 1] < caps[k].min(caps[k + 1]) {
            k += 1;
        }
        return Err(PlanError::CannotBrake {
            section: k,
            v_initial: v_initial.as_f64(),
            max_entry: w[0].as_f64(),
        });
    }
    if w[n] + slack * (T::one() + v_final) < v_final {
        let mut k = n - 1;
        while k > 0 && w[k] < caps[k - 1].min(caps[k]) {
            k -= 1;
        }
        return Err(PlanError::FinalUnreachable {
            section: k,
            v_final: v_final.as_f64(),
            reachable: w[n].as_f64(),
        });
    }
    w[0] = v_initial;
    w[n] = v_final;

    let mut profiles = Vec::with_capacity(n);
    let mut start_times = Vec::with_capacity(n);
    let mut start_distances = Vec::with_capacity(n);
    let (mut t, mut s) = (T::zero(), T::zero());
    for k in 0..n {
        let p = profile(k, lengths[k], caps[k], w[k], w[k + 1], a, d);
        start_times.push(t);
        start_distances.push(s);
        t += p.duration();
        s += p.length;
        profiles.push(p);
    }
    Ok(TrajectoryPlan {
        sections: profiles,
        start_times,
        start_distances,
        a_max: a,
        d_max: d,
    })
}

/// A sampled point of a plan: distance along the path, speed and acceleration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanSample<T> {
    pub s: T,
    pub v: T,
    pub a: T,
    pub section: usize,
}

impl<T: Real> TrajectoryPlan<T> {
    pub fn duration(&self) -> T {
        match (self.start_times.last(), self.sections.last()) {
            (Some(&t), Some(p)) => t + p.duration(),
            _ => T::zero(),
        }
    }

    pub fn total_length(&self) -> T {
        match (self.start_distances.last(), self.sections.last()) {
            (Some(&s), Some(p)) => s + p.length,
            _ => T::zero(),
        }
    }

    pub fn v_initial(&self) -> T {
        self.sections.first().map_or(T::zero(), |p| p.v_start)
    }

    pub fn sample(&self, t: T) -> Result<PlanSample<T>, PlanError> {
        let duration = self.duration();
        if !(t >= T::zero() && t <= duration) {
            return Err(PlanError::OutOfRange {
                t: t.as_f64(),
                duration: duration.as_f64(),
            });
        }
        let k = match self.start_times[1..].iter().position(|&st| t < st) {
            Some(i) => i,
            None => self.sections.len() - 1,
        };
        let p = &self.sections[k];
        let base = self.start_distances[k];
        let tau = t - self.start_times[k];
        let half = T::lit(0.5);
        let (ds, v, a) = if tau < p.t_a {
            (p.v_start * tau + half * self.a_max * tau * tau, p.v_start + self.a_max * tau, self.a_max)
        } else if tau < p.t_a + p.t_c {
            (p.d_a + p.v_peak * (tau - p.t_a), p.v_peak, T::zero())
        } else if tau < p.duration() || k + 1 == self.sections.len() && p.t_d > T::zero() {
            let td = (tau - p.t_a - p.t_c).min(p.t_d);
            (
                p.d_a + p.d_c + p.v_peak * td - half * self.d_max * td * td,
                p.v_peak - self.d_max * td,
                -self.d_max,
            )
        } else {
            (p.length, p.v_exit, T::zero())
        };
        Ok(PlanSample {
            s: base + ds.min(p.length),
            v: v.max(T::zero()),
            a,
            section: k,
        })
    }
}
