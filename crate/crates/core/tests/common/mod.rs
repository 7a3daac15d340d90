//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use diffdrive::body_model::{Mat3, Particle, Vec3};
use diffdrive::dynamics::{step_dynamics, DynState, DynamicParams, WheelTorques};
use diffdrive::kinematics::{forward_kinematics, integrate_pose, BodyTwist, GeometryParams, Pose, PoseIntegration, WheelRates};
use diffdrive::path_geometry::{PathSection, PathSpec};
use diffdrive::surface::SurfaceMap;
use diffdrive::velocity_trajectory::MotionLimits;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn reference_params(l_r: f64) -> DynamicParams<f64> {
    DynamicParams {
        mass: 40.0,
        yaw_inertia: 2.627,
        drivetrain_inertia: 0.05,
        geom: GeometryParams {
            wheel_radius: 0.1,
            track_width: 0.4,
            l_r,
            l_f: 0.3,
        },
        gravity: 9.81,
        pose_integration: PoseIntegration::Exact,
    }
}

/// Mass, centre of mass and inertia about it from `n³` point masses per particle.
pub fn voxel_mass_properties(particles: &[Particle<f64>], n: usize) -> (f64, Vec3<f64>, Mat3<f64>) {
    let mut mass = 0.0;
    let mut first = [0.0; 3];
    let mut second = [[0.0; 3]; 3];
    for p in particles {
        let h = [p.dims[0] / n as f64, p.dims[1] / n as f64, p.dims[2] / n as f64];
        let m = p.density * h[0] * h[1] * h[2];
        for i in 0..n {
            let x = p.origin[0] + (i as f64 + 0.5) * h[0];
            for j in 0..n {
                let y = p.origin[1] + (j as f64 + 0.5) * h[1];
                for k in 0..n {
                    let r = [x, y, p.origin[2] + (k as f64 + 0.5) * h[2]];
                    mass += m;
                    for a in 0..3 {
                        first[a] += m * r[a];
                        for b in a..3 {
                            second[a][b] += m * r[a] * r[b];
                        }
                    }
                }
            }
        }
    }
    let cg = first.map(|f| f / mass);
    let mut central = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            let s = if a <= b { second[a][b] } else { second[b][a] };
            central[a][b] = s - mass * cg[a] * cg[b];
        }
    }
    let trace = central[0][0] + central[1][1] + central[2][2];
    let mut inertia = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            inertia[a][b] = if a == b { trace } else { 0.0 } - central[a][b];
        }
    }
    (mass, cg, inertia)
}

pub fn random_body(rng: &mut ChaCha8Rng, count: usize) -> Vec<Particle<f64>> {
    (0..count)
        .map(|_| {
            let origin = [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(0.0..0.4)];
            let dims = [rng.random_range(0.05..0.6), rng.random_range(0.05..0.6), rng.random_range(0.01..0.3)];
            Particle::new(origin, dims, rng.random_range(200.0..8000.0))
        })
        .collect()
}

/// Minimum-time speed envelope on a fine arc-length grid: forward
/// acceleration pass, backward braking pass, rest to rest.
pub fn dp_min_time(path: &PathSpec<f64>, requested: &[f64], limits: &MotionLimits<f64>, ds: f64) -> f64 {
    let mut caps = Vec::new();
    let mut steps = Vec::new();
    for (section, &req) in path.sections().iter().zip(requested) {
        let (len, cap) = match *section {
            PathSection::Line { length } => (length, req.min(limits.v_cap)),
            PathSection::Arc { radius, turn_angle } => {
                (radius * turn_angle.abs(), req.min(limits.v_cap).min(limits.omega_max * radius))
            }
        };
        let n = (len / ds).ceil().max(1.0) as usize;
        for _ in 0..n {
            caps.push(cap);
            steps.push(len / n as f64);
        }
    }
    // node i sits between cell i-1 and cell i
    let cells = caps.len();
    let mut v = vec![0.0; cells + 1];
    for i in 1..cells {
        v[i] = caps[i - 1].min(caps[i]);
    }
    for i in 0..cells {
        v[i + 1] = v[i + 1].min((v[i] * v[i] + 2.0 * limits.a_max * steps[i]).sqrt());
    }
    for i in (0..cells).rev() {
        v[i] = v[i].min((v[i + 1] * v[i + 1] + 2.0 * limits.d_max * steps[i]).sqrt());
    }
    // a cell may peak at its cap between the two nodes
    let mut t = 0.0;
    for i in 0..cells {
        let (v0, v1, cap, h) = (v[i], v[i + 1], caps[i], steps[i]);
        let peak_sq = (2.0 * limits.a_max * limits.d_max * h + limits.d_max * v0 * v0 + limits.a_max * v1 * v1)
            / (limits.a_max + limits.d_max);
        let peak = peak_sq.sqrt().min(cap);
        let da = (peak * peak - v0 * v0) / (2.0 * limits.a_max);
        let dd = (peak * peak - v1 * v1) / (2.0 * limits.d_max);
        let dc = (h - da - dd).max(0.0);
        t += (peak - v0) / limits.a_max + (peak - v1) / limits.d_max + dc / peak;
    }
    t
}

pub fn random_path(rng: &mut ChaCha8Rng) -> (PathSpec<f64>, Vec<f64>) {
    let n = rng.random_range(1..=6);
    let sections: Vec<PathSection<f64>> = (0..n)
        .map(|_| {
            if rng.random_bool(0.5) {
                PathSection::Line {
                    length: rng.random_range(0.2..5.0),
                }
            } else {
                let angle = rng.random_range(0.1..std::f64::consts::PI);
                PathSection::Arc {
                    radius: rng.random_range(0.2..3.0),
                    turn_angle: if rng.random_bool(0.5) { angle } else { -angle },
                }
            }
        })
        .collect();
    let requested = (0..n).map(|_| rng.random_range(0.3..3.0)).collect();
    (PathSpec::new(Pose::default(), sections).unwrap(), requested)
}

pub fn random_limits(rng: &mut ChaCha8Rng) -> MotionLimits<f64> {
    MotionLimits {
        a_max: rng.random_range(0.5..3.0),
        d_max: rng.random_range(0.5..3.0),
        v_cap: rng.random_range(1.0..3.0),
        omega_max: rng.random_range(0.5..3.0),
        alpha_max: 1.5,
    }
}

/// Drives the dynamic model with a random piecewise-constant torque schedule and
/// integrates the kinematic model on the realized wheel speeds alongside.
/// Returns the largest pose separation divided by elapsed time.
pub fn kinematic_divergence_rate(seed: u64, mu: f64, seconds: f64) -> f64 {
    let p = reference_params(0.1);
    let surface = SurfaceMap::uniform(mu);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dt = 1e-3;
    let steps = (seconds / dt).round() as usize;
    let mut s = DynState::at_rest(Pose::default());
    let mut kin = Pose::default();
    let mut tau = WheelTorques { tau_r: 0.0, tau_l: 0.0 };
    let mut next_switch = 0;
    let mut worst: f64 = 0.0;
    for k in 0..steps {
        if k == next_switch {
            tau = WheelTorques {
                tau_r: rng.random_range(-3.0..3.0),
                tau_l: rng.random_range(-3.0..3.0),
            };
            next_switch += rng.random_range(50..500);
        }
        let (next, _) = step_dynamics(&s, tau, &surface, &p, dt).unwrap();
        let rates = |st: &DynState<f64>| WheelRates {
            omega_r: st.omega_r,
            omega_l: st.omega_l,
        };
        let before = forward_kinematics(rates(&s), &p.geom);
        let after = forward_kinematics(rates(&next), &p.geom);
        let mid = BodyTwist::new(0.5 * (before.u + after.u), 0.5 * (before.v + after.v), 0.5 * (before.r + after.r));
        kin = integrate_pose(&kin, &mid, dt).unwrap();
        s = next;
        let elapsed = (k + 1) as f64 * dt;
        worst = worst.max(s.pose.distance_to(&kin) / elapsed);
    }
    worst
}
