mod common;

use common::{kinematic_divergence_rate, reference_params};
use diffdrive::dynamics::{step_dynamics, DynState, WheelTorques};
use diffdrive::kinematics::Pose;
use diffdrive::surface::SurfaceMap;

#[test]
fn ample_friction_reduces_to_kinematics() {
    for seed in 0..10 {
        let rate = kinematic_divergence_rate(seed, 10.0, 5.0);
        assert!(rate <= 1e-6, "seed {seed}: {rate:e} m/s");
    }
}

#[test]
fn low_friction_departs_from_kinematics() {
    // the same schedules slip on ice, so the comparison above is not vacuous
    let worst = (0..10).map(|seed| kinematic_divergence_rate(seed, 0.05, 5.0)).fold(0.0, f64::max);
    assert!(worst > 1e-3, "{worst:e}");
}

/// Open-loop ten second run across a slippery patch with step `dt`.
fn final_pose(dt: f64) -> Pose<f64> {
    let p = reference_params(0.1);
    let surface = SurfaceMap::uniform(0.8).with_patch([1.0, -5.0], [2.0, 5.0], 0.15);
    let steps = (10.0 / dt).round() as usize;
    let mut s = DynState::at_rest(Pose::default());
    for k in 0..steps {
        let t = k as f64 * dt;
        let tau = WheelTorques {
            tau_r: 2.5 * (0.8 * t).sin() + 1.5,
            tau_l: 2.0 * (0.5 * t).cos() + 0.5,
        };
        s = step_dynamics(&s, tau, &surface, &p, dt).unwrap().0;
    }
    s.pose
}

#[test]
fn halving_the_step_converges_at_first_order() {
    let steps = [4e-3, 2e-3, 1e-3, 5e-4, 2.5e-4];
    let poses: Vec<Pose<f64>> = steps.iter().map(|&dt| final_pose(dt)).collect();
    let changes: Vec<f64> = poses.windows(2).map(|w| w[0].distance_to(&w[1])).collect();
    println!("final pose changes per halving: {changes:?}");
    for w in changes.windows(2) {
        assert!(w[1] < w[0], "not monotone: {changes:?}");
    }
    for (c, dt) in changes.iter().zip(steps) {
        // O(dt): the change per halving stays within a fixed multiple of the step
        assert!(*c <= 50.0 * dt, "{c} at dt {dt}");
    }
}
