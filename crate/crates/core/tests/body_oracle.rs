mod common;

use common::{random_body, voxel_mass_properties};
use diffdrive::body_model::{aggregate, subdivide, Mat3, MassProperties, Particle, RigidBodySpec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tensor_gap(a: &Mat3<f64>, b: &Mat3<f64>) -> f64 {
    let scale = a[0][0].max(a[1][1]).max(a[2][2]);
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            worst = worst.max((a[i][j] - b[i][j]).abs() / scale);
        }
    }
    worst
}

fn check_against_voxels(particles: &[Particle<f64>], n: usize) -> MassProperties<f64> {
    let mp = aggregate(&RigidBodySpec::new(particles.to_vec())).unwrap();
    let (mass, cg, inertia) = voxel_mass_properties(particles, n);
    // millions of point masses summed one by one: rounding at the 1e-10 level
    assert!((mp.mass - mass).abs() <= 1e-9 * mass, "mass {} vs {mass}", mp.mass);
    for k in 0..3 {
        assert!((mp.cg[k] - cg[k]).abs() <= 1e-9, "cg {:?} vs {cg:?}", mp.cg);
    }
    let gap = tensor_gap(&mp.inertia_cg, &inertia);
    assert!(gap <= 1e-4, "inertia gap {gap:e}\n{:?}\n{inertia:?}", mp.inertia_cg);
    mp
}

#[test]
fn single_box_matches_voxels() {
    check_against_voxels(&[Particle::new([0.1, -0.2, 0.0], [0.6, 0.4, 0.1], 1000.0)], 128);
}

#[test]
fn random_bodies_match_voxels() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for count in [2, 3, 4] {
        let body = random_body(&mut rng, count);
        let mp = check_against_voxels(&body, 128);
        // off-diagonal coupling is present in these bodies, so the comparison is not vacuous
        assert!(mp.inertia_cg[0][1].abs() + mp.inertia_cg[0][2].abs() > 0.0);
    }
}

#[test]
fn voxel_error_shrinks_with_resolution() {
    let body = random_body(&mut ChaCha8Rng::seed_from_u64(3), 3);
    let mp = aggregate(&RigidBodySpec::new(body.clone())).unwrap();
    let coarse = tensor_gap(&mp.inertia_cg, &voxel_mass_properties(&body, 8).2);
    let fine = tensor_gap(&mp.inertia_cg, &voxel_mass_properties(&body, 16).2);
    // midpoint rule error is quadratic in the voxel size
    assert!(fine < 0.3 * coarse, "{coarse:e} -> {fine:e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn subdivision_leaves_properties_unchanged(seed in any::<u64>(), count in 1usize..4, k in 2usize..5) {
        let body = random_body(&mut ChaCha8Rng::seed_from_u64(seed), count);
        let whole = aggregate(&RigidBodySpec::new(body.clone())).unwrap();
        let split: Vec<_> = body.iter().flat_map(|p| subdivide(p, k)).collect();
        let parts = aggregate(&RigidBodySpec::new(split)).unwrap();
        prop_assert!((whole.mass - parts.mass).abs() <= 1e-10 * whole.mass);
        for c in 0..3 {
            prop_assert!((whole.cg[c] - parts.cg[c]).abs() <= 1e-10);
        }
        prop_assert!(tensor_gap(&whole.inertia_cg, &parts.inertia_cg) < 1e-10);
    }

    #[test]
    fn inertia_is_a_valid_tensor(seed in any::<u64>(), count in 1usize..5) {
        let body = random_body(&mut ChaCha8Rng::seed_from_u64(seed), count);
        let i = aggregate(&RigidBodySpec::new(body)).unwrap().inertia_cg;
        for a in 0..3 {
            prop_assert!(i[a][a] > 0.0);
            for b in 0..3 {
                prop_assert_eq!(i[a][b], i[b][a]);
            }
        }
        // triangle inequality on the principal moments holds for the diagonal too
        prop_assert!(i[0][0] + i[1][1] >= i[2][2] * (1.0 - 1e-12));
        prop_assert!(i[1][1] + i[2][2] >= i[0][0] * (1.0 - 1e-12));
        prop_assert!(i[0][0] + i[2][2] >= i[1][1] * (1.0 - 1e-12));
    }

    #[test]
    fn yaw_inertia_about_an_offset_axis_grows(seed in any::<u64>(), dx in -1.0..1.0f64, dy in -1.0..1.0f64) {
        let body = random_body(&mut ChaCha8Rng::seed_from_u64(seed), 3);
        let mp = aggregate(&RigidBodySpec::new(body)).unwrap();
        let shifted = mp.yaw_inertia() + mp.mass * (dx * dx + dy * dy);
        prop_assert!(shifted >= mp.yaw_inertia());
        prop_assert!(mp.yaw_inertia() > 0.0);
    }
}
