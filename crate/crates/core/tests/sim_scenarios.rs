use std::path::PathBuf;

use diffdrive::sim::{
    compare_modes, read_trace, run_scenario, trace_to_csv, write_trace, Scenario, ScenarioConfig, ScenarioError,
    Termination, COMPLETION_DISTANCE, HEADER,
};
use diffdrive::supervisor::ControllerMode;
use diffdrive::surface::SurfaceMap;

fn scenario_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.toml"))
}

fn config(name: &str) -> ScenarioConfig {
    ScenarioConfig::from_toml_str(&std::fs::read_to_string(scenario_file(name)).unwrap()).unwrap()
}

fn invalid_field(cfg: &ScenarioConfig) -> String {
    match cfg.validate() {
        Err(ScenarioError::Invalid(e)) => e.field,
        other => panic!("expected a validation error, got {other:?}"),
    }
}

#[test]
fn shipped_scenarios_validate() {
    for name in ["reference", "uniform_high_mu", "straight_10m"] {
        let s = Scenario::load(scenario_file(name)).unwrap();
        assert!((s.params.mass - 40.0).abs() < 0.4, "{name}");
        assert!((s.params.yaw_inertia - 2.627).abs() < 2.627e-2, "{name}");
        assert_eq!(s.substeps, 10);
    }
}

#[test]
fn straight_run_completes_accurately() {
    let s = Scenario::load(scenario_file("straight_10m")).unwrap();
    let out = run_scenario(&s, ControllerMode::Low, 0).unwrap();
    assert_eq!(out.summary.termination, Termination::Completed);
    assert!(out.summary.final_error < 0.01, "{}", out.summary.final_error);
    assert_eq!(out.summary.slip_time, 0.0);
    let last = out.trace.last().unwrap();
    assert!((last.x - 10.0).abs() <= COMPLETION_DISTANCE + 1e-3);
}

#[test]
fn trace_rows_follow_the_control_schedule() {
    let s = Scenario::load(scenario_file("straight_10m")).unwrap();
    let out = run_scenario(&s, ControllerMode::Low, 0).unwrap();
    for (k, row) in out.trace.iter().enumerate() {
        assert_eq!(row.t, k as f64 * s.simulation.control_period);
        assert!(row.displacement_error >= 0.0);
        let d = (row.x - row.x_ref).hypot(row.y - row.y_ref);
        assert_eq!(row.displacement_error, d);
    }
}

#[test]
fn three_tick_trace_has_four_lines() {
    let s = Scenario::load(scenario_file("straight_10m")).unwrap();
    let out = run_scenario(&s, ControllerMode::Low, 0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    write_trace(&out.trace[..3], &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert_eq!(text.lines().next().unwrap().split(',').count(), 19);
    assert_eq!(HEADER.len(), 19);
    let back = read_trace(&text).unwrap();
    for (a, b) in back.iter().zip(&out.trace) {
        assert_eq!(a.t, b.t);
        assert!((a.tau_r - b.tau_r).abs() <= 1e-11 * b.tau_r.abs().max(1.0));
        assert!((a.x - b.x).abs() <= 1e-11 * b.x.abs().max(1e-30));
    }
}

#[test]
fn unwritable_destination_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(write_trace(&[], dir.path().join("missing/trace.csv")).is_err());
}

#[test]
fn zero_duration_is_rejected() {
    let mut cfg = config("straight_10m");
    cfg.simulation.duration = 0.0;
    assert_eq!(invalid_field(&cfg), "simulation.duration");
    cfg.simulation.duration = 1.0;
    // shorter than the plan
    assert_eq!(invalid_field(&cfg), "simulation.duration");
}

#[test]
fn validation_names_the_field() {
    let base = config("reference");
    let mut c = base.clone();
    c.limits.a_max = -1.0;
    assert_eq!(invalid_field(&c), "limits.a_max");

    let mut c = base.clone();
    c.simulation.control_period = 0.0105;
    assert_eq!(invalid_field(&c), "simulation.control_period");

    let mut c = base.clone();
    c.geometry.l_r = 0.2;
    assert_eq!(invalid_field(&c), "geometry.l_r");

    let mut c = base.clone();
    c.controller.model_order = 3;
    assert_eq!(invalid_field(&c), "controller.model_order");

    let mut c = base.clone();
    c.surface.patches[0].mu = -0.1;
    assert_eq!(invalid_field(&c), "surface.patches[0].mu");

    let text = std::fs::read_to_string(scenario_file("reference"))
        .unwrap()
        .replace("radius = 2.0", "radius = -2.0");
    match Scenario::from_toml_str(&text) {
        Err(ScenarioError::Invalid(e)) => assert_eq!(e.field, "path.sections[1]"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn unknown_keys_are_rejected() {
    let text = std::fs::read_to_string(scenario_file("straight_10m")).unwrap() + "\n[extra]\nfoo = 1\n";
    assert!(matches!(Scenario::from_toml_str(&text), Err(ScenarioError::Parse(_))));
}

#[test]
fn zero_speed_request_is_an_infeasible_plan() {
    let mut c = config("straight_10m");
    c.section_v_max = vec![0.0];
    assert!(matches!(c.validate(), Err(ScenarioError::Plan(_))));
}

#[test]
fn config_round_trips_through_toml() {
    let c = config("reference");
    let again = ScenarioConfig::from_toml_str(&c.to_toml_string()).unwrap();
    assert_eq!(again, c);
}

#[test]
fn same_seed_same_bytes() {
    let mut c = config("reference");
    c.noise.position = 1e-3;
    c.noise.wheel_speed = 0.05;
    let s = c.validate().unwrap();
    let a = run_scenario(&s, ControllerMode::Combined, 7).unwrap();
    let b = run_scenario(&s, ControllerMode::Combined, 7).unwrap();
    assert_eq!(trace_to_csv(&a.trace), trace_to_csv(&b.trace));
    let other = run_scenario(&s, ControllerMode::Combined, 8).unwrap();
    assert_ne!(trace_to_csv(&a.trace), trace_to_csv(&other.trace));
}

#[test]
fn modes_identical_without_slip() {
    let s = Scenario::load(scenario_file("uniform_high_mu")).unwrap();
    let cmp = compare_modes(&s, 0).unwrap();
    assert_eq!(cmp.low.trace, cmp.combined.trace);
    assert_eq!(cmp.error_ratio(), 1.0);
    assert!(cmp.combined.events.is_empty());
}

#[test]
fn combined_mode_beats_low_mode_on_the_patch() {
    let s = Scenario::load(scenario_file("reference")).unwrap();
    let cmp = compare_modes(&s, 0).unwrap();
    assert_eq!(cmp.low.summary.replans, 0);
    assert!(cmp.low.events.is_empty());
    assert!(cmp.combined.summary.replans >= 1);
    assert!(cmp.low.summary.final_error > cmp.combined.summary.final_error);
    assert!(cmp.combined_wins());
}

#[test]
fn frictionless_floor_never_completes() {
    let mut c = config("straight_10m");
    c.surface = SurfaceMap::uniform(0.0);
    let s = c.validate().unwrap();
    let cmp = compare_modes(&s, 0).unwrap();
    assert!(!cmp.low.summary.completed());
    assert!(!cmp.combined.summary.completed());
    assert!(cmp.to_text().contains("neither_completed = true"));
}

#[test]
fn friction_bound_and_dissipation_on_every_run() {
    for name in ["reference", "uniform_high_mu", "straight_10m"] {
        let s = Scenario::load(scenario_file(name)).unwrap();
        for mode in [ControllerMode::Low, ControllerMode::Combined] {
            let sum = run_scenario(&s, mode, 0).unwrap().summary;
            assert!(sum.max_friction_excess <= 1e-9, "{name} {mode}: {}", sum.max_friction_excess);
            assert!(sum.min_step_dissipation >= -1e-6, "{name} {mode}");
            assert!(sum.energy_residual.abs() < 1e-6 * sum.input_work.abs().max(1.0), "{name} {mode}");
        }
    }
}

#[test]
fn explicit_mass_matches_particle_body() {
    let particles = Scenario::load(scenario_file("reference")).unwrap();
    let mut c = config("reference");
    c.body.particles = None;
    c.body.mass = Some(particles.params.mass);
    c.body.yaw_inertia = Some(particles.params.yaw_inertia);
    assert_eq!(c.validate().unwrap().params, particles.params);
}
