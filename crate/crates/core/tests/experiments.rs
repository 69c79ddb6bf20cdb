use euler_fronts::experiments::{convergence_study, exit, run_scenario, stability_experiment, ExperimentError};
use euler_fronts::geometry::{Bump, Perturbation};
use euler_fronts::scenario::Scenario;
use euler_fronts::FlowState;

const MINUS: FlowState = FlowState::new(2.0, 0.0, 1.0, 1.4);

fn scenario(name: &str) -> Scenario {
    let path = format!("{}/../../scenarios/{name}.json", env!("CARGO_MANIFEST_DIR"));
    Scenario::load(path.as_ref()).unwrap()
}

fn with_entropy_bump(y1: f64) -> Scenario {
    let mut s = Scenario::background_only(MINUS, 0.1, 0.05, 1.0);
    s.window = 1.0;
    s.perturbation = Perturbation::Intervals(vec![Bump { y0: 0.2, y1, du: 0.0, dv: 0.0, dp: 0.0, drho: 0.01 }]);
    s
}

#[test]
fn moving_one_inflow_jump_gives_jump_times_shift() {
    let dy = 0.05;
    let r = stability_experiment(&with_entropy_bump(0.5), &with_entropy_bump(0.5 + dy), Some(1e-3), 4).unwrap();
    assert!((r.initial_l1 - 0.01 * dy).abs() < 1e-12, "{}", r.initial_l1);
    // An entropy jump rides the flow unchanged, so the distance persists.
    for s in &r.samples {
        assert!((s.l1 - r.initial_l1).abs() < 1e-12);
    }
    assert!(r.equivalence_holds);
    assert!(r.l1_bound_holds);
}

#[test]
fn identical_configurations_are_at_distance_zero() {
    let s = with_entropy_bump(0.5);
    let r = stability_experiment(&s, &s, Some(1e-3), 4).unwrap();
    assert!(r.samples.iter().all(|p| p.l1 == 0.0 && p.phi == 0.0));
    assert_eq!(r.empirical_lipschitz, 0.0);
}

#[test]
fn demo_pair_decays_across_the_sheet_and_at_the_wall() {
    let r = stability_experiment(&scenario("demo"), &scenario("demo_pair"), Some(4e-3), 20).unwrap();
    assert!(r.equivalence_holds);
    assert!(r.strong_decay_ok(), "{:?}", r.strong_decay_max);
    assert!(r.boundary_decay_ok(), "{}", r.boundary_transport_max);
    assert!(r.wall_ratio_ok);
    assert!(r.l1_bound_holds);
    assert!(r.initial_l1 > 0.0);
}

#[test]
fn stability_rejects_different_walls() {
    let mut other = scenario("demo_pair");
    other.wall = Default::default();
    let err = stability_experiment(&scenario("demo"), &other, Some(4e-3), 4).unwrap_err();
    assert!(matches!(err, ExperimentError::Mismatch(_)));
    assert_eq!(err.exit_code(), exit::CONFIG);
}

#[test]
fn refinement_levels_must_decrease() {
    let s = scenario("background");
    for levels in [vec![1e-3], vec![1e-3, 2e-3], vec![1e-3, 1e-3], vec![1e-3, -1e-4]] {
        let err = convergence_study(&s, &levels, 4).unwrap_err();
        assert_eq!(err.exit_code(), exit::CONFIG);
    }
}

#[test]
fn refinement_of_the_background_is_exact() {
    let t = convergence_study(&scenario("background"), &[4e-3, 2e-3, 1e-3], 4).unwrap();
    assert!(t.rows.iter().all(|r| r.distance == 0.0));
    // Zero distances cannot decrease strictly.
    assert!(!t.strictly_decreasing);
    assert_eq!(t.rate, None);
}

#[test]
fn event_budget_overflow_is_a_monitor_failure() {
    let mut s = scenario("demo").at_theta(4e-3);
    s.event_budget = 5;
    let err = run_scenario(&s, None).err().unwrap();
    assert_eq!(err.exit_code(), exit::MONITOR);
}

#[test]
fn run_writes_every_output_and_a_replayable_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let s = scenario("demo").at_theta(4e-3);
    let out = run_scenario(&s, Some(dir.path())).unwrap();
    assert!(out.report.passed());
    for name in ["trace.csv", "events.csv", "waves.csv", "slices.csv", "report.json", "manifest.json"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    let replay: Scenario = serde_json::from_value(manifest["scenario"].clone()).unwrap();
    assert_eq!(replay, s);
    assert_eq!(manifest["scenario_hash"], s.hash());
    let again = run_scenario(&replay, None).unwrap();
    assert_eq!(again.solution.trace, out.solution.trace);
}
