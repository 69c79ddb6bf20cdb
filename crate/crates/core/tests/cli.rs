use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_euler-fronts");

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn cli(args: &[&str], out: &Path) -> Output {
    Command::new(BIN).args(args).arg("--out-dir").arg(out).env_remove("EULER_FRONTS_OUT").output().unwrap()
}

fn scenario_arg(name: &str) -> String {
    scenarios().join(name).display().to_string()
}

#[test]
fn background_run_exits_zero_with_one_strong_segment() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["--scenario", &scenario_arg("background.json")], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(dir.path().join("waves.csv")).unwrap();
    let headers = r.headers().unwrap().clone();
    assert_eq!(headers.iter().collect::<Vec<_>>(), ["id", "kind", "family", "strength", "x0", "y0", "x1", "y1"]);
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][1], "strong");
    let trace = csv::Reader::from_path(dir.path().join("trace.csv")).unwrap().headers().unwrap().clone();
    assert_eq!(
        trace.iter().collect::<Vec<_>>(),
        ["x", "V", "Q_A", "Q_ve", "Q_b", "Q_Theta", "G", "front_count", "nonphysical_mass"]
    );
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let o = cli(&["--scenario", &scenario_arg("demo.json"), "--theta", "4e-3"], d.path());
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["trace.csv", "events.csv", "waves.csv", "slices.csv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{name} differs");
    }
}

#[test]
fn flat_refinement_is_a_monitor_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["--scenario", &scenario_arg("background.json"), "--levels", "4e-3,2e-3,1e-3", "--samples", "4"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(dir.path().join("cauchy.json").exists());
}

#[test]
fn event_budget_overflow_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(scenarios().join("demo.json")).unwrap()).unwrap();
    s["event_budget"] = 3.into();
    let path = dir.path().join("tiny.json");
    std::fs::write(&path, s.to_string()).unwrap();
    let o = cli(&["--scenario", path.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn configuration_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"background":{"below":{"u":2,"v":0,"p":1,"rho":1.4},"sigma2":0.1,"sigma3":0.05,"contact_y":1},"theta":{"theta":"small"}}"#).unwrap();
    let subsonic = dir.path().join("subsonic.json");
    std::fs::write(&subsonic, r#"{"background":{"below":{"u":0.5,"v":0,"p":1,"rho":1.4},"sigma2":0.1,"sigma3":0.05,"contact_y":1}}"#).unwrap();
    let missing = dir.path().join("missing.json");
    let cases: [Vec<&str>; 5] = [
        vec!["--scenario", bad.to_str().unwrap()],
        vec!["--scenario", subsonic.to_str().unwrap()],
        vec!["--scenario", missing.to_str().unwrap()],
        vec!["--scenario", bad.to_str().unwrap(), "--bogus"],
        vec![],
    ];
    for args in cases {
        let o = cli(&args, dir.path());
        assert_eq!(o.status.code(), Some(3), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn pair_mode_writes_the_phi_trace() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(
        &["--scenario", &scenario_arg("demo.json"), "--pair", &scenario_arg("demo_pair.json"), "--theta", "4e-3", "--samples", "8"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(dir.path().join("phi_trace.csv")).unwrap();
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), ["x", "Phi", "L1_distance", "bound"]);
    assert_eq!(r.records().count(), 9);
    assert!(dir.path().join("stability.json").exists());
}

fn keys(v: &serde_json::Value) -> BTreeSet<String> {
    v.as_object().map(|o| o.keys().cloned().collect()).unwrap_or_default()
}

#[test]
fn schema_matches_the_scenario_struct() {
    let schema: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(scenarios().join("scenario.schema.json")).unwrap()).unwrap();
    let sc = euler_fronts::scenario::Scenario::load(&scenarios().join("demo.json")).unwrap();
    let full = serde_json::to_value(&sc).unwrap();
    // Every serialised field is declared, and the schema declares nothing else.
    assert_eq!(keys(&schema["properties"]), keys(&full));
    for section in ["gas", "background", "theta"] {
        assert_eq!(keys(&schema["properties"][section]["properties"]), keys(&full[section]), "{section}");
    }
    assert_eq!(keys(&schema["$defs"]["state"]["properties"]), keys(&full["background"]["below"]));
    let bump = serde_json::to_value(euler_fronts::geometry::Bump { y0: 0.0, y1: 1.0, du: 0.0, dv: 0.0, dp: 0.0, drho: 0.0 }).unwrap();
    assert_eq!(keys(&schema["$defs"]["bump"]["properties"]), keys(&bump));
    // Example scenarios load through the same struct.
    for name in ["background.json", "demo.json", "demo_pair.json"] {
        euler_fronts::scenario::Scenario::load(&scenarios().join(name)).unwrap();
    }
}
