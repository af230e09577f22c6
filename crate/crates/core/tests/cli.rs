use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use feedin::fixtures::{random_small_grid, synth_grid, FixtureKind, FixtureProfile, RandomGridSpec};
use feedin::grid::serialize_grid;
use serde_json::Value;
use tempfile::TempDir;

fn feedin(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_feedin"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("FEEDIN_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn shipped(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .to_str()
        .unwrap()
        .to_string()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Slack, one load bus behind a 5 MW line and a 1 MW candidate there.
const THERMAL_TOY: &str = r#"{
  "base_mva": 1.0, "base_kv": 20.0,
  "buses": [
    {"id": "0", "slack": true, "demand_p": [0.0]},
    {"id": "1", "demand_p": [0.0]}
  ],
  "lines": [{"from": "0", "to": "1", "r": 0.01, "x": 0.0, "s_max": 5.0}],
  "generators": [{"id": "c", "bus": "1", "kind": "pv_candidate", "p_max": 1.0, "profile": [1.0]}]
}"#;

#[test]
fn validate_exit_codes() {
    let dir = TempDir::new().unwrap();
    let ok = feedin(&["validate", &shipped("urban_mv.json")], dir.path());
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));

    let cyclic = THERMAL_TOY.replace(
        r#""demand_p": [0.0]}
  ],"#,
        r#""demand_p": [0.0]},
    {"id": "2", "demand_p": [0.0]}
  ],"#,
    );
    let cyclic = cyclic.replace(
        r#""s_max": 5.0}]"#,
        r#""s_max": 5.0}, {"from": "1", "to": "2", "r": 0.01, "x": 0.0, "s_max": 5.0}, {"from": "2", "to": "0", "r": 0.01, "x": 0.0, "s_max": 5.0}]"#,
    );
    let o = feedin(&["validate", &write(&dir, "cyclic.json", &cyclic)], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("non-radial topology"), "{}", stdout(&o));

    let o = feedin(&["validate", "/no/such/grid.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = feedin(&["validate", &write(&dir, "bad.json", "{ not json")], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn plan_thermal_toy_closed_form() {
    let dir = TempDir::new().unwrap();
    let grid = write(&dir, "toy.json", THERMAL_TOY);
    let out = dir.path().join("plan");
    let o = feedin(&["plan", &grid, "--fl", "1.0"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(out.join("plan.json"));
    assert!((v["scal_star"].as_f64().unwrap() - 5.0).abs() < 1e-6);
    assert_eq!(v["status"], "optimal");
    assert_eq!(v["bottlenecks"]["binding_lines"][0]["element"], "0-1");
    assert!(out.join("plan.csv").exists());
}

#[test]
fn plan_example_peak_hour_curtailment() {
    let dir = TempDir::new().unwrap();
    let o = feedin(
        &["plan", &shipped("household.json"), "--fl", "0.7", "--scal-max", "1", "--hours", "12", "--json"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let v = json(dir.path().join("plan.json"));
    let curtailed_kw = v["plan"]["hours"][0]["curtailment"][0].as_f64().unwrap() * 1000.0;
    assert!((curtailed_kw - 0.7).abs() < 1e-9, "{curtailed_kw}");
    assert!(!dir.path().join("plan.csv").exists());
}

#[test]
fn plan_both_engines_on_random_grid() {
    let dir = TempDir::new().unwrap();
    let mut checked = 0;
    for seed in 0..6 {
        let g = random_small_grid(seed, RandomGridSpec::default());
        let path = write(&dir, &format!("g{seed}.json"), &serialize_grid(&g));
        let out = dir.path().join(format!("p{seed}"));
        let o = feedin(&["plan", &path, "--fl", "0.8", "--case", "b", "--engine", "both"], &out);
        if o.status.code() == Some(3) {
            continue;
        }
        assert_eq!(o.status.code(), Some(0), "seed {seed}: {}", String::from_utf8_lossy(&o.stderr));
        let v = json(out.join("plan.json"));
        if let Some(d) = v["deviation"].as_f64() {
            assert!(d <= 1e-3, "seed {seed}: deviation {d}");
            checked += 1;
        }
    }
    assert!(checked >= 3);
}

#[test]
fn overloaded_grid_exits_infeasible_at_zero() {
    let dir = TempDir::new().unwrap();
    let text = THERMAL_TOY.replace(
        r#""generators": ["#,
        r#""generators": [{"id": "old", "bus": "1", "kind": "pv_existing_fixed", "p_max": 6.0, "profile": [1.0]}, "#,
    );
    let grid = write(&dir, "over.json", &text);
    for engine in ["milp", "oracle", "both"] {
        let o = feedin(&["plan", &grid, "--engine", engine], dir.path());
        assert_eq!(o.status.code(), Some(3), "{engine}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("before any expansion"));
    }
}

#[test]
fn inline_flags_override_scenario_file() {
    let dir = TempDir::new().unwrap();
    let grid = write(&dir, "toy.json", THERMAL_TOY);
    let scenario = write(&dir, "s.json", r#"{"fl": 1.0, "case": "b", "demand_multiplier": 1.1}"#);
    let o = feedin(&["plan", &grid, "--scenario", &scenario, "--fl", "0.7", "--json"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v = json(dir.path().join("plan.json"));
    assert_eq!(v["scenario"]["fl"], 0.7);
    assert_eq!(v["scenario"]["case"], "b");
    assert_eq!(v["scenario"]["demand_multiplier"], 1.1);
    assert!((v["scal_star"].as_f64().unwrap() - 5.0 / 0.7).abs() < 1e-3);

    let bad = write(&dir, "bad.json", r#"{"fl": 1.0, "colour": 2}"#);
    let o = feedin(&["plan", &grid, "--scenario", &bad], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = feedin(&["plan", &grid, "--fl", "1.5"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_urban_fixture_writes_24_rows() {
    let dir = TempDir::new().unwrap();
    let o = feedin(&["sweep", &shipped("urban_mv.json"), "--engine", "oracle"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 25);
    for f in ["sweep.json", "capacity.svg", "energy.svg"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    assert!(stdout(&o).contains("heuristic"));

    let again = dir.path().join("again");
    let o = feedin(&["report", dir.path().join("sweep.json").to_str().unwrap(), "--csv"], &again);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_to_string(again.join("sweep.csv")).unwrap(), csv);
    assert!(!again.join("capacity.svg").exists());
}

#[test]
fn sweep_reports_failed_cells() {
    let dir = TempDir::new().unwrap();
    // Series longer than the MILP guard make every cell fail.
    let spec = write(&dir, "spec.json", r#"{"fl_values": [1.0], "cases": ["a"], "demand_multipliers": [1.0], "engine": "milp", "mode": "annual"}"#);
    let mut g = random_small_grid(2, RandomGridSpec::default());
    g.hour_count = 200;
    for b in &mut g.buses {
        b.demand_p = vec![b.demand_p[0]; 200];
        b.demand_q = vec![b.demand_q[0]; 200];
    }
    for u in &mut g.gens {
        u.profile = vec![u.profile[0]; 200];
    }
    let grid = write(&dir, "long.json", &serialize_grid(&g));
    let o = feedin(&["sweep", &grid, "--spec", &spec], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("did not complete"));
    assert!(fs::read_to_string(dir.path().join("sweep.csv")).unwrap().contains("failed"));
}

#[test]
fn simulate_reports_conservation() {
    let dir = TempDir::new().unwrap();
    let o = feedin(&["simulate", &shipped("household.json"), "--scal", "0"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("generated          0.000000 MWh"), "{}", stdout(&o));
    let v = json(dir.path().join("simulate.json"));
    assert_eq!(v["account"]["generated_mwh"], 0.0);

    let o = feedin(&["simulate", &shipped("household.json"), "--scal", "1", "--fl", "0.7"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let v = json(dir.path().join("simulate.json"));
    let a = &v["account"];
    let gap = a["generated_mwh"].as_f64().unwrap() + a["curtailed_mwh"].as_f64().unwrap()
        - a["available_mwh"].as_f64().unwrap();
    assert!(gap.abs() <= 1e-9 * a["available_mwh"].as_f64().unwrap());
    assert_eq!(fs::read_to_string(dir.path().join("simulate.csv")).unwrap().lines().count(), 25);

    let o = feedin(&["simulate", &shipped("urban_mv.json"), "--scal", "1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn output_directory_from_environment() {
    let dir = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_feedin"))
        .args(["fixture", "household"])
        .env("FEEDIN_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("household.json").exists());

    let o = feedin(&["fixture", "suburban"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = feedin(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn shipped_fixtures_match_generator() {
    for kind in FixtureKind::ALL {
        let profile = if kind == FixtureKind::Lv {
            FixtureProfile::new(kind, 1).with_hours(24)
        } else {
            FixtureProfile::new(kind, 1)
        };
        let grid = synth_grid(&profile).unwrap();
        let text = fs::read_to_string(shipped(&format!("{}.json", kind.as_str()))).unwrap();
        assert_eq!(text, serialize_grid(&grid), "{}", kind.as_str());
    }
}
