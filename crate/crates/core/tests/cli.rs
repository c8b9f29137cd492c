use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use szego_core::lab::{ExperimentKind, RunSpec};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_szego-lab")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

const SMALL_PDE: &str = r#"{
    "initial": {"coefficients": [[0, 0], [1, 0]]},
    "flow": {"dt": 0.01, "t_end": 0.5, "cutoff": 8, "monitor_stride": 5, "spectrum_rank": 2}
}"#;

#[test]
fn evolve_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "z.json", SMALL_PDE);
    let out = dir.path().join("out");
    let o = lab(&["evolve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,Q,M,E,absJ,H12,H1,bmo_proxy,sigma1,sigma2\n"));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["status"], "ok");
    assert_eq!(summary["drift"]["M"], 0.0);
    assert_eq!(summary["truncation"]["flag"], false);
}

#[test]
fn identical_specs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "r.json",
        r#"{"initial": {"rational": {"b": [1, 0], "c": [1, 0], "p": [0.5, 0]}},
            "flow": {"dt": 0.005, "t_end": 0.5, "cutoff": 32, "monitor_stride": 10, "spectrum_rank": 3}}"#,
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = lab(&["evolve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    for f in ["trajectory.csv", "summary.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let unknown = write(dir.path(), "u.json", r#"{"xy": {"x0": 0, "y0": 1, "q": 1, "dt": 0.001, "extra": 1}}"#);
    let o = lab(&["xy-demo", "--config", unknown.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("config error"));

    let two_sources = write(
        dir.path(),
        "two.json",
        r#"{"initial": {"coefficients": [[1, 0]], "rational": {"b": [1, 0], "c": [1, 0], "p": [0.5, 0]}},
            "flow": {"dt": 0.01, "t_end": 0.1, "cutoff": 4, "monitor_stride": 1, "spectrum_rank": 1}}"#,
    );
    assert_eq!(lab(&["evolve", "--config", two_sources.to_str().unwrap(), "--out", out]).status.code(), Some(2));

    let wrong_kind = write(dir.path(), "k.json", r#"{"kind": "fit", "xy": {"x0": 0, "y0": 1, "q": 1, "dt": 0.001}}"#);
    assert_eq!(lab(&["xy-demo", "--config", wrong_kind.to_str().unwrap(), "--out", out]).status.code(), Some(2));

    let missing = dir.path().join("missing.json");
    assert_eq!(lab(&["xy-demo", "--config", missing.to_str().unwrap(), "--out", out]).status.code(), Some(2));

    let ok = write(dir.path(), "ok.json", SMALL_PDE);
    let o = lab(&["evolve", "--config", ok.to_str().unwrap(), "--out", out, "--seedless"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seedless"));
}

#[test]
fn numerical_abort_exits_3_with_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "blow.json",
        r#"{"initial": {"coefficients": [[3, 0], [2, 1], [1, 0]]},
            "flow": {"dt": 0.5, "t_end": 50, "cutoff": 16, "monitor_stride": 1, "spectrum_rank": 1,
                     "integrator": "rk4"}}"#,
    );
    let out = dir.path().join("out");
    let o = lab(&["evolve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(fs::read_to_string(out.join("trajectory.csv")).unwrap().lines().count() >= 2);
    let summary = fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("\"aborted\""));
}

#[test]
fn several_configs_with_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.json", r#"{"xy": {"x0": 0, "y0": 1, "q": 1, "dt": 0.001}}"#);
    let b = write(dir.path(), "b.json", r#"{"xy": {"x0": 0.3, "y0": -0.5, "q": 0.6, "dt": 0.001}}"#);
    let out = dir.path().join("out");
    let o = lab(&[
        "xy-demo",
        "--config",
        a.to_str().unwrap(),
        "--config",
        b.to_str().unwrap(),
        "--jobs",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    for stem in ["a", "b"] {
        let s: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join(stem).join("summary.json")).unwrap()).unwrap();
        assert_eq!(s["within_bound"], true);
    }
}

#[test]
fn fit_reads_a_previous_run() {
    let dir = tempfile::tempdir().unwrap();
    let hunt = write(
        dir.path(),
        "hunt.json",
        r#"{"initial": {"blowup": {"q": 2, "m": 1, "p_abs": 0.5}},
            "flow": {"dt": 0.0005, "t_end": 5, "cutoff": 128, "monitor_stride": 20, "spectrum_rank": 1}}"#,
    );
    let o = lab(&["blowup-hunt", "--config", hunt.to_str().unwrap(), "--out", dir.path().join("hunt").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let fit = write(
        dir.path(),
        "fit.json",
        r#"{"fit": {"input": "hunt/trajectory.csv", "column": "abs_c", "window": [2.5, 5.0]}}"#,
    );
    let out = dir.path().join("fit");
    assert_eq!(lab(&["fit", "--config", fit.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.code(), Some(0));
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let slope = s["fit"]["slope"].as_f64().unwrap();
    assert!((slope + 4.0).abs() < 0.08, "slope {slope}");
}

#[test]
fn shipped_configs_are_valid() {
    let cases = [
        ("evolve-pde.json", ExperimentKind::EvolvePde),
        ("evolve-l1.json", ExperimentKind::EvolveL1),
        ("compare.json", ExperimentKind::Compare),
        ("compare-refinement.json", ExperimentKind::Compare),
        ("blowup-hunt.json", ExperimentKind::BlowupHunt),
        ("lax-audit.json", ExperimentKind::LaxAudit),
        ("xy-demo.json", ExperimentKind::XyDemo),
        ("fit.json", ExperimentKind::Fit),
    ];
    for (file, kind) in cases {
        let spec = RunSpec::load(&configs_dir().join(file)).unwrap();
        spec.validate(kind).unwrap_or_else(|e| panic!("{file}: {e}"));
    }
}
