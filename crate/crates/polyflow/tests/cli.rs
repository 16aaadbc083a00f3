use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use polyflow::config::read_json;
use polyflow::formats::{SolutionDoc, SwitchesDoc};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn polyflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyflow"))
        .args(args)
        .output()
        .unwrap()
}

fn run_with(cmd: &str, cfg: &str, out: &Path, extra: &[&str]) -> (i32, String, String) {
    let cfg = config(cfg);
    let mut args = vec![
        cmd,
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let o = polyflow(&args);
    (
        o.status.code().unwrap(),
        String::from_utf8(o.stdout).unwrap(),
        String::from_utf8(o.stderr).unwrap(),
    )
}

fn value_after(text: &str, key: &str) -> f64 {
    let line = text
        .lines()
        .find(|l| l.starts_with(key))
        .unwrap_or_else(|| panic!("no {key:?} in {text}"));
    line[key.len()..].trim().parse().unwrap()
}

#[test]
fn trace_onedim_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run_with("trace", "onedim.json", dir.path(), &["--t-end", "5"]);
    assert_eq!(code, 0);
    assert!(out.contains("switches: 1"), "{out}");
    let csv = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert!(csv.starts_with("t,x1,cell\n") && csv.ends_with('\n'));
    let last = csv.lines().last().unwrap();
    assert!(last.starts_with('5'), "{last}");
    let sw: SwitchesDoc = read_json(&dir.path().join("switches.json")).unwrap();
    assert_eq!(sw.switches.len(), 1);
    assert_eq!((sw.switches[0].from, sw.switches[0].to), (1, 0));
    assert!((sw.switches[0].t - polyflow::regression::one_dim_switch_time()).abs() < 1e-6);
}

#[test]
fn trace_is_byte_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_with("trace", "plane.json", a.path(), &[]);
    run_with("trace", "plane.json", b.path(), &[]);
    for f in ["trace.csv", "switches.json"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap()
        );
    }
}

#[test]
fn missing_config_names_the_path() {
    let o = polyflow(&["trace", "--config", "/nonexistent/cfg.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/cfg.json"));
}

#[test]
fn missing_system_file_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"system": "gone.json", "x0": [0.0]}"#).unwrap();
    let o = polyflow(&["trace", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gone.json"));
}

#[test]
fn bad_tolerance_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run_with("trace", "onedim.json", dir.path(), &["--tol", "0"]);
    assert_eq!(code, 1);
    assert!(err.contains("tol"), "{err}");
    let (code, _, err) = run_with("solve", "bernoulli.json", dir.path(), &["--order", "1"]);
    assert_eq!(code, 1);
    assert!(err.contains("order"), "{err}");
}

#[test]
fn spiral_stress_hits_the_guard() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, err) = run_with("trace", "spiral_stress.json", dir.path(), &[]);
    assert_eq!(code, 2);
    assert!(err.contains("chattering guard"), "{err}");
    let sw: SwitchesDoc = read_json(&dir.path().join("switches.json")).unwrap();
    assert_eq!(sw.switches.len(), 21);
    assert!(out.contains("switches: 21"));
}

#[test]
fn solve_bernoulli_residual() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run_with("solve", "bernoulli.json", dir.path(), &[]);
    assert_eq!(code, 0);
    assert!(value_after(&out, "residual:") <= 1e-12);
    assert!(out.contains("resonances: none"));
    let doc: SolutionDoc = read_json(&dir.path().join("solution.json")).unwrap();
    let x = doc.series.build().unwrap();
    assert!((x.evaluate(6.0)[0] - polyflow::regression::bernoulli_solution(6.0)).abs() < 1e-8);
}

#[test]
fn solve_reports_resonances() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run_with("solve", "resonant.json", dir.path(), &[]);
    assert_eq!(code, 0);
    assert!(out.contains("J = [2, 0], component 1"), "{out}");
    let doc: SolutionDoc = read_json(&dir.path().join("solution.json")).unwrap();
    assert!(!doc.resonance_log.is_empty());
}

#[test]
fn solve_rejects_nondiagonal_linear_part() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run_with("solve", "nondiagonal.json", dir.path(), &[]);
    assert_eq!(code, 1);
    assert!(err.contains("linear part differs from diag"), "{err}");
}

#[test]
fn asym_verdicts_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run_with("asym", "asym_plane.json", dir.path(), &[]);
    assert_eq!((code, out.trim()), (0, "EventuallyInside cell 1"));
    let (code, _, err) = run_with("asym", "asym_outside.json", dir.path(), &[]);
    assert_eq!(code, 1);
    assert!(err.contains("does not lie in cell 1"), "{err}");
    let (code, out, _) = run_with("asym", "undecided.json", dir.path(), &[]);
    assert_eq!((code, out.trim()), (3, "Undecided: truncation-limited"));
    // one more order resolves it
    let (code, out, _) = run_with("asym", "undecided.json", dir.path(), &["--order", "5"]);
    assert_eq!(code, 0);
    assert!(
        out.starts_with("EventuallyOutside cell 0: facet 4, a = 0.333"),
        "{out}"
    );
    assert!(out.trim_end().ends_with("q = 0, r = -5"), "{out}");
}

#[test]
fn yamabe_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = run_with("yamabe", "octahedron.json", dir.path(), &[]);
    assert_eq!(code, 0);
    assert!(value_after(&out, "flips:") >= 1.0);
    assert!(value_after(&out, "final deviation:") <= 1e-6);
    let csv = std::fs::read_to_string(dir.path().join("yamabe.csv")).unwrap();
    assert!(csv.starts_with("t,u1,"));

    let (code, out, _) = run_with("yamabe", "tetrahedron_fixed.json", dir.path(), &[]);
    assert_eq!(code, 0);
    assert!(out.contains("flips: 0"));

    let (code, _, err) = run_with("yamabe", "degenerate.json", dir.path(), &[]);
    assert_eq!(code, 1);
    assert!(err.contains("degenerate"), "{err}");
}

#[test]
fn verify_suite_and_seed() {
    let a = polyflow(&["verify", "geometry", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    let text = String::from_utf8(a.stdout.clone()).unwrap();
    assert!(text.contains("PASS geometry/distance_sandwich"));
    assert!(text.ends_with("5/5 properties passed (seed 7)\n"));
    let b = polyflow(&["verify", "--suite", "geometry", "--seed", "7"]);
    assert_eq!(a.stdout, b.stdout);
    let bad = polyflow(&["verify", "nonsense"]);
    assert_eq!(bad.status.code(), Some(1));
}
