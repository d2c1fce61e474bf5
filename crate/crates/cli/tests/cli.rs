use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_covid-abm"));
    c.env_remove("COVID_ABM_OUT");
    c
}

fn desk_spec() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/desk.json")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path) -> PathBuf {
    let bundle = dir.join("bundle");
    let out = run(&["synth", "--spec", p(&desk_spec()), "--out", p(&bundle)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    bundle.join("config.json")
}

fn checksum(dir: &Path) -> String {
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    s["event_log_sha256"].as_str().unwrap().to_string()
}

#[test]
fn synth_run_validate_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path());
    let out = tmp.path().join("run");
    let r = run(&["run", "--config", p(&cfg), "--out", p(&out)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    for f in ["event_log.csv", "pattern1.csv", "pattern2.csv", "pattern3.csv", "pattern4.csv", "summary.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let v = run(&["validate", "--out", p(&out)]);
    let stdout = String::from_utf8_lossy(&v.stdout);
    assert_eq!(v.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("pattern4: PASS"));
}

#[test]
fn same_seed_same_checksum() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path());
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    for (dir, seed) in [(&a, "7"), (&b, "7"), (&c, "8")] {
        let r = run(&["run", "--config", p(&cfg), "--seed", seed, "--horizon", "5", "--out", p(dir)]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    assert_eq!(checksum(&a), checksum(&b));
    assert_ne!(checksum(&a), checksum(&c));
    assert_eq!(std::fs::read(a.join("event_log.csv")).unwrap(), std::fs::read(b.join("event_log.csv")).unwrap());
}

#[test]
fn horizon_one_covers_one_day() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path());
    let out = tmp.path().join("run");
    let r = run(&["run", "--config", p(&cfg), "--horizon", "1", "--out", p(&out)]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let p1 = std::fs::read_to_string(out.join("pattern1.csv")).unwrap();
    let days: std::collections::BTreeSet<&str> = p1.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(days.into_iter().collect::<Vec<_>>(), vec!["0"]);
    let census = std::fs::read_to_string(out.join("census.csv")).unwrap();
    assert_eq!(census.lines().count(), 2);
}

#[test]
fn report_rebuilds_from_saved_log() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path());
    let out = tmp.path().join("run");
    assert!(run(&["run", "--config", p(&cfg), "--horizon", "3", "--out", p(&out)]).status.success());
    let before = std::fs::read(out.join("pattern3.csv")).unwrap();
    std::fs::remove_file(out.join("pattern3.csv")).unwrap();
    assert!(run(&["report", "--out", p(&out)]).status.success());
    assert_eq!(std::fs::read(out.join("pattern3.csv")).unwrap(), before);
}

#[test]
fn validation_breach_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path());
    let out = tmp.path().join("run");
    assert!(run(&["run", "--config", p(&cfg), "--horizon", "3", "--out", p(&out)]).status.success());
    // an impossible staffing window
    let mut saved: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("run_config.json")).unwrap()).unwrap();
    saved["validation"]["pattern4_mean_min"] = 5.0.into();
    saved["validation"]["pattern4_mean_max"] = 6.0.into();
    std::fs::write(out.join("strict.json"), saved.to_string()).unwrap();
    let v = run(&["validate", "--config", p(&out.join("strict.json")), "--horizon", "3", "--out", p(&out)]);
    assert_eq!(v.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&v.stdout).contains("pattern4: FAIL"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["run", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.json");
    assert_eq!(run(&["run", "--config", p(&missing), "--out", p(tmp.path())]).status.code(), Some(2));
}

#[test]
fn dump_defaults_is_loadable() {
    let out = run(&["config", "--dump-defaults"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["horizon"], 30);
    assert_eq!(v["start_date"], "2021-12-15");
}

#[test]
fn forecast_writes_only_forecast() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path());
    let out = tmp.path().join("fc");
    assert!(run(&["forecast", "--config", p(&cfg), "--out", p(&out)]).status.success());
    let names: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(names, vec!["forecast.csv"]);
    let text = std::fs::read_to_string(out.join("forecast.csv")).unwrap();
    assert!(text.starts_with("county,day,estimated_infections\n"));
    assert_eq!(text.lines().count(), 1 + 5 * 30);
}
