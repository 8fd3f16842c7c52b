use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sybilnav(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sybilnav"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn data_rows(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn lists_every_shipped_scenario() {
    let out = sybilnav(&["list-scenarios"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 11);
    assert!(text.contains("fig_speedgraph.scn"));
}

#[test]
fn run_then_replay_reproduces_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    let out = sybilnav(&[
        "run",
        "route_flip",
        "--seed",
        "4",
        "--out",
        run_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = String::from_utf8(out.stdout).unwrap();
    assert!(summary.contains("s07>s08 1600 m / 240 s"), "{summary}");
    for f in [
        "metrics.csv",
        "summary.txt",
        "speeds.csv",
        "weights.csv",
        "probes.replay",
    ] {
        assert!(run_dir.join(f).is_file(), "missing {f}");
    }

    let replay_dir = dir.path().join("replay");
    let out = sybilnav(&[
        "replay",
        run_dir.join("probes.replay").to_str().unwrap(),
        "--map",
        "campus.map",
        "--out",
        replay_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        data_rows(&run_dir.join("metrics.csv")),
        data_rows(&replay_dir.join("metrics.csv"))
    );
}

#[test]
fn same_seed_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["a", "b"] {
        let out = sybilnav(&[
            "run",
            "invalidate",
            "--seed",
            "9",
            "--out",
            dir.path().join(sub).to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    for f in ["metrics.csv", "probes.replay", "weights.csv"] {
        assert_eq!(
            fs::read(dir.path().join("a").join(f)).unwrap(),
            fs::read(dir.path().join("b").join(f)).unwrap(),
            "{f} differs"
        );
    }
}

#[test]
fn scenario_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let scn = dir.path().join("short.scn");
    fs::write(
        &scn,
        "[map]\nfile = campus.map\n\n[engine]\nduration_s = 600\n\n[benign]\ncount = 2\nroutes = s01>s02>s03\n",
    )
    .unwrap();
    let out = sybilnav(&[
        "run",
        scn.to_str().unwrap(),
        "--out",
        dir.path().join("o").to_str().unwrap(),
        "--override",
        "engine.duration_s=300",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let metrics = fs::read_to_string(dir.path().join("o/metrics.csv")).unwrap();
    let last_t = metrics
        .lines()
        .last()
        .and_then(|l| l.split(',').next())
        .unwrap()
        .to_string();
    assert_eq!(last_t, "300");
}

#[test]
fn bad_input_exits_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = sybilnav(&[
        "run",
        "no_such_scenario",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_scenario"));

    let out = sybilnav(&[
        "run",
        "fig_speedgraph",
        "--out",
        dir.path().to_str().unwrap(),
        "--override",
        "attack.n_bots=zero",
    ]);
    assert_eq!(out.status.code(), Some(2));
}
