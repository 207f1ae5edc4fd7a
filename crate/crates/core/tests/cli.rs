use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/uusimaa.toml");

fn zombiesim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zombiesim")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Writes a 24x16 hotspot map with a quarantine block and a small config for it.
fn small_setup(dir: &Path) -> String {
    let map = dir.join("map.csv");
    let o = zombiesim(&[
        "gen-map",
        "--width", "24",
        "--height", "16",
        "--population", "6000",
        "--hotspot", "8,8",
        "--decay-km", "3",
        "--quarantine", "2,2,14,14",
        "--impassable", "18,0,20,10",
        "--origin", "8,8",
        "--out", map.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let cfg = dir.join("small.toml");
    fs::write(
        &cfg,
        "map.path = \"map.csv\"\nscenario.kind = \"strict\"\nscenario.activation_step = 3\n\
         engine.max_steps = 300\nengine.trajectory_stride = 1\nbatch.n_runs = 6\nbatch.base_seed = 99\n",
    )
    .unwrap();
    cfg.to_str().unwrap().to_string()
}

#[test]
fn analyze_chain_reports_both_kernels() {
    let o = zombiesim(&["analyze", "chain", "--q", "0.246341", "--cap", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("single-event"), "{text}");
    assert!(text.contains("per-zombie-wave"), "{text}");
    assert!(text.contains("reference") && text.contains("0.691"), "{text}");
}

#[test]
fn config_errors_exit_1() {
    let o = zombiesim(&["batch", "--config", "missing.file"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
    assert!(!o.stderr.is_empty());

    let o = zombiesim(&["run", "--config", FIXTURE, "--warp-speed"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "map.path = \"nowhere.csv\"\n").unwrap();
    assert_eq!(zombiesim(&["run", "--config", bad.to_str().unwrap()]).status.code(), Some(1));
    fs::write(&bad, "behavior.p_fight = 2.0\n").unwrap();
    assert_eq!(zombiesim(&["run", "--config", bad.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn unwritable_output_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_setup(dir.path());
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = blocker.join("sub");
    let o = zombiesim(&["batch", "--config", &cfg, "--quiet", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn fixture_run_is_repeatable() {
    let a = zombiesim(&["run", "--config", FIXTURE, "--seed", "7"]);
    let b = zombiesim(&["run", "--config", FIXTURE, "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("winner = "));
}

#[test]
fn batch_outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_setup(dir.path());
    let (one, two) = (dir.path().join("one"), dir.path().join("two"));
    let a = zombiesim(&["batch", "--config", &cfg, "--quiet", "--out", one.to_str().unwrap()]);
    let b = zombiesim(&["batch", "--config", &cfg, "--quiet", "--parallel", "3", "--out", two.to_str().unwrap()]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(b.status.code(), Some(0));
    for f in ["runs.csv", "trajectories.csv", "histograms.csv"] {
        let x = fs::read(one.join(f)).unwrap();
        assert_eq!(x, fs::read(two.join(f)).unwrap(), "{f}");
        assert!(!x.contains(&b'\r'));
    }
    let runs = fs::read_to_string(one.join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 7);
    assert!(stdout(&a).contains("n_runs = 6"));
}

#[test]
fn frames_from_run_match_rendered_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_setup(dir.path());
    let frames = dir.path().join("frames");
    let snaps = dir.path().join("snaps.csv");
    let o = zombiesim(&[
        "run", "--config", &cfg, "--seed", "3",
        "--frames", frames.to_str().unwrap(),
        "--snapshots", snaps.to_str().unwrap(),
        "--every", "2",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rendered = dir.path().join("rendered");
    let r = zombiesim(&[
        "render", "--config", &cfg, "--snapshots", snaps.to_str().unwrap(), "--out", rendered.to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));

    let mut names: Vec<_> = fs::read_dir(&frames).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(!names.is_empty());
    assert_eq!(names[0].to_str().unwrap(), "frame_000000.ppm");
    let header = b"P6\n24 16\n255\n";
    for name in names {
        let a = fs::read(frames.join(&name)).unwrap();
        assert_eq!(a, fs::read(rendered.join(&name)).unwrap(), "{name:?}");
        assert!(a.starts_with(header));
        assert_eq!(a.len(), header.len() + 3 * 24 * 16);
    }
}
