use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn qwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qwalk")).args(args).env("RUST_LOG", "warn").output().expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn write_scenario(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("s.toml");
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn passing_scenario_exits_zero() {
    let out = qwalk(&["decay", path_str(&scenario("dihedral.toml")), "--no-cache"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["verdict"], "pass");
    assert_eq!(v["results"]["rate_bound"], 0.75);
}

#[test]
fn negative_control_exits_zero() {
    let out = qwalk(&["catwalk", path_str(&scenario("nonnormal_control.toml")), "--no-cache"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["results"]["h2_witness"], "b");
    let h2 = v["assertions"].as_array().unwrap().iter().find(|a| a["name"] == "h2").unwrap();
    assert_eq!(h2["expected"], "fail");
    assert_eq!(h2["passed"], false);
    assert_eq!(h2["ok"], true);
}

#[test]
fn missed_target_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_scenario(
        dir.path(),
        "version = 1\nname = \"wrong\"\n[group]\nfamily = \"free-product\"\norders = [2, 2, 2]\n[run]\nhorizon = 30\nwindow = 10\ngreen_e = 3.0\n",
    );
    let out = qwalk(&["green-classical", path_str(&p), "--no-cache"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("green_e"));
}

#[test]
fn unexpected_pass_of_negative_control_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_scenario(
        dir.path(),
        "version = 1\nname = \"normal\"\n[group]\nfamily = \"free-product\"\norders = [2, 2]\n\
         [subcategory]\nring = \"pointed\"\nlabels = [\"e\"]\n[run]\ncap = 20\n[expect]\nh2 = \"fail\"\n",
    );
    let out = qwalk(&["catwalk", path_str(&p), "--no-cache"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_orders_exit_two_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_scenario(dir.path(), "version = 1\nname = \"bad\"\n[group]\nfamily = \"free-product\"\norders = [2, 1]\n");
    let out = qwalk(&["describe", path_str(&p), "--no-cache"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("group.orders[1]"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn unknown_field_and_version_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_scenario(dir.path(), "version = 1\nname = \"x\"\n[run]\nhorizn = 3\n");
    let out = qwalk(&["describe", path_str(&p), "--no-cache"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("horizn"));
    let p = write_scenario(dir.path(), "version = 7\nname = \"x\"\n");
    assert_eq!(qwalk(&["describe", path_str(&p)]).status.code(), Some(2));
    assert_eq!(qwalk(&["describe", "/nonexistent/s.toml"]).status.code(), Some(2));
}

#[test]
fn reports_are_byte_identical() {
    for (cmd, file) in [("catwalk", "rep_s3.toml"), ("contraction", "dihedral.toml"), ("describe", "s3_tree.toml")] {
        let path = scenario(file);
        for fmt in ["json", "csv"] {
            let args = [cmd, path_str(&path), "--no-cache", "--format", fmt];
            let a = qwalk(&args);
            let b = qwalk(&args);
            assert_eq!(a.status.code(), Some(0), "{cmd} {file}");
            assert!(!a.stdout.is_empty());
            assert_eq!(a.stdout, b.stdout, "{cmd} {file} {fmt}");
        }
    }
}

#[test]
fn seed_changes_sampled_results() {
    let file = scenario("dihedral.toml");
    let a = qwalk(&["contraction", path_str(&file), "--no-cache", "--seed", "1"]);
    let b = qwalk(&["contraction", path_str(&file), "--no-cache", "--seed", "2"]);
    assert_ne!(a.stdout, b.stdout);
}

#[test]
fn resumed_horizon_matches_fresh_run() {
    let cache = tempfile::tempdir().unwrap();
    let cache_dir = path_str(cache.path());
    let file = scenario("tree_green.toml");
    let meta = cache.path().join("meta.json");
    // The 0.01 target is not reached by horizon 40, so only the stored sums matter here.
    let first = qwalk(&["green-classical", path_str(&file), "--cache-dir", cache_dir, "--horizon", "40"]);
    assert_eq!(first.status.code(), Some(1));
    let resumed = qwalk(&[
        "green-classical",
        path_str(&file),
        "--cache-dir",
        cache_dir,
        "--horizon",
        "60",
        "--meta",
        path_str(&meta),
    ]);
    let meta_text = std::fs::read_to_string(&meta).unwrap();
    assert!(meta_text.contains("resumed from horizon 40"), "{meta_text}");
    assert_eq!(resumed.status.code(), Some(0));
    let fresh = qwalk(&["green-classical", path_str(&file), "--no-cache", "--horizon", "60"]);
    assert_eq!(resumed.stdout, fresh.stdout);

    let hit = qwalk(&["green-classical", path_str(&file), "--cache-dir", cache_dir, "--meta", path_str(&meta)]);
    assert!(std::fs::read_to_string(&meta).unwrap().contains("\"hit\""));
    assert_eq!(hit.stdout, fresh.stdout);
}

#[test]
fn killed_walk_resume_matches_fresh_run() {
    let cache = tempfile::tempdir().unwrap();
    let cache_dir = path_str(cache.path());
    let file = scenario("dihedral.toml");
    let file = path_str(&file);
    let base = ["martin", file, "--cache-dir", cache_dir];
    qwalk(&[&base[..], &["--horizon", "15"]].concat());
    let resumed = qwalk(&[&base[..], &["--horizon", "30"]].concat());
    let fresh = qwalk(&["martin", file, "--no-cache", "--horizon", "30"]);
    assert!(!fresh.stdout.is_empty());
    assert_eq!(resumed.stdout, fresh.stdout);
}

#[test]
fn corrupt_cache_is_ignored_with_warning() {
    let cache = tempfile::tempdir().unwrap();
    let cache_dir = path_str(cache.path());
    let file = scenario("tree_green.toml");
    let args = ["green-classical", path_str(&file), "--cache-dir", cache_dir];
    let clean = qwalk(&args);
    for entry in std::fs::read_dir(cache.path()).unwrap() {
        let p = entry.unwrap().path();
        let mut bytes = std::fs::read(&p).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0xff;
        std::fs::write(&p, bytes).unwrap();
    }
    let again = qwalk(&args);
    assert_eq!(again.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&again.stderr).contains("corrupt"));
    assert_eq!(clean.stdout, again.stdout);
}

#[test]
fn report_file_and_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("r.csv");
    let out = qwalk(&[
        "fusion-check",
        path_str(&scenario("rep_s3.toml")),
        "--no-cache",
        "--format",
        "csv",
        "--out",
        path_str(&out_path),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.starts_with("table,ring,check,passed,worst"));
    assert!(text.contains("assertions,invariants:table,pass,true,true"));
}

#[test]
fn shipped_scenarios_meet_expectations() {
    let runs: [(&str, &[&str]); 6] = [
        ("dihedral.toml", &["describe", "fusion-check", "decay", "contraction", "harmonic"]),
        ("s3_tree.toml", &["describe", "fusion-check", "decay", "contraction", "harmonic"]),
        ("nonnormal_control.toml", &["catwalk"]),
        ("rep_s3.toml", &["describe", "fusion-check", "catwalk"]),
        ("tree_green.toml", &["green-classical"]),
        ("drifted_z.toml", &["green-classical"]),
    ];
    for (file, commands) in runs {
        for cmd in commands {
            let out = qwalk(&[cmd, path_str(&scenario(file)), "--no-cache"]);
            assert_eq!(out.status.code(), Some(0), "{cmd} {file}: {}", String::from_utf8_lossy(&out.stderr));
        }
    }
}
