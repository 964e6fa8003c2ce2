use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use relcap_lab::output::{RunManifest, MANIFEST};

fn relcap(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relcap"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("RELCAP_OUT")
        .output()
        .expect("binary runs")
}

fn run_dir(output: &Output) -> PathBuf {
    let stdout = String::from_utf8_lossy(&output.stdout);
    let line = stdout.lines().find_map(|l| l.strip_prefix("results in ")).unwrap_or_else(|| {
        panic!("no run directory in output:\n{stdout}\n{}", String::from_utf8_lossy(&output.stderr))
    });
    PathBuf::from(line)
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn entropy_of_the_unit_interval() {
    let tmp = tempfile::tempdir().unwrap();
    let out = relcap(tmp.path(), &["entropy", "--set", "interval:0:1", "--eps", "0.25,0.1"]);
    assert!(out.status.success());
    let dir = run_dir(&out);
    let rows = csv_rows(&dir.join("profile.csv"));
    assert_eq!(rows, [["0.25", "5"], ["0.1", "11"]]);
    let m = RunManifest::read(&dir.join(MANIFEST)).unwrap();
    assert_eq!(m.command, "entropy");
    assert_eq!(m.files, ["profile.csv", "dimension.json"]);
}

#[test]
fn entropy_geometric_sweep_on_cantor() {
    let tmp = tempfile::tempdir().unwrap();
    let out = relcap(tmp.path(), &["entropy", "--set", "cantor:2:1/3:12", "--eps-geom", "0.1:0.0001:0.5"]);
    assert!(out.status.success());
    let d = json(&run_dir(&out).join("dimension.json"));
    let slope = d["dimension"]["upper_minkowski"].as_f64().unwrap();
    assert!((slope - 2f64.ln() / 3f64.ln()).abs() < 0.05, "{slope}");
}

#[test]
fn smallball_at_unit_radius() {
    let tmp = tempfile::tempdir().unwrap();
    let out = relcap(tmp.path(), &["smallball", "--r", "1.0"]);
    assert!(out.status.success());
    let rows = csv_rows(&run_dir(&out).join("sigma.csv"));
    let v: f64 = rows[0][1].parse().unwrap();
    assert!((v - 0.370777).abs() < 1e-6, "{v}");
}

#[test]
fn smallball_monte_carlo_comparison() {
    let tmp = tempfile::tempdir().unwrap();
    let out = relcap(tmp.path(), &["smallball", "--r", "0.8", "--compare-mc", "--reps", "4000", "--k", "10", "--seed", "3"]);
    assert!(out.status.success());
    let dir = run_dir(&out);
    let mut r = csv::Reader::from_path(dir.join("sigma.csv")).unwrap();
    let headers = r.headers().unwrap().clone();
    let row = r.records().next().unwrap().unwrap();
    let within = headers.iter().position(|h| h == "within_3se").unwrap();
    assert_eq!(&row[within], "true");
    assert!(dir.join("comparison.json").exists());
}

#[test]
fn liltest_verdicts_and_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let cases: [(&[&str], i32, &str); 5] = [
        (&["liltest", "--H", "hnu:5.5"], 0, "converges"),
        (&["liltest", "--H", "hnu:4.9"], 0, "diverges"),
        (&["liltest", "--H", "hnu:2.5", "--mode", "as"], 0, "converges"),
        (&["liltest", "--H", "hnu:4", "--set", "cantor:2:1/3:12"], 0, "converges"),
        (&["liltest", "--H", r#"{"kind":"tabulated","samples":[[1,1],[100,0.5]]}"#, "--set", "interval:0:1"], 3, "undetermined"),
    ];
    for (args, code, verdict) in cases {
        let out = relcap(tmp.path(), args);
        assert_eq!(out.status.code(), Some(code), "{args:?}");
        let v = json(&run_dir(&out).join("verdict.json"));
        assert_eq!(v["verdict"], verdict, "{args:?}");
    }
}

#[test]
fn liltest_sum_integral_table() {
    let tmp = tempfile::tempdir().unwrap();
    let out = relcap(tmp.path(), &["liltest", "--H", "hnu:6", "--set", "interval:0:1", "--sum", "10000"]);
    assert!(out.status.success());
    let dir = run_dir(&out);
    assert!(!csv_rows(&dir.join("sum_integral.csv")).is_empty());
    let v = json(&dir.join("verdict.json"));
    assert_eq!(v["sum_integral"]["sum_verdict"], "converges");
}

#[test]
fn audit_key_ee_has_no_violations() {
    let tmp = tempfile::tempdir().unwrap();
    let out = relcap(tmp.path(), &["audit", "--ineq", "key-ee", "--n", "100:1000000", "--H", "hnu:0"]);
    assert!(out.status.success());
    let a = json(&run_dir(&out).join("audit.json"));
    assert_eq!(a["violations"], 0);
    assert!(a["fitted_constant"].as_f64().unwrap() >= 1.0);
}

#[test]
fn audit_ees_above_floor_for_large_indices() {
    let tmp = tempfile::tempdir().unwrap();
    let out = relcap(tmp.path(), &["audit", "--ineq", "ees", "--n", "10000:1000000"]);
    assert!(out.status.success());
    let a = json(&run_dir(&out).join("audit.json"));
    assert_eq!(a["violations"], 0);
}

#[test]
fn capacity_of_a_point_matches_sigma() {
    let tmp = tempfile::tempdir().unwrap();
    let out = relcap(tmp.path(), &["capacity", "--set", "point:0", "--r", "0.8", "--reps", "100000", "--seed", "7"]);
    assert!(out.status.success());
    let dir = run_dir(&out);
    let mut r = csv::Reader::from_path(dir.join("capacity.csv")).unwrap();
    let headers = r.headers().unwrap().clone();
    let row = r.records().next().unwrap().unwrap();
    let get = |name: &str| -> f64 { row[headers.iter().position(|h| h == name).unwrap()].parse().unwrap() };
    assert!((get("rho") - 1.0).abs() <= 3.0 * get("rho_stderr") + 0.02);
    assert_eq!(get("hit"), get("capacity"));
    let results = json(&dir.join("results.json"));
    assert_eq!(results["records"][0]["seed"], 7);
    assert_eq!(results["records"][0]["k"], 12);
}

#[test]
fn capacity_discretization_audit() {
    let tmp = tempfile::tempdir().unwrap();
    let out = relcap(
        tmp.path(),
        &["capacity", "--set", "interval:0:1", "--r", "0.8", "--reps", "2000", "--k", "8", "--audit-discretization"],
    );
    assert!(out.status.success());
    let rows = csv_rows(&run_dir(&out).join("discretization.csv"));
    assert_eq!(rows.len(), 1);
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["capacity", "--set", "points:0,0.5,1", "--r", "0.7", "--reps", "2000", "--k", "9", "--seed", "11"];
    let a = relcap(tmp.path(), &[&["--threads", "1"], &args[..]].concat());
    let b = relcap(tmp.path(), &[&["--threads", "3"], &args[..]].concat());
    let (da, db) = (run_dir(&a), run_dir(&b));
    assert_ne!(da, db);
    let replay = relcap(tmp.path(), &["replay", da.join(MANIFEST).to_str().unwrap()]);
    assert!(replay.status.success());
    let dc = run_dir(&replay);
    for file in ["capacity.csv", "results.json"] {
        let bytes = fs::read(da.join(file)).unwrap();
        assert_eq!(bytes, fs::read(db.join(file)).unwrap(), "{file}");
        assert_eq!(bytes, fs::read(dc.join(file)).unwrap(), "{file}");
    }
    let (ma, mb) = (RunManifest::read(&da.join(MANIFEST)).unwrap(), RunManifest::read(&db.join(MANIFEST)).unwrap());
    assert_eq!(ma.config_sha256, mb.config_sha256);
    assert_eq!(ma.seed, Some(11));
}

#[test]
fn simulate_experiments_write_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let mc = ["--reps", "300", "--k", "8"];
    let cases: [(&[&str], &str); 6] = [
        (&["simulate", "joint", "--gaps", "0.1,0.5", "--r", "0.7"], "joint.csv"),
        (&["simulate", "counting", "--set", "interval:0:1", "--r", "0.8"], "counting.csv"),
        (&["simulate", "short-window", "--r", "0.8", "--slices", "8"], "short_window.csv"),
        (&["simulate", "window", "--horizon", "2", "--r", "0.9"], "window.csv"),
        (&["simulate", "planar", "--lambdas", "0.2,0.8", "--r", "0.9"], "planar.csv"),
        (&["simulate", "paths", "--s", "0,0.5", "--replicates", "2"], "paths.csv"),
    ];
    for (args, file) in cases {
        let out = relcap(tmp.path(), &[args, &mc[..]].concat());
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        let rows = csv_rows(&run_dir(&out).join(file));
        assert!(!rows.is_empty(), "{file}");
    }
}

#[test]
fn invalid_input_exits_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        &["entropy", "--set", "interval:0.5:2", "--eps", "0.1"][..],
        &["entropy", "--set", "circle:1", "--eps", "0.1"],
        &["liltest", "--H", "hnu:-1"],
        &["smallball", "--r", "-0.5"],
        &["capacity", "--set", "point:0", "--r", "0.5", "--reps", "10"],
        &["audit", "--ineq", "ees", "--n", "5:100"],
    ] {
        let out = relcap(tmp.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn slice_cap_exits_with_4() {
    let tmp = tempfile::tempdir().unwrap();
    let out = relcap(tmp.path(), &["capacity", "--set", "interval:0:1", "--r", "0.1", "--reps", "200"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));
}

#[test]
fn replay_rejects_tampered_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = relcap(tmp.path(), &["entropy", "--set", "interval:0:1", "--eps", "0.25"]);
    let path = run_dir(&out).join(MANIFEST);
    let text = fs::read_to_string(&path).unwrap().replace("0.25", "0.5");
    fs::write(&path, text).unwrap();
    let out = relcap(tmp.path(), &["replay", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
