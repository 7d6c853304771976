use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nlsgeom"))
}

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn run(sub: &str, config: &Path, out: &Path) -> Output {
    bin()
        .arg(sub)
        .arg(config)
        .arg("--output-dir")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, value: &Value) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn soliton_evolve_conserves_mass() {
    let out = tempfile::tempdir().unwrap();
    let o = run("evolve", &example("soliton_evolve.json"), out.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let drift = fs::read_to_string(out.path().join("drift.csv")).unwrap();
    let mass: Vec<&str> = drift
        .lines()
        .find(|l| l.starts_with("mass,"))
        .unwrap()
        .split(',')
        .collect();
    let rel: f64 = mass[3].parse().unwrap();
    assert!(rel < 1e-11, "{rel:e}");

    let manifest = read_json(&out.path().join("manifest.json"));
    assert_eq!(manifest["subcommand"], "evolve");
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["config"]["init"]["kind"], "soliton");
    assert!(manifest["version"].is_string());
    assert!(manifest["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert!(out.path().join("trajectory/index.csv").exists());
}

#[test]
fn quintic_collapse_exits_with_blow_up_time() {
    let out = tempfile::tempdir().unwrap();
    let o = run("evolve", &example("quintic_blowup.json"), out.path());
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("last valid time"), "{}", stderr(&o));
    let report = read_json(&out.path().join("report.json"));
    assert_eq!(report["status"], "blow-up");
    let t = report["t_last_valid"].as_f64().unwrap();
    assert!(t > 0.0 && t < 1.0);
    assert_eq!(read_json(&out.path().join("manifest.json"))["exit_code"], 3);
}

#[test]
fn malformed_configs_name_the_offending_key() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (json!({"grid": {"n": "many", "length": 40}}), "grid.n"),
        (
            json!({"grid": {"n": 64, "length": 40}, "step": {"dt": 0.1, "t_final": 1, "strid": 2}}),
            "strid",
        ),
        (json!({"power": 3, "colour": "red"}), "colour"),
        (
            json!({"grid": {"n": 64, "length": 40}, "init": {"kind": "soliton", "eta": 1},
                   "step": {"dt": 0.01, "t_final": 0.1}, "charges": ["mass", "spin"], "output_dir": "x"}),
            "charges[1]",
        ),
        (
            json!({"grid": {"n": 64, "length": 40}, "init": {"kind": "soliton", "eta": 1},
                   "step": {"dt": -0.01, "t_final": 0.1}, "output_dir": "x"}),
            "step.dt",
        ),
    ];
    for (value, key) in cases {
        let cfg = write_config(dir.path(), &value);
        let o = run("evolve", &cfg, &dir.path().join("out"));
        assert_eq!(o.status.code(), Some(2), "{value}: {}", stderr(&o));
        assert!(stderr(&o).contains(key), "expected `{key}` in: {}", stderr(&o));
    }
    let o = bin()
        .arg("evolve")
        .arg(dir.path().join("absent.json"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn two_mode_scan_finds_two_curves() {
    let out = tempfile::tempdir().unwrap();
    let o = run("scan", &example("two_mode_scan.json"), out.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let meta = read_json(&out.path().join("scan.json"));
    assert!(meta["curve_count"].as_u64().unwrap() >= 2);
    assert_eq!(meta["extra"]["gamma"], 0.1);
    assert_eq!(meta["fixed"]["psi"], std::f64::consts::FRAC_PI_4);
    let csv = fs::read_to_string(out.path().join("scan.csv")).unwrap();
    assert_eq!(csv.lines().count(), 65);
    assert!(csv.starts_with("eta\\a,"));
}

#[test]
fn toy_and_finite_example_scans() {
    let out = tempfile::tempdir().unwrap();
    let o = run("scan", &example("toy4_scan.json"), out.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let meta = read_json(&out.path().join("scan.json"));
    assert_eq!(meta["zero_cells"], json!([]));
    assert_eq!(
        fs::read_to_string(out.path().join("zero_cells.csv")).unwrap(),
        "i,j\n"
    );

    let out = tempfile::tempdir().unwrap();
    let o = run("scan", &example("finite_example_scan.json"), out.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let meta = read_json(&out.path().join("scan.json"));
    let expected: Vec<Value> = (0..21).map(|i| json!([i, 10])).collect();
    assert_eq!(meta["zero_nodes"], Value::from(expected));
    assert_eq!(meta["curve_count"], 1);
}

#[test]
fn scan_below_gamma_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &json!({
            "grid": {"n": 1024, "length": 256.0},
            "scan": {
                "manifold": "ghw-restricted", "gamma": 0.1,
                "axis1": {"name": "eta", "lo": 0.1, "hi": 1.0},
                "axis2": {"name": "a", "lo": 0.05, "hi": 1.0},
                "fixed": {"phi": 0.0, "psi": 0.5},
                "resolution": [4, 4]
            }
        }),
    );
    let o = run("scan", &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("domain"), "{}", stderr(&o));
}

#[test]
fn free_soliton_effective_run_tracks_the_pde() {
    let out = tempfile::tempdir().unwrap();
    let o = run("effective", &example("free_soliton_effective.json"), out.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report = read_json(&out.path().join("report.json"));
    assert!(report["max_deviation"]["centroid"].as_f64().unwrap() < 1e-3);
    let csv = fs::read_to_string(out.path().join("effective.csv")).unwrap();
    assert!(csv.starts_with("t,eta,Z,V,phi,condition,energy\n"));
    assert!(out.path().join("comparison.csv").exists());
}

#[test]
fn degenerate_start_exits_with_kernel_direction() {
    let out = tempfile::tempdir().unwrap();
    let o = run("effective", &example("ghw_degenerate_effective.json"), out.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("kernel direction"));
    let report = read_json(&out.path().join("report.json"));
    assert_eq!(report["status"], "degenerate");
    assert_eq!(report["kernel_direction"].as_array().unwrap().len(), 4);
}

#[test]
fn effective_needs_a_known_manifold() {
    let dir = tempfile::tempdir().unwrap();
    let base = json!({
        "grid": {"n": 256, "length": 40.0},
        "step": {"dt": 0.01, "t_final": 0.1},
        "output_dir": "out"
    });
    let mut missing = base.clone();
    missing["effective"] = json!({"theta0": {"eta": 1.0}});
    let mut unknown = base.clone();
    unknown["effective"] = json!({"manifold": "toy4", "theta0": {"q1": 0.0}});
    for (cfg, key) in [(missing, "manifold"), (unknown, "effective.manifold")] {
        let path = write_config(dir.path(), &cfg);
        let o = bin().arg("effective").arg(&path).output().unwrap();
        assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
        assert!(stderr(&o).contains(key), "{}", stderr(&o));
    }
}

#[test]
fn outputs_are_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &json!({
            "grid": {"n": 2048, "length": 256.0},
            "scan": {
                "manifold": "ghw-restricted", "gamma": 0.1,
                "axis1": {"name": "eta", "lo": 0.05, "hi": 1.2},
                "axis2": {"name": "a", "lo": 0.11, "hi": 1.2},
                "fixed": {"phi": 0.0, "psi": std::f64::consts::FRAC_PI_4},
                "resolution": [12, 12]
            },
            "power": 3,
            "init": {"kind": "soliton", "eta": 1.0, "v": 0.2},
            "step": {"dt": 0.01, "t_final": 0.5, "stride": 10}
        }),
    );
    let mut scans = Vec::new();
    for threads in ["1", "4"] {
        let out = dir.path().join(format!("scan{threads}"));
        let o = bin()
            .env("RAYON_NUM_THREADS", threads)
            .args([
                "scan".as_ref(),
                cfg.as_os_str(),
                "--output-dir".as_ref(),
                out.as_os_str(),
            ])
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        scans.push((
            fs::read(out.join("scan.csv")).unwrap(),
            fs::read(out.join("scan.json")).unwrap(),
        ));
    }
    assert_eq!(scans[0], scans[1]);

    let mut runs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("evolve{k}"));
        let o = run("evolve", &cfg, &out);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        runs.push(
            [
                "drift.csv",
                "observables.csv",
                "trajectory/index.csv",
                "trajectory/state_000005.csv",
            ]
            .map(|f| fs::read(out.join(f)).unwrap()),
        );
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn charges_of_a_stored_field() {
    let dir = tempfile::tempdir().unwrap();
    let g = nlsgeom_core::Grid::new(512, 40.0).unwrap();
    let u = nlsgeom_core::Field::from_real_fn(&g, |x| 1.0 / x.cosh());
    nlsgeom_core::io::write_field_csv(&dir.path().join("u.csv"), &u).unwrap();
    let cfg = write_config(
        dir.path(),
        &json!({"power": 3, "init": {"kind": "file", "path": "u.csv"}}),
    );
    let o = run("charges", &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("out/charges.csv")).unwrap();
    assert!(text.starts_with("charge,closed_form,generic,generic_factor,conserved\n"));
    let mass: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(mass[0], "mass");
    assert!((mass[1].parse::<f64>().unwrap() - 2.0).abs() < 1e-12);
    assert!(
        text.contains("virial")
            && text
                .lines()
                .any(|l| l.starts_with("virial") && l.ends_with("false"))
    );

    let cfg = write_config(
        dir.path(),
        &json!({"init": {"kind": "file", "path": "missing.csv"}}),
    );
    let o = run("charges", &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = run("scan", &example("toy4_scan.json"), &blocker.join("sub"));
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}
