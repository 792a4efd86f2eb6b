use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_omega-green"))
}

fn write_config(dir: &Path, name: &str, v: Value) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    p
}

fn run(config: &Path, out: &Path) -> Output {
    bin().arg("run").arg(config).arg("--out").arg(out).arg("--verbosity").arg("0").env_remove("OUTPUT_DIR").output().unwrap()
}

fn summary(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap()
}

fn without_wall_time(out: &Path) -> String {
    fs::read_to_string(out.join("summary.json"))
        .unwrap()
        .lines()
        .filter(|l| !l.contains("\"wall_time\""))
        .collect::<Vec<_>>()
        .join("\n")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn envelope_on_the_circle() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "envelope.json", json!({"command": "envelope", "set": "circle", "weight": "zero", "grid": {"n_cells": 401}}));
    let out = d.path().join("out");
    let o = run(&cfg, &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("V.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 401 * 401);
    assert!(csv.starts_with("chart,ix,iy,re,im,value\n"));
    let s = summary(&out);
    let mass = s["ma_mass_total"].as_f64().unwrap();
    assert!((mass - std::f64::consts::TAU).abs() <= 0.02 * std::f64::consts::TAU, "{mass}");
    assert_eq!(s["status"], "ok");
    let eff: Value = serde_json::from_str(&fs::read_to_string(out.join("effective_config.json")).unwrap()).unwrap();
    assert_eq!(eff["method"], "relax");
    assert_eq!(eff["tolerances"]["solver"], 1e-9);
    assert_eq!(eff["output_dir"], out.display().to_string());
}

#[test]
fn unknown_key_exits_2_and_names_it() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "bad.json", json!({"command": "envelope", "weigth": "zero"}));
    let o = run(&cfg, &d.path().join("out"));
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("weigth"));
    assert!(!d.path().join("out").exists());
}

#[test]
fn validation_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    for (name, v, key) in [
        ("nomap.json", json!({"command": "pullback"}), "map"),
        ("set.json", json!({"command": "envelope", "set": "hexagon"}), "set"),
        ("grid.json", json!({"command": "envelope", "grid": {"half_width": 1.0}}), "grid"),
    ] {
        let o = run(&write_config(d.path(), name, v), &d.path().join("out"));
        assert_eq!(code(&o), 2, "{name}");
        assert!(String::from_utf8_lossy(&o.stderr).contains(key), "{name}");
    }
    let o = run(&d.path().join("missing.json"), &d.path().join("out"));
    assert_eq!(code(&o), 2);
}

#[test]
fn unconverged_solve_exits_3_with_artifacts() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(
        d.path(),
        "short.json",
        json!({"command": "envelope", "grid": {"n_cells": 61}, "tolerances": {"max_sweeps": 2, "warm_start": false}}),
    );
    let out = d.path().join("out");
    let o = run(&cfg, &out);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("converge"));
    assert_eq!(summary(&out)["status"], "numerical_failure");
}

#[test]
fn compare_sup_difference_decreases() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "compare.json", json!({"command": "compare", "method": "both", "degrees": [10, 20, 40]}));
    let out = d.path().join("out");
    let o = run(&cfg, &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out);
    let diffs: Vec<f64> = s["sections"].as_array().unwrap().iter().map(|e| e["sup_diff"].as_f64().unwrap()).collect();
    assert_eq!(diffs.len(), 3);
    assert!(diffs.windows(2).all(|w| w[1] <= w[0]), "{diffs:?}");
    assert_eq!(s["sup_diff_non_increasing"], true);
    let oracle = s["oracle"]["value"].as_f64().unwrap();
    assert!((oracle - 0.5 * 2f64.ln()).abs() < 0.005, "{oracle}");
}

#[test]
fn reproducible_and_echo_reruns() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "hp.json", json!({"command": "hprinciple", "grid": {"n_cells": 81}, "seed": 5}));
    let (a, b, c) = (d.path().join("a"), d.path().join("b"), d.path().join("c"));
    assert_eq!(code(&run(&cfg, &a)), 0);
    assert_eq!(code(&run(&cfg, &b)), 0);
    assert_eq!(without_wall_time(&a), without_wall_time(&b));
    let o = bin()
        .args(["run", "--config"])
        .arg(a.join("effective_config.json"))
        .arg("--out")
        .arg(&c)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(without_wall_time(&a), without_wall_time(&c));
    let s = summary(&a);
    assert!(s["round_trips"]["homogenize_defect"].as_f64().unwrap() < 1e-10);
    assert_eq!(s["lift"]["within_bound"], true);
}

#[test]
fn output_dir_and_threads_from_environment() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "e.json", json!({"command": "envelope", "grid": {"n_cells": 41}}));
    let out = d.path().join("env_out");
    let o = bin().arg("run").arg(&cfg).env("OUTPUT_DIR", &out).env("THREADS", "1").output().unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("summary.json").exists());
    let o = bin().arg("run").arg(&cfg).env("OUTPUT_DIR", &out).env("THREADS", "many").output().unwrap();
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("THREADS"));
}

#[test]
fn pullback_reports_alpha_provenance() {
    let d = tempfile::tempdir().unwrap();
    let square = json!({"P": [[0, 0], [0, 0], [1, 0]], "Q": [[1, 0]]});
    let cfg = write_config(d.path(), "pb.json", json!({"command": "pullback", "grid": {"n_cells": 81}, "map": square}));
    let out = d.path().join("pb");
    let o = run(&cfg, &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out);
    assert!((s["beta"]["value"].as_f64().unwrap() - 4.0).abs() < 0.04);
    assert_eq!(s["beta"]["provenance"], "estimated");
    assert_eq!(s["alpha"]["validated"], false);
    assert!(s["sandwich"]["lower_defect"].is_null());
    assert!(s["sandwich"]["upper_defect"].as_f64().unwrap() <= 0.03);
    assert!(s["mild"]["pullback_over_beta"]["verdict"].is_boolean());

    let id = json!({"P": [[0, 0], [1, 0]], "Q": [[1, 0]]});
    let cfg = write_config(d.path(), "id.json", json!({"command": "pullback", "grid": {"n_cells": 61}, "map": id}));
    let out = d.path().join("id");
    assert_eq!(code(&run(&cfg, &out)), 0);
    let s = summary(&out);
    assert_eq!(s["alpha"]["validated"], true);
    assert!(s["sandwich"]["lower_defect"].as_f64().unwrap() <= 2e-9);
    assert!(s["sandwich"]["upper_defect"].as_f64().unwrap() <= 2e-9);
}

#[test]
fn report_tables() {
    let d = tempfile::tempdir().unwrap();
    let mut summaries = Vec::new();
    for n in [41, 81] {
        let cfg = write_config(d.path(), &format!("e{n}.json"), json!({"command": "envelope", "grid": {"n_cells": n}}));
        let out = d.path().join(format!("e{n}"));
        assert_eq!(code(&run(&cfg, &out)), 0);
        summaries.push(out.join("summary.json"));
    }
    summaries.reverse();
    let rep = d.path().join("rep");
    let o = bin().arg("report").args(&summaries).arg("--out").arg(&rep).output().unwrap();
    assert_eq!(code(&o), 0);
    let csv = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("h,source,"));
    let h: Vec<f64> = lines[1..].iter().map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(h[0] < h[1]);
    assert_eq!(fs::read_to_string(rep.join("report.csv")).unwrap(), csv);
    assert!(rep.join("report.txt").exists());

    let cfg = write_config(d.path(), "sweep.json", json!({"command": "sweep", "grid": {"n_cells": 41}, "sweep": {"schedule": [1, 3, 9]}}));
    let out = d.path().join("sweep");
    assert_eq!(code(&run(&cfg, &out)), 0);
    let o = bin().arg("report").arg(out.join("summary.json")).output().unwrap();
    let csv = String::from_utf8(o.stdout).unwrap();
    let header: Vec<_> = csv.lines().next().unwrap().split(',').collect();
    let n_col = header.iter().position(|c| *c == "n").unwrap();
    assert!(header.contains(&"sup_diff_to_limit"));
    let ns: Vec<_> = csv.lines().skip(1).map(|l| l.split(',').nth(n_col).unwrap().to_string()).collect();
    assert_eq!(ns, ["1", "3", "9"]);

    assert_eq!(code(&bin().arg("report").output().unwrap()), 2);
    assert_eq!(code(&bin().arg("report").arg(d.path().join("nope.json")).output().unwrap()), 2);
}
