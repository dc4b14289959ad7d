use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn gyrad(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gyrad"))
        .args(args)
        .current_dir(dir)
        .env_remove("GYRAD_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = gyrad(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Exit code and parsed error JSON of a failing run.
fn fails(dir: &Path, args: &[&str]) -> (i32, serde_json::Value) {
    let out = gyrad(dir, args);
    assert!(!out.status.success(), "{args:?} should fail");
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).expect("stderr is one JSON object");
    assert_eq!(err["code"].as_i64(), out.status.code().map(i64::from));
    (out.status.code().unwrap(), err)
}

/// Header and rows of a CSV written by the tool, after checking its comment line.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let comment = lines.next().unwrap();
    assert!(comment.starts_with(&format!("# gyrad {} config_hash=", env!("CARGO_PKG_VERSION"))), "{comment}");
    assert_eq!(comment.rsplit('=').next().unwrap().len(), 64);
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

fn small_kernel(dir: &Path) {
    ok(
        dir,
        &[
            "kernel",
            "build",
            "--d",
            "2",
            "--L",
            "1",
            "--alpha",
            "1.5",
            "--radius",
            "1",
            "--truncated",
            "--out",
            "k2.json",
        ],
    );
}

#[test]
fn kernel_file_has_the_documented_schema() {
    let dir = TempDir::new().unwrap();
    ok(
        dir.path(),
        &["kernel", "build", "--d", "1", "--L", "1", "--alpha", "1.5", "--radius", "2000", "--out", "k.json"],
    );
    let json: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("k.json")).unwrap()).unwrap();
    for key in ["d", "L", "alpha", "radius", "c_h", "tail_bound", "weights"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    let weights = json["weights"].as_array().unwrap();
    assert_eq!(weights.len(), 4001);
    assert_eq!(weights[0][0].as_f64(), Some(-2000.0));
    assert_eq!(weights[4000][0].as_f64(), Some(2000.0));

    ok(dir.path(), &["kernel", "inspect", "k.json", "--fourier-grid", "1e-3:1e-1:9", "--out", "f.csv"]);
    let (header, rows) = read_csv(&dir.path().join("f.csv"));
    assert_eq!(header, ["k", "Dhat", "one_minus_Dhat"]);
    assert_eq!(rows.len(), 9);
    let mantissa = rows[3][2].split('e').next().unwrap();
    assert!(mantissa.chars().filter(char::is_ascii_digit).count() >= 12);
}

#[test]
fn kernel_with_too_small_a_box_fails_the_tail_check() {
    let dir = TempDir::new().unwrap();
    let (code, err) = fails(
        dir.path(),
        &["kernel", "build", "--d", "1", "--L", "1", "--alpha", "1.5", "--radius", "5", "--out", "k.json"],
    );
    assert_eq!(code, 4);
    assert_eq!(err["error"], "numeric_failure");
    assert!(!dir.path().join("k.json").exists());
}

#[test]
fn moment_order_at_alpha_is_rejected_up_front() {
    let dir = TempDir::new().unwrap();
    small_kernel(dir.path());
    let (code, err) =
        fails(dir.path(), &["rw", "evolve", "--kernel", "k2.json", "--T", "3", "--r-list", "1,1.5", "--out", "m.csv"]);
    assert_eq!(code, 2);
    assert!(err["message"].as_str().unwrap().contains("diverges"));
    assert!(!dir.path().join("m.csv").exists());
}

#[test]
fn identical_runs_give_byte_identical_csv() {
    let dir = TempDir::new().unwrap();
    small_kernel(dir.path());
    let d = dir.path();
    let saw = ["saw", "sample", "--kernel", "k2.json", "--T", "6", "--N", "5000", "--seed", "9", "--r-list", "0.5,1"];
    ok(d, &[&saw[..], &["--out", "a.csv"]].concat());
    ok(d, &[&saw[..], &["--out", "b.csv"]].concat());
    assert_eq!(fs::read(d.join("a.csv")).unwrap(), fs::read(d.join("b.csv")).unwrap());

    let op =
        ["op", "sample", "--kernel", "k2.json", "--p", "1", "--T", "5", "--N", "5000", "--seed", "9", "--r-list", "1"];
    ok(d, &[&op[..], &["--threads", "1", "--out", "c.csv"]].concat());
    let threaded = Command::new(env!("CARGO_BIN_EXE_gyrad"))
        .args(op)
        .args(["--out", "e.csv"])
        .current_dir(d)
        .env("GYRAD_THREADS", "3")
        .output()
        .unwrap();
    assert!(threaded.status.success());
    assert_eq!(fs::read(d.join("c.csv")).unwrap(), fs::read(d.join("e.csv")).unwrap());

    let mut reseeded = saw.to_vec();
    reseeded[9] = "10";
    ok(d, &[&reseeded[..], &["--out", "f.csv"]].concat());
    assert_ne!(fs::read(d.join("a.csv")).unwrap(), fs::read(d.join("f.csv")).unwrap());
}

#[test]
fn flags_override_the_config_file() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    small_kernel(d);
    fs::write(
        d.join("run.cfg"),
        "# saw run\nmodel = saw\nkernel_path = k2.json\nT = 6\nN = 2000\nseed = 4\nr_list = 1\n",
    )
    .unwrap();
    ok(d, &["saw", "sample", "--config", "run.cfg", "--T", "3", "--out", "m.csv"]);
    let (header, rows) = read_csv(&d.join("m.csv"));
    assert_eq!(header, ["t", "mass", "mass_stderr", "r", "moment", "moment_stderr", "ratio", "ratio_stderr"]);
    assert_eq!(rows.last().unwrap()[0], "3");

    // the same run spelled out in flags
    ok(
        d,
        &[
            "saw", "sample", "--kernel", "k2.json", "--T", "3", "--N", "2000", "--seed", "4", "--r-list", "1", "--out",
            "n.csv",
        ],
    );
    assert_eq!(fs::read(d.join("m.csv")).unwrap(), fs::read(d.join("n.csv")).unwrap());

    let (code, _) = fails(d, &["op", "sample", "--config", "run.cfg", "--p", "0.5"]);
    assert_eq!(code, 2);
    fs::write(d.join("typo.cfg"), "kernel = k2.json\nhorizon = 3\n").unwrap();
    let (code, err) = fails(d, &["saw", "sample", "--config", "typo.cfg"]);
    assert_eq!(code, 2);
    assert!(err["message"].as_str().unwrap().contains("horizon"));
}

#[test]
fn resource_and_numeric_failures_have_their_own_exit_codes() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    small_kernel(d);
    let (code, err) = fails(d, &["saw", "enumerate", "--kernel", "k2.json", "--T", "30", "--out", "x.csv"]);
    assert_eq!((code, err["error"].as_str()), (3, Some("resource_limit")));

    ok(d, &["kernel", "build", "--d", "1", "--L", "1", "--alpha", "1.5", "--radius", "2000", "--out", "k1.json"]);
    let policy = ["rw", "evolve", "--kernel", "k1.json", "--T", "5", "--r-list", "1", "--box-policy", "fixed:2500"];
    // each step leaks about 3e-11 of mass past the box
    let policy = [&policy[..], &["--leak-tolerance", "1e-12"]].concat();
    let (code, _) = fails(d, &[&policy[..], &["--out", "x.csv"]].concat());
    assert_eq!(code, 4);
    assert!(!d.join("x.csv").exists());
}

#[test]
fn failed_runs_leave_existing_output_untouched() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    small_kernel(d);
    fs::write(d.join("m.csv"), "previous\n").unwrap();
    fails(d, &["saw", "enumerate", "--kernel", "k2.json", "--T", "30", "--out", "m.csv"]);
    assert_eq!(fs::read_to_string(d.join("m.csv")).unwrap(), "previous\n");
    let mut names: Vec<String> =
        fs::read_dir(d).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["k2.json", "m.csv"]);
}

#[test]
fn compare_annotates_a_random_walk_run() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["kernel", "build", "--d", "1", "--L", "1", "--alpha", "3", "--radius", "100", "--out", "k.json"]);
    ok(d, &["rw", "evolve", "--kernel", "k.json", "--T", "256", "--r-list", "1,2", "--out", "m.csv"]);
    let summary =
        ok(d, &["compare", "--measured", "m.csv", "--kernel", "k.json", "--threshold", "0.02", "--out", "c.csv"]);
    assert!(summary.contains("verdict=pass"), "{summary}");
    assert!(summary.contains("r=1: final_t=256") && summary.contains("trend=yes"), "{summary}");

    let (header, rows) = read_csv(&d.join("c.csv"));
    let (pred, err) = (header.len() - 2, header.len() - 1);
    assert_eq!(header[pred..], ["predicted_ratio", "rel_err"]);
    assert_eq!(header.iter().filter(|h| *h == "rel_err").count(), 1);
    for row in rows.iter().filter(|r| r[0] != "0") {
        assert!(!row[err].is_empty());
    }
    let last = rows.last().unwrap();
    assert!(last[err].parse::<f64>().unwrap() < 0.02);
    // r = 2: the prediction is σ² t exactly
    let r2_last = rows.iter().rev().find(|r| r[2].parse::<f64>().unwrap() == 2.0).unwrap();
    assert!(r2_last[err].parse::<f64>().unwrap() < 1e-12);
}

#[test]
fn compare_gives_zero_error_when_the_ratio_is_the_prediction() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let args = ["--alpha", "1.5", "--v-alpha", "0.7", "--C-II", "1.3"];
    ok(d, &[&["asym", "predict", "--r", "0.8", "--t-list", "8,16,32,64", "--out", "p.csv"][..], &args[..]].concat());
    let (_, rows) = read_csv(&d.join("p.csv"));
    let mut measured = String::from("t,r,ratio\n");
    for row in &rows {
        measured.push_str(&format!("{},0.8,{}\n", row[0], row[1]));
    }
    fs::write(d.join("synthetic.csv"), measured).unwrap();
    ok(d, &[&["compare", "--measured", "synthetic.csv", "--out", "c.csv"][..], &args[..]].concat());
    let (_, rows) = read_csv(&d.join("c.csv"));
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r[4].parse::<f64>().unwrap() == 0.0));

    fs::write(d.join("wrong.csv"), "t,coefficient\n0,1\n").unwrap();
    let (code, _) = fails(d, &[&["compare", "--measured", "wrong.csv"][..], &args[..]].concat());
    assert_eq!(code, 2);
}

#[test]
fn deconvolution_of_enumerated_walks() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(
        d,
        &["kernel", "build", "--d", "2", "--L", "1", "--alpha", "1", "--radius", "1", "--truncated", "--out", "k.json"],
    );
    ok(d, &["saw", "enumerate", "--kernel", "k.json", "--T", "4", "--out", "saw.csv"]);
    let summary = ok(d, &["series", "deconvolve", "--phi", "saw.csv", "--model", "saw", "--out", "lace.csv"]);
    assert!(summary.contains("residual="));
    let (header, rows) = read_csv(&d.join("lace.csv"));
    assert_eq!(header, ["t", "x1", "x2", "J_value"]);
    // J_2(o) from an independent enumeration
    let j2 = rows.iter().find(|r| r[..3] == ["2", "0", "0"]).unwrap()[3].parse::<f64>().unwrap();
    assert!((j2 + 0.10937691813461381).abs() < 1e-15);
    let (code, _) = fails(d, &["series", "deconvolve", "--phi", "saw.csv", "--model", "op"]);
    assert_eq!(code, 2);
}

#[test]
fn series_coefficients_feed_the_blowup_fit() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["series", "fo90", "--beta", "1", "--gamma", "0", "--T", "20000", "--out", "c.csv"]);
    let (header, rows) = read_csv(&d.join("c.csv"));
    assert_eq!(header, ["t", "coefficient"]);
    // (1 − z)^{−2}: c_t = t + 1
    for r in rows.iter().step_by(997) {
        let (t, c): (f64, f64) = (r[0].parse().unwrap(), r[1].parse().unwrap());
        assert!((c / (t + 1.0) - 1.0).abs() < 1e-12, "t = {t}");
    }
    let summary = ok(d, &["series", "fit", "--coeffs", "c.csv", "--expected", "2", "--out", "fit.csv"]);
    let exponent: f64 = summary.split("exponent=").nth(1).unwrap().split(' ').next().unwrap().parse().unwrap();
    assert!((exponent - 2.0).abs() < 0.05, "{summary}");
}

#[test]
fn k_r_table_agrees() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["asym", "kr", "--r", "0.3,1,1.7", "--out", "kr.csv"]);
    let (_, rows) = read_csv(&dir.path().join("kr.csv"));
    assert!(rows.iter().all(|r| r[3].parse::<f64>().unwrap() < 1e-9));
    let (code, _) = fails(dir.path(), &["asym", "kr", "--r", "2"]);
    assert_eq!(code, 2);
}
