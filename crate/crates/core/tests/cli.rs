use std::process::{Command, Output};

fn waring(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_waring")).args(args).output().expect("binary runs")
}

fn instance_path(name: &str) -> String {
    format!("{}/instances/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn stderr_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).expect("structured error on stderr")
}

#[test]
fn tables_csv_layout() {
    let out = waring(&["tables", "--iota", "0", "--k-min", "4", "--k-max", "6"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "k,t_opt,E,bound,envelope");
    assert_eq!(body[1], "4,5,8,18,32.7259");
    assert_eq!(body.len(), 4);
    assert!(text.starts_with("# waring-shifts "));
}

#[test]
fn reruns_are_byte_identical() {
    let path = tempfile_with_box("rerun");
    let args = ["count", "--instance", &path, "--tau", "2000", "--no-timing"];
    let a = waring(&args);
    let b = waring(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert!(v.get("wall_ms").is_none());
    assert_eq!(v["meta"]["seed"], 0);
}

fn tempfile_with_box(tag: &str) -> String {
    let text = std::fs::read_to_string(instance_path("five_squares.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["box"] = serde_json::json!([[0, 44], [0, 44], [0, 44], [0, 44], [0, 44]]);
    let path = std::env::temp_dir().join(format!("waring-cli-{tag}-{}.json", std::process::id()));
    std::fs::write(&path, v.to_string()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn thread_count_does_not_change_output() {
    let path = tempfile_with_box("threads");
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_waring"))
            .env("WARING_THREADS", threads)
            .args(["count", "--instance", &path, "--tau", "3000", "--no-timing"])
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn budget_refusal_exits_with_two() {
    let out = waring(&["vinogradov", "--t", "4", "--k", "2", "--X", "1000", "--budget", "1000000"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "budget");
    assert!(out.stdout.is_empty());
}

#[test]
fn bad_input_is_reported_as_json() {
    let out = waring(&["approx", "--alpha", "pie", "--qmax", "10"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "parse");
}

#[test]
fn approx_reports_convergents() {
    let out = waring(&["approx", "--alpha", "355/113 + 1e-9", "--qmax", "1000"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let qs: Vec<u64> = v["convergents"].as_array().unwrap().iter().map(|c| c["q"].as_u64().unwrap()).collect();
    assert_eq!(qs, vec![1, 7, 113]);
}

#[test]
fn kernel_check_rows() {
    let out = waring(&["kernel-check", "--variant", "K", "--eta", "1", "--grid", "7"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "t,closed_form,quadrature,abs_err");
    assert_eq!(rows.len(), 8);
    for r in &rows[1..] {
        let err: f64 = r.split(',').nth(3).unwrap().parse().unwrap();
        assert!(err < 1e-6);
    }
}

#[test]
fn moment_and_kgood_json() {
    let out = waring(&["moment", "--k", "4", "--t", "1", "--P-list", "50,100", "--eta", "0.5", "--no-timing"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // t = 1 is purely diagonal: the box (P, 2P] has P points
    assert_eq!(v["rows"][0]["count"], 50);
    assert_eq!(v["rows"][1]["count"], 100);

    let out = waring(&["kgood", "--k", "4", "--n", "3"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["good"], true);
}

#[test]
fn weyl_profile_csv() {
    let poly = std::env::temp_dir().join(format!("waring-poly-{}.json", std::process::id()));
    std::fs::write(&poly, r#"{"k": 2, "polys": [[{"rat": "0"}, {"rat": "0"}, {"rat": "1"}]]}"#).unwrap();
    let out = waring(&[
        "weyl-profile", "--poly", poly.to_str().unwrap(), "--b", "0", "--c", "1", "--P", "10",
        "--alpha-min", "0", "--alpha-max", "0.5", "--steps", "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "alpha,re,im,abs");
    let first_abs: f64 = rows[1].split(',').nth(3).unwrap().parse().unwrap();
    let last_abs: f64 = rows[3].split(',').nth(3).unwrap().parse().unwrap();
    assert_eq!(first_abs, 10.0);
    assert!(last_abs < 1e-9);
}

#[test]
fn selftest_passes() {
    let out = waring(&["selftest"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
}
