use std::fs;
use std::process::{Command, Output};

fn cue_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cue-lab")).args(args).env_remove("CUE_LAB_WORKERS").output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn exact_ks() {
    let v = json(&cue_lab(&["exact", "ks", "--N", "2", "--k", "2"]));
    assert_eq!(v[0]["value"]["re"], "20");
    assert_eq!(v[0]["value"]["im"], "0");
    assert_eq!(v[0]["abs_error"], "0");
    assert_eq!(v[0]["paper_anchor"], "EqPhi:KS");
}

#[test]
fn ehrhart_birkhoff_3_2() {
    let v = json(&cue_lab(&["ehrhart", "birkhoff", "--k", "3", "--t", "2"]));
    assert_eq!(v[0]["value"]["re"], "21");
}

#[test]
fn ehrhart_transport() {
    // λ = μ = (2,1), ℓ = 1: 2×2 matrices with margins (2,1): 2 of them
    let v = json(&cue_lab(&["ehrhart", "transport", "--lambda", "2,1", "--mu", "2,1", "--t", "1"]));
    assert_eq!(v[0]["value"]["re"], "2");
}

#[test]
fn limit_ks_hankel() {
    let v = json(&cue_lab(&["limit", "ks", "--k", "2", "--method", "hankel"]));
    assert_eq!(v[0]["exact"]["num"], "1");
    assert_eq!(v[0]["exact"]["den"], "12");
    assert_eq!(v[0]["method"], "hankel");
}

#[test]
fn exact_truncated_geometric() {
    let v = json(&cue_lab(&["exact", "truncated", "--k", "1", "--t", "3", "--lambda", "0.5"]));
    assert_eq!(v[0]["value"]["re"], "85/64");
    assert_eq!(v[0]["paper_anchor"], "Eq:HeapLindqvistTruncated");
}

#[test]
fn csv_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sc.csv");
    let out = cue_lab(&["limit", "sc", "--rho", "1/2", "--k", "2", "--format", "csv", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "functional,parameters,value_re,value_im,exact_num,exact_den,abs_error,method,seed,stderr,runtime_ms,paper_anchor"
    );
    let row = lines.next().unwrap();
    assert!(row.starts_with("SC,k=2;rho=1/2,1/2,0,1,2,0,spline,"), "{row}");
    assert!(row.ends_with("EqPhi:MidCoeff"));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# birkhoff counts\nk = 3\nt = 2\n").unwrap();
    let v = json(&cue_lab(&["ehrhart", "birkhoff", "--config", cfg.to_str().unwrap()]));
    assert_eq!(v[0]["value"]["re"], "21");
    let v = json(&cue_lab(&["ehrhart", "birkhoff", "--config", cfg.to_str().unwrap(), "--t", "1"]));
    assert_eq!(v[0]["value"]["re"], "6");
}

#[test]
fn sampling_is_seeded_and_reproducible() {
    let args = ["sample", "trace", "--N", "4", "--samples", "5000", "--seed", "17", "--workers", "2"];
    let a = json(&cue_lab(&args));
    let b = json(&cue_lab(&args));
    assert_eq!(a[0]["value"], b[0]["value"]);
    assert_eq!(a[0]["seed"], 17);
    assert!(a[0]["stderr"].is_string());
    let missing = cue_lab(&["sample", "trace", "--N", "4"]);
    assert_eq!(missing.status.code(), Some(1));
    let qmc = cue_lab(&["limit", "ks", "--k", "2", "--method", "qmc"]);
    assert_eq!(qmc.status.code(), Some(1));
}

#[test]
fn exit_codes() {
    assert_eq!(cue_lab(&["nope"]).status.code(), Some(1));
    assert_eq!(cue_lab(&["exact", "ks", "--k", "2"]).status.code(), Some(1));
    assert_eq!(cue_lab(&["exact", "ks", "--N", "2", "--k", "2", "--format", "xml"]).status.code(), Some(1));
    let bad = cue_lab(&["exact", "sc", "--N", "2", "--m", "3", "--k", "1"]);
    assert_eq!(bad.status.code(), Some(2));
    assert_eq!(String::from_utf8_lossy(&bad.stderr).lines().count(), 1);
    assert_eq!(cue_lab(&["--help"]).status.code(), Some(0));
}

#[test]
fn env_worker_count() {
    let out = Command::new(env!("CARGO_BIN_EXE_cue-lab"))
        .args(["exact", "ks", "--N", "3", "--k", "2"])
        .env("CUE_LAB_WORKERS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = Command::new(env!("CARGO_BIN_EXE_cue-lab"))
        .args(["exact", "ks", "--N", "3", "--k", "2"])
        .env("CUE_LAB_WORKERS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn selftest_single_criterion() {
    let out = cue_lab(&["selftest", "--criterion", "1"]);
    let v = json(&out);
    assert_eq!(v[0]["extra"]["pass"], true);
    assert!(String::from_utf8_lossy(&out.stderr).contains("[PASS]  1."));
}
