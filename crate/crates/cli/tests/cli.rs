use std::process::{Command, Output};

fn dl_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dl-lab")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn lists_suites() {
    let o = dl_lab(&["suites"]);
    assert_eq!(code(&o), 0);
    let names = String::from_utf8(o.stdout).unwrap();
    assert_eq!(names.lines().count(), 10);
    assert!(names.lines().any(|l| l == "eta-level2"));
}

#[test]
fn passing_suite_prints_json_report() {
    let o = dl_lab(&["verify", "--suite", "series", "--quiet"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["suite"], "series");
    assert_eq!(v["passed"], true);
    assert!(v["params"].get("jobs").is_none());
}

#[test]
fn failing_claim_exits_one() {
    let o = dl_lab(&["verify", "--suite", "eta-level2", "--quiet"]);
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["passed"], false);
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("first failure: eta.irreducible_iff_full_conductor"), "{err}");
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["verify", "--suite", "bogus"][..],
        &["verify", "--suite", "rho-psi", "--q", "6"],
        &["verify", "--suite", "rho-psi", "--h", "3"],
        &["verify", "--suite", "rho-psi", "--jobs", "0"],
        &["verify"],
        &["dump", "--kind", "char-table", "--q", "2", "--n", "2", "--h", "3"],
    ] {
        assert_eq!(code(&dl_lab(args)), 2, "{args:?}");
    }
}

#[test]
fn size_limit_is_a_runtime_error() {
    let o = dl_lab(&["verify", "--suite", "rho-psi", "--max-size", "10"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8(o.stderr).unwrap().contains("size limit"));
}

#[test]
fn reports_are_byte_identical_across_jobs() {
    let dir = std::env::temp_dir().join(format!("dl-lab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut bytes = Vec::new();
    for (i, jobs) in ["1", "1", "3"].iter().enumerate() {
        let out = dir.join(format!("r{i}.json"));
        let o = dl_lab(&["verify", "--suite", "traces", "--jobs", jobs, "--quiet", "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
        bytes.push(std::fs::read(&out).unwrap());
    }
    std::fs::remove_dir_all(&dir).ok();
    assert_eq!(bytes[0], bytes[1]);
    assert_eq!(bytes[0], bytes[2]);
}

#[test]
fn dump_points_csv() {
    let o = dl_lab(&["dump", "--kind", "points", "--q", "2", "--n", "2", "--h", "3"]);
    assert_eq!(code(&o), 0);
    let csv = String::from_utf8(o.stdout).unwrap();
    assert_eq!(csv.lines().next(), Some("a_0,a_1,a_2,a_3,a_4"));
    assert_eq!(csv.lines().count(), 257);
}
