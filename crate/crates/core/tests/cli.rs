use std::process::Command;

use serde_json::Value;

fn melon(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_melon"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn json_record_round_trips() {
    let (code, out, err) = melon(&["count", "--p", "3", "--n", "10"]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["command"], "count");
    assert_eq!(v["inputs"]["p"], 3);
    assert!(v["result"].is_string());
    assert!(v["wall_time_ms"].is_u64());
    let again: Value = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(v, again);
}

#[test]
fn pmf_csv_sums_to_total() {
    let (code, out, _) = melon(&["pmf", "--p", "2", "--n", "6", "--format", "csv"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("h,count,probability"));
    let mut total = 0u64;
    let mut prob = 0.0;
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        total += f[1].parse::<u64>().unwrap();
        prob += f[2].parse::<f64>().unwrap();
    }
    let (_, count, _) = melon(&["count", "--p", "2", "--n", "6"]);
    let v: Value = serde_json::from_str(&count).unwrap();
    assert_eq!(total.to_string(), v["result"].as_str().unwrap());
    assert!((prob - 1.0).abs() < 1e-14);
}

#[test]
fn moment_both_modes() {
    let (code, out, _) = melon(&["moment", "--p", "1", "--n", "400", "--s", "1"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    let e = v["result"]["exact_value"].as_f64().unwrap();
    let a = v["result"]["asymptotic"].as_f64().unwrap();
    assert!((e - a).abs() < 0.05);
    assert!(v["result"]["exact"].as_str().unwrap().contains('/'));
}

#[test]
fn cdf_forms_from_the_command_line() {
    let get = |args: &[&str]| -> f64 {
        let (code, out, err) = melon(args);
        assert_eq!(code, 0, "{err}");
        serde_json::from_str::<Value>(&out).unwrap()["result"].as_f64().unwrap()
    };
    let d = get(&["cdf", "--p", "1", "--t", "1.2", "--form", "det"]);
    let s = get(&["cdf", "--p", "1", "--t", "1.2", "--form", "schehr"]);
    let r = get(&["cdf", "--p", "1", "--t", "1.2", "--form", "p1"]);
    let e = get(&["cdf", "--p", "1", "--t", "1.2", "--form", "exact", "--n", "400"]);
    assert!((d - s).abs() < 1e-12 && (d - r).abs() < 1e-12);
    assert!((d - e).abs() < 0.05);
    assert_eq!(melon(&["cdf", "--p", "2", "--t", "1.2", "--form", "p1"]).0, 1);
}

#[test]
fn sampling_is_reproducible() {
    let args = ["sample", "--p", "2", "--n", "5", "--count", "4", "--seed", "11"];
    let (code, a, _) = melon(&args);
    assert_eq!(code, 0);
    let strip = |s: &str| {
        let mut v: Value = serde_json::from_str(s).unwrap();
        v.as_object_mut().unwrap().remove("wall_time_ms");
        v
    };
    assert_eq!(strip(&a), strip(&melon(&args).1));
    let rows = strip(&a)["result"].as_array().unwrap().len();
    assert_eq!(rows, 4);
    let (code, st, _) = melon(&["sample", "--p", "1", "--n", "10", "--count", "500", "--seed", "1", "--stats"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&st).unwrap();
    assert_eq!(v["result"]["count"], 500);
}

#[test]
fn thread_cap_does_not_change_samples() {
    let args = ["sample", "--p", "1", "--n", "20", "--count", "64", "--seed", "3", "--stats"];
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_melon"))
            .args(args)
            .env("MELON_THREADS", threads)
            .output()
            .unwrap();
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        v["result"].clone()
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn exit_codes_and_streams() {
    let (code, out, err) = melon(&["count", "--p", "0", "--n", "2"]);
    assert_eq!(code, 1);
    assert!(out.is_empty() && !err.is_empty());
    assert_eq!(melon(&["kappa", "--p", "2", "--s", "1", "--tol", "1e-300"]).0, 2);
    assert_eq!(melon(&["moment", "--p", "1", "--n", "9000", "--s", "1", "--mode", "exact"]).0, 3);
    assert_eq!(melon(&["verify", "--suite", "bogus"]).0, 1);
}

#[test]
fn verify_reciprocity_suite_passes() {
    let (code, out, _) = melon(&["verify", "--suite", "reciprocity"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["result"][0]["passed"], true);
}
