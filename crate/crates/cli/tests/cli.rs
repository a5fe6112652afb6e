use std::path::PathBuf;
use std::process::{Command, Output};

fn qi_lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qi-lab"))
        .args(args)
        .env_remove("QI_LAB_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid json")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qi-lab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn snr_reports_every_receiver() {
    let v = stdout_json(&qi_lab(&["snr", "--kappa", "0.01", "--ns", "0.01", "--nb", "30", "--k", "1e7"]));
    let receivers = v["receivers"].as_array().unwrap();
    assert_eq!(receivers.len(), 4);
    let dhd = &receivers[0];
    assert_eq!(dhd["receiver"], "dHD");
    let snr = dhd["snr"].as_f64().unwrap();
    assert!((96.0..=144.0).contains(&snr), "{snr}");
    let formula = dhd["snr_formula"].as_f64().unwrap();
    assert!((snr - formula).abs() / formula < 1e-9);
    for key in ["r0", "r1", "dr0", "dr1", "threshold", "p_false_alarm", "p_miss", "log_p_error", "snr_db"] {
        assert!(dhd[key].is_number(), "{key}");
    }
}

#[test]
fn zero_reflectivity_gives_coin_flip() {
    let v = stdout_json(&qi_lab(&["snr", "--kappa", "0"]));
    for r in v["receivers"].as_array().unwrap() {
        assert_eq!(r["snr"].as_f64(), Some(0.0), "{}", r["receiver"]);
        assert_eq!(r["p_error"].as_f64(), Some(0.5), "{}", r["receiver"]);
    }
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["snr", "--kappa", "1.5"],
        vec!["snr", "--receivers", "ffsfg"],
        vec!["snr", "--format", "svg"],
        vec!["scan", "--set", "kappa_points"],
        vec!["scan", "--spec", "/nonexistent/spec.txt"],
        vec!["boundary", "--a", "dhd"],
        vec!["validate", "--suite", "bogus"],
        vec!["frobnicate"],
    ] {
        assert_eq!(qi_lab(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn scan_spec_errors_list_every_field() {
    let spec = scratch("bad.txt");
    std::fs::write(&spec, "kappa_points = 1\nns_max = -1\nopa_gain = 0.5\n").unwrap();
    let out = qi_lab(&["scan", "--spec", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for field in ["kappa_points", "ns_max", "opa_gain"] {
        assert!(err.contains(field), "{field} missing from: {err}");
    }
}

#[test]
fn scan_flags_override_the_file() {
    let spec = scratch("small.txt");
    std::fs::write(&spec, "kappa_points = 3\nns_points = 2\nn_b = 5\nreceivers = dhd\n").unwrap();
    let out = qi_lab(&["scan", "--spec", spec.to_str().unwrap(), "--nb", "30", "--receivers", "dhd,pc", "--format", "json"]);
    let v = stdout_json(&out);
    assert_eq!(v["spec"]["n_b"].as_f64(), Some(30.0));
    assert_eq!(v["cells"].as_array().unwrap().len(), 6);
    assert_eq!(v["spec"]["receivers"].as_array().unwrap().len(), 2);
}

#[test]
fn scan_writes_svg_to_file() {
    let svg = scratch("map.svg");
    let out = qi_lab(&[
        "scan", "--preset", "fig3b", "--set", "kappa_points=6", "--set", "ns_points=6", "--receivers", "dhd,opa,pc",
        "--format", "svg", "--out", svg.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.contains("<polygon"));
    assert!(text.trim_end().ends_with("</svg>"));
}

#[test]
fn boundary_reports_crossings_and_absence() {
    let v = stdout_json(&qi_lab(&["boundary", "--a", "dhd", "--b", "pc", "--nb", "100"]));
    let c = v["report"]["crossings"].as_array().unwrap();
    assert_eq!(c.len(), 1);
    let k = c[0]["value"].as_f64().unwrap();
    assert!((0.0002..=0.0004).contains(&k), "{k}");

    let out = qi_lab(&["boundary", "--a", "opa", "--b", "opa"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["status"], "no boundary in range");
}

#[test]
fn validate_single_suite() {
    let v = stdout_json(&qi_lab(&["validate", "--suite", "erfc"]));
    assert_eq!(v["passed"], true);
    let suites = v["suites"].as_array().unwrap();
    assert_eq!(suites.len(), 1);
    assert_eq!(suites[0]["suite"], "erfc");
}

#[test]
fn injected_formula_error_fails_validation() {
    let out = qi_lab(&["validate", "--suite", "formula", "--inject-formula-error", "1e-3"]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], false);
    assert!(!v["suites"][0]["failures"].as_array().unwrap().is_empty());
}

#[test]
fn thread_cap_is_validated() {
    let out = Command::new(env!("CARGO_BIN_EXE_qi-lab"))
        .args(["validate", "--suite", "erfc"])
        .env("QI_LAB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
