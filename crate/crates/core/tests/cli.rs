use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const CAVITY: &str = r#"{"n":1,"m":1,"C":{"minus":[[1.3]]},"Omega":{"minus":[[0.0]]}}"#;
const TWO_MODE: &str = r#"{"n":2,"m":1,"C":{"minus":[[5,4]],"plus":[[1,[0,-1]]]},
 "A":{"minus":[[[-12,-2],[0,0.5]],[[-20,-0.5],[-7.5,-6]]],"plus":[[1,[-2,-2.5]],[[-6,-7.5],[0,-2]]]}}"#;
const SQUEEZED: &str = r#"{"N": [[0.1687174731524223]], "M": [[0.4440529910938116]]}"#;

fn qls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qls")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn error_of(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().rev().find(|l| l.starts_with('{')).expect("error object on stderr");
    serde_json::from_str(line).unwrap()
}

#[test]
fn validate_reports_structure() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write(dir.path(), "sys.json", TWO_MODE);
    let out = qls(&["validate", s(&sys), "-q"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["pr"], true);
    assert_eq!(v["hurwitz"], true);
    assert_eq!(v["passive"], false);
    assert_eq!(v["n"], 2);
}

#[test]
fn transfer_function_is_complex_pairs_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write(dir.path(), "sys.json", CAVITY);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = qls(&["tf", s(&sys), "--grid", "0,0.5,2", "-o", s(p), "-q"]);
        assert_eq!(out.status.code(), Some(0));
    }
    let (ta, tb) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let v: Value = serde_json::from_slice(&ta).unwrap();
    let first = &v["values"][0];
    // s = 0: (0 - k/2) / (0 + k/2) = -1 on the minus entry
    let z = &first[0][0];
    assert!(z.is_array() && z.as_array().unwrap().len() == 2);
    assert!((z[0].as_f64().unwrap() + 1.0).abs() < 1e-12 && z[1].as_f64().unwrap().abs() < 1e-12);
    assert_eq!(v["s"].as_array().unwrap().len(), 3);
}

#[test]
fn qfi_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let fam = write(
        dir.path(),
        "fam.json",
        &format!(r#"{{"base": {}, "terms": [{{"target": "Omega", "row": 0, "col": 0}}]}}"#, CAVITY),
    );
    let cov = write(dir.path(), "cov.json", SQUEEZED);
    let n: f64 = 0.1687174731524223;
    let want = 16.0 * n * (n + 1.0) / (1.3 * 1.3);
    for (method, tol) in [("time", 1e-8), ("freq", 1e-3)] {
        let out = qls(&["qfi", s(&fam), "--method", method, "--input", s(&cov), "-q"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        let got = v["value"].as_f64().unwrap();
        assert!((got - want).abs() < tol * want, "{} {} {}", method, got, want);
    }
}

#[test]
fn absorber_output_is_pure() {
    let dir = tempfile::tempdir().unwrap();
    let sys = write(dir.path(), "sys.json", TWO_MODE);
    let dual = dir.path().join("dual.json");
    let out = qls(&["absorber", s(&sys), "-o", s(&dual), "-q"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&fs::read(&dual).unwrap()).unwrap();
    assert!(v["purity_residual"].as_f64().unwrap() < 1e-6);
    assert!(v["ps_residual"].as_f64().unwrap() < 1e-6);
    // the dual is itself a loadable system
    let d = write(dir.path(), "d.json", &v["dual"].to_string());
    assert_eq!(qls(&["validate", s(&d), "-q"]).status.code(), Some(0));
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cov = write(dir.path(), "cov.json", SQUEEZED);
    let out = qls(&["sweep", "--couplings", "1,0.7,0.5", "--input", s(&cov), "-q"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("coupling,tau,f,slope_fit"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    let slope: f64 = rows[0].split(',').nth(3).unwrap().parse().unwrap();
    assert!((slope - 1.0).abs() < 1e-8);
}

#[test]
fn missing_file_is_an_input_error_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("out.json");
    let out = qls(&["tf", s(&dir.path().join("nope.json")), "-o", s(&target)]);
    assert_eq!(out.status.code(), Some(2));
    let e = error_of(&out);
    assert_eq!(e["error"]["exit_code"], 2);
    assert_eq!(e["error"]["kind"], "parse");
    assert!(!target.exists());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn unphysical_system_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    // drift that is not -C^flat C / 2 - i J Omega for any Hermitian Omega
    let sys = write(dir.path(), "bad.json", r#"{"n":1,"m":1,"C":{"minus":[[1.0]]},"A":{"minus":[[-3.0]]}}"#);
    let out = qls(&["validate", s(&sys)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_of(&out)["error"]["kind"], "not_physical");
}

#[test]
fn numerical_failure_keeps_previous_output() {
    let dir = tempfile::tempdir().unwrap();
    // |Xi| > 1 on the axis: no passive extension with one noise channel
    let ss = write(dir.path(), "ss.json", r#"{"A":[[-1.0]],"B":[[-1.0]],"C":[[-4.0]],"D":[[1.0]]}"#);
    let target = write(dir.path(), "out.json", "previous");
    let out = qls(&["realize-noisy", s(&ss), "--noise", "1", "-o", s(&target)]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(error_of(&out)["error"]["exit_code"], 3);
    assert_eq!(fs::read_to_string(&target).unwrap(), "previous");
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 2);
}

#[test]
fn bad_arguments_exit_with_input_code() {
    assert_eq!(qls(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(qls(&["sweep"]).status.code(), Some(2));
    assert_eq!(qls(&["--help"]).status.code(), Some(0));
}

#[test]
fn cascade_identification_rebuilds_system() {
    let dir = tempfile::tempdir().unwrap();
    let tf = write(
        dir.path(),
        "tf.json",
        r#"{"minus": {"numerator": [1, 0, [-10672.25, 482], 0, [-338313, 12284]],
                      "denominator": [1, 207, 10752.25, 6940, 338505]},
            "plus": {"numerator": [[-192, 32], 0, [-4276, 1632]],
                     "denominator": [1, 207, 10752.25, 6940, 338505]}}"#,
    );
    let out = qls(&["cascade-id", s(&tf), "--first=-103.48,-2.12", "-q"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let stages = v["stages"].as_array().unwrap();
    assert_eq!(stages.len(), 2);
    assert!((stages[0]["c"].as_f64().unwrap() - 14.386).abs() < 1e-3);
}
