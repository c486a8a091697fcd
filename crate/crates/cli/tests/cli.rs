use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_conflab"))
}

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

fn write_temp(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("conflab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn verify(path: &Path, extra: &[&str]) -> Output {
    bin().arg("verify").arg(path).args(extra).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const KW_S2: &str = r#"
[[scenario]]
name = "kw_s2"
identity = "kazdan_warner"
manifold = "perturbed_sphere"
manifold_params = { n = 2, linear = [0.1, 0.05] }
field = "boost"
quantity = "scalar_curvature"
levels = [2, 3, 4]
"#;

#[test]
fn misspelled_key_is_a_configuration_error() {
    let path = write_temp("typo.toml", &KW_S2.replace("manifold_params", "manifold_parms"));
    let out = verify(&path, &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("manifold_parms"), "{err}");
}

#[test]
fn unknown_manifold_is_a_configuration_error() {
    let path = write_temp("unknown.toml", &KW_S2.replace("\"perturbed_sphere\"", "\"klein_bottle\""));
    assert_eq!(verify(&path, &[]).status.code(), Some(2));
}

#[test]
fn empty_scenario_list_passes() {
    let path = write_temp("empty.toml", "");
    let out = verify(&path, &["--format", "machine"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["scenarios"].as_array().unwrap().len(), 0);
    assert_eq!(v["suite_verdict"], "pass");
}

#[test]
fn scalar_curvature_obstruction_on_s2() {
    let path = write_temp("kw.toml", KW_S2);
    let out = verify(&path, &["--format", "machine"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rep = &v["scenarios"][0]["report"];
    assert_eq!(rep["verdict"], "pass");
    assert!(rep["relative"].as_f64().unwrap() < 1e-6);
    assert_eq!(rep["levels"], serde_json::json!([2, 3, 4]));
    assert_eq!(rep["history"].as_array().unwrap().len(), 3);
}

#[test]
fn ricci_tensor_fails_the_conservation_gate() {
    let out = verify(&scenarios_dir().join("gated.toml"), &[]);
    assert_eq!(out.status.code(), Some(2));
    let text = stdout(&out);
    assert!(text.contains("precondition_failed") && text.contains("conservation"), "{text}");
}

#[test]
fn failed_identity_exits_with_one() {
    // B = Ric is not divergence-free, so with the gate opened up the identity is simply false.
    let body = std::fs::read_to_string(scenarios_dir().join("gated.toml")).unwrap() + "gate_tol = 10.0\n";
    let path = write_temp("open_gate.toml", &body);
    let out = verify(&path, &["--format", "machine"]);
    assert_eq!(out.status.code(), Some(1), "{}", stdout(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["scenarios"][0]["verdict"], "fail");
}

#[test]
fn machine_output_is_reproducible() {
    let path = scenarios_dir().join("conservation.toml");
    let a = verify(&path, &["--format", "machine"]);
    let b = verify(&path, &["--format", "machine"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = bin().env("CONFLAB_THREADS", "1").arg("verify").arg(&path).args(["--format", "machine"]).output().unwrap();
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn overrides_and_output_file() {
    let src = write_temp("kw_override.toml", KW_S2);
    let dest = src.with_extension("json");
    let out = verify(&src, &["--levels", "2,3", "--tol", "1e-5", "--format", "json", "--out", dest.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&dest).unwrap()).unwrap();
    let rep = &v["scenarios"][0]["report"];
    assert_eq!(rep["levels"], serde_json::json!([2, 3]));
    assert!((rep["tolerance"].as_f64().unwrap() - 1e-5).abs() < 1e-18);
}

#[test]
fn bad_thread_count_is_rejected() {
    let path = write_temp("threads.toml", "");
    let out = bin().env("CONFLAB_THREADS", "zero").arg("verify").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn shipped_scenarios_pass() {
    for name in ["kazdan_warner.toml", "conservation.toml", "extrinsic.toml", "pohozaev.toml", "gradients.toml"] {
        let out = verify(&scenarios_dir().join(name), &[]);
        assert_eq!(out.status.code(), Some(0), "{name}:\n{}", stdout(&out));
        assert!(stdout(&out).ends_with("suite: pass\n"));
    }
}
