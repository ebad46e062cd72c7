use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gammarad(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gammarad"))
        .args(args)
        .env("GAMMARAD_OUT", out)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const WEISS: &str = r#"{"experiment": "weiss-equivalence", "params": {"system": {"lambda": "k^2", "beta": "1", "n": "4096"}}}"#;

#[test]
fn weiss_config_reports_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "w.json", WEISS);
    let o = gammarad(&["run", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("weiss-equivalence.csv")).unwrap();
    assert!(csv.starts_with("experiment,parameter,value,std_error,truncation,seed\n"));
    assert!(csv.contains("verdict=Consistent,1,"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("weiss-equivalence.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn gram_config_respects_bound() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "g.json",
        r#"{"experiment": "gram", "params": {"sequence": "modulated", "b": "1", "rho": "0.25", "n_min": "-128", "n_max": "128"}}"#,
    );
    let o = gammarad(&["run", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("gram.csv")).unwrap();
    let norm: f64 = csv.lines().find(|l| l.contains(",op_norm_sqrt,")).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!(norm <= 1.07547 + 1e-9);
}

#[test]
fn malformed_configs_exit_one_with_key_path() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(dir.path(), "u.json", &WEISS.replace("\"beta\"", "\"betta\""));
    let o = gammarad(&["validate", &unknown], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("params.system"));
    let bare = write_config(dir.path(), "b.json", &WEISS.replace("\"4096\"", "4096"));
    assert_eq!(gammarad(&["run", &bare], dir.path()).status.code(), Some(1));
    let broken = write_config(dir.path(), "x.json", "{");
    assert_eq!(gammarad(&["run", &broken], dir.path()).status.code(), Some(1));
    assert_eq!(gammarad(&["run", "/nonexistent.json"], dir.path()).status.code(), Some(1));
    let ok = write_config(dir.path(), "ok.json", WEISS);
    assert_eq!(gammarad(&["validate", &ok], dir.path()).status.code(), Some(0));
}

#[test]
fn gallery_is_deterministic_and_perturbation_fails() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    for d in [&a, &b] {
        let o = gammarad(&["gallery", "--seed", "5", "--out", d.to_str().unwrap()], dir.path());
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (x, y) = (fs::read(a.join("gallery.csv")).unwrap(), fs::read(b.join("gallery.csv")).unwrap());
    assert_eq!(x, y);
    let o = gammarad(&["gallery", "--perturb", "--out", c.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn off_diagonal_run_records_every_step() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "o.json",
        r#"{"experiment": "off-diagonal", "params": {"system": {"lambda": "k", "beta": "1", "n": "16384"}, "delta": "1", "targets": ["2", "5"]}}"#,
    );
    let o = gammarad(&["run", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("off-diagonal.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| l.contains("step=pigeonhole")).count(), 2);
    assert!(csv.contains("verdict=Witnessed"));
}

#[test]
fn rerun_with_same_seed_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "m.json",
        r#"{"experiment": "gamma-norm", "params": {"space": "lp:1.5", "operator": {"type": "diagonal", "values": ["1", "0.5", "0.25"]}}, "draws": {"seed": "3", "samples": "2000", "batches": "10"}}"#,
    );
    let first = {
        assert_eq!(gammarad(&["run", &cfg], dir.path()).status.code(), Some(0));
        fs::read(dir.path().join("gamma-norm.csv")).unwrap()
    };
    assert_eq!(gammarad(&["run", &cfg], dir.path()).status.code(), Some(0));
    assert_eq!(first, fs::read(dir.path().join("gamma-norm.csv")).unwrap());
}
