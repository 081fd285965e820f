use std::fs;
use std::path::Path;
use std::process::Command;

use diagens::experiment::Table;

fn diagens() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_diagens"));
    c.env_remove("DIAGENS_WORKERS");
    c
}

fn write_config(dir: &Path, extra: &str) -> String {
    let out = dir.join("out");
    let text = format!(
        r#"
name = "tiny"
sizes = [4, 6]
initial_states = ["X+", "Z+"]
observables = ["sx", "sz"]
oracle = true
output_dir = "{}"

[filter]
order = 16
max_bond = 32
checkpoints = [8, 16]
{extra}
"#,
        out.display()
    );
    let path = dir.join("tiny.toml");
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn run_writes_tables_manifest_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = dir.path().join("out");
    let st = diagens().args(["run", &cfg, "--workers=2"]).output().unwrap().status;
    assert!(st.success());
    for f in ["manifest.txt", "runs.tsv", "stored.tsv", "N4_Xp_M16.tsv", "N6_Zp_M16.tsv", "N6_Zp_M16_exact.tsv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let t = Table::read(&out.join("N6_Xp_M16.tsv")).unwrap();
    assert_eq!(t.rows.len(), 2);
    for key in ["N", "state", "M", "max_bond", "rel_tol", "alpha"] {
        assert!(t.header.iter().any(|h| h == key), "{key}");
    }
    let first: Vec<Vec<u8>> = ["N6_Xp_M16.tsv", "N6_Xp_M16_exact.tsv", "manifest.txt"]
        .iter()
        .map(|f| fs::read(out.join(f)).unwrap())
        .collect();

    // rerun with a different worker count, overriding nothing else
    let st = diagens().args(["run", &cfg]).env("DIAGENS_WORKERS", "1").output().unwrap().status;
    assert!(st.success());
    let second: Vec<Vec<u8>> = ["N6_Xp_M16.tsv", "N6_Xp_M16_exact.tsv", "manifest.txt"]
        .iter()
        .map(|f| fs::read(out.join(f)).unwrap())
        .collect();
    assert_eq!(first, second);
}

#[test]
fn mps_and_exact_tables_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "rel_tol = 0.0");
    assert!(diagens().args(["run", &cfg, "--workers=1", "--filter.max_bond=64"]).output().unwrap().status.success());
    let out = dir.path().join("out");
    let mps = Table::read(&out.join("N6_Xp_M16.tsv")).unwrap();
    let exact = Table::read(&out.join("N6_Xp_M16_exact.tsv")).unwrap();
    for col in ["delta_sq_phys", "frobenius_sq", "trace_re", "sx", "sz", "osee"] {
        for (a, b) in mps.column(col).unwrap().iter().zip(exact.column(col).unwrap()) {
            assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()), "{col}: {a} vs {b}");
        }
    }
}

#[test]
fn aborted_run_is_a_failed_row_and_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "abort_threshold = 1e-30");
    let out = diagens().args(["run", &cfg, "--sizes=[6]", "--workers=1", "--filter.max_bond=2"]).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("failed"), "{err}");
    let runs = Table::read(&dir.path().join("out/runs.tsv")).unwrap();
    let k = runs.header.iter().position(|h| h == "status").unwrap();
    assert!(runs.rows.iter().all(|r| r[k] == "failed"));
    assert!(dir.path().join("out/manifest.txt").exists());
}

#[test]
fn bad_inputs_exit_nonzero_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    for args in [
        vec!["run", cfg.as_str(), "--filter.order=15"],
        vec!["run", cfg.as_str(), "--initial_states=[]"],
        vec!["run", "recipe:no-such-recipe"],
        vec!["run", "/nonexistent/config.toml"],
        vec!["run", cfg.as_str(), "--workers=0"],
    ] {
        let out = diagens().args(&args).output().unwrap();
        assert!(!out.status.success(), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("diagens:"), "{args:?}");
    }
    let out = diagens().args(["run", &cfg]).env("DIAGENS_WORKERS", "zero").output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn fit_reads_table_columns() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.tsv");
    let mut text = String::from("M\tdelta_sq\n");
    for m in [16.0f64, 32.0, 64.0, 128.0, 256.0] {
        text.push_str(&format!("{m}\t{}\n", 5.0 * m.powf(-2.0)));
    }
    fs::write(&path, text).unwrap();
    let out = diagens()
        .args(["fit", path.to_str().unwrap(), "--x=M", "--y=delta_sq", "--range=20,300"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    let row: Vec<&str> = stdout.lines().nth(1).unwrap().split('\t').collect();
    assert!((row[0].parse::<f64>().unwrap() + 2.0).abs() < 1e-6);
    assert_eq!(row[5], "4");
    let out = diagens().args(["fit", path.to_str().unwrap(), "--x=M", "--y=nope"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn recipes_list_and_show() {
    let out = diagens().args(["recipes", "--list"]).output().unwrap();
    assert!(out.status.success());
    let s = String::from_utf8_lossy(&out.stdout);
    for name in ["fig1-variance-scaling", "fig3/5-error-small-N", "fig8-osee-peak"] {
        assert!(s.contains(name), "{name}");
    }
    let out = diagens().args(["recipes", "--show", "fig7-osee-scaling"]).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("order_rules"));
}

#[test]
fn profile_of_stored_vectors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "rel_tol = 1e-12\nstore_degrees = [0, 4, 8, 16]");
    assert!(diagens().args(["run", &cfg, "--sizes=[6]", "--initial_states=[\"X+\"]"]).output().unwrap().status.success());
    let run_dir = dir.path().join("out");
    let out = diagens()
        .args(["profile", run_dir.to_str().unwrap(), "--tols=1,1e-4"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let t = Table::read(&run_dir.join("profile.tsv")).unwrap();
    assert_eq!(t.rows.len(), 8);
    let deg = t.column("degree").unwrap();
    let tol = t.column("tolerance").unwrap();
    let bond = t.column("required_bond").unwrap();
    for ((d, t), b) in deg.iter().zip(&tol).zip(&bond) {
        if *d == 0.0 || *t == 1.0 {
            assert_eq!(*b, 1.0);
        }
    }
}
