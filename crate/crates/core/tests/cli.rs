use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lwire::harness::{read_csv, ResultRecord};
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_lwire");

fn lwire(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("LWIRE_JOBS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value(text: &str, key: &str) -> String {
    let prefix = format!("{key} = ");
    text.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no `{key}` in\n{text}"))
        .to_string()
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

const WEDGE_INTERIOR: &str = r#"
alpha = 1.0
v0 = 1.0
orientation = "interior_bias"
ladder = [[0.25, 24.0], [0.2, 24.0], [0.2, 32.0]]
seed = 7

[curve]
kind = "wedge"
beta = 0.7853981633974483
"#;

const SMALL_EXTERIOR: &str = r#"
alpha = 1.0
v0 = 0.5
orientation = "exterior_bias"
ladder = [[0.25, 4.0], [0.25, 6.0]]

[curve]
kind = "filleted_wedge"
beta = 0.6
fillet_radius = 0.5
"#;

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn transverse_examples() {
    let o = lwire(&["transverse", "--alpha", "1", "--v0", "0.5"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert_eq!(value(&s, "regime"), "Subcritical");
    assert!((value(&s, "mu").parse::<f64>().unwrap() + 0.0625).abs() < 1e-15);

    let s = stdout(&lwire(&["transverse", "--alpha", "1", "--v0", "1"]));
    assert_eq!(value(&s, "regime"), "Critical");
    assert_eq!(value(&s, "bound_state"), "none");

    let s = stdout(&lwire(&["transverse", "--alpha", "2", "--v0", "0"]));
    assert!((value(&s, "mu").parse::<f64>().unwrap() + 1.0).abs() < 1e-15);
    assert!(value(&s, "fd_rel_error").parse::<f64>().unwrap() < 1e-4);

    assert_eq!(lwire(&["transverse", "--alpha", "-1", "--v0", "0"]).status.code(), Some(2));
}

#[test]
fn invalid_input_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let bad = write_config(&dir, "bad.toml", "alpha = 1.0\nv0 = \n");
    assert_eq!(lwire(&["solve", "--config", arg(&bad)]).status.code(), Some(2));
    let unknown = write_config(&dir, "unknown.toml", &format!("{WEDGE_INTERIOR}\nbogus = 3\n"));
    assert_eq!(lwire(&["solve", "--config", arg(&unknown)]).status.code(), Some(2));

    let ok = write_config(&dir, "ok.toml", SMALL_EXTERIOR);
    let o = lwire(&["sweep", "--config", arg(&ok), "--axis", "v0", "--values", ""]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let o = lwire(&["sweep", "--config", arg(&ok), "--axis", "v0"]);
    assert_eq!(o.status.code(), Some(2));

    let single = write_config(&dir, "single.toml", &SMALL_EXTERIOR.replace("[[0.25, 4.0], [0.25, 6.0]]", "[[0.25, 4.0]]"));
    assert_eq!(lwire(&["converge", "--config", arg(&single)]).status.code(), Some(2));

    // subcritical bias: the log-cutoff family needs a zero threshold
    let sub = write_config(&dir, "sub.toml", &WEDGE_INTERIOR.replace("v0 = 1.0", "v0 = 0.5"));
    let o = lwire(&["certify", "--config", arg(&sub), "--family", "theorem4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn solve_persists_a_round_tripping_record() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.toml", SMALL_EXTERIOR);
    let out = dir.path().join("rec.toml");
    for _ in 0..2 {
        let o = lwire(&["solve", "--config", arg(&cfg), "--out", arg(&out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read_to_string(&out).unwrap();
    let rec = ResultRecord::from_toml_str(&text).unwrap();
    assert_eq!(ResultRecord::from_toml_str(&rec.to_toml().unwrap()).unwrap(), rec);
    assert!(rec.is_complete());
    assert_eq!(rec.rungs.len(), 2);

    let rows = read_csv(&out.with_extension("csv")).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0], rows[1]);
    assert_eq!(rows[0].verdict, rec.verdict.label());
}

#[test]
fn identical_seeds_give_identical_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.toml", SMALL_EXTERIOR);
    let a = lwire(&["solve", "--config", arg(&cfg), "--seed", "11"]);
    let b = lwire(&["solve", "--config", arg(&cfg), "--seed", "11"]);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b));
    let csv_line = |s: String| s.lines().last().unwrap().to_string();
    assert!(csv_line(stdout(&a)).ends_with(",11"));
}

#[test]
fn certificate_and_solver_agree() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "t4.toml", WEDGE_INTERIOR);
    let o = lwire(&["certify", "--config", arg(&cfg), "--family", "theorem4"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert_eq!(s.lines().last(), Some("FOUND"));
    assert!(value(&s, "total").parse::<f64>().unwrap() < 0.0);

    let o = lwire(&["solve", "--config", arg(&cfg)]);
    assert!(o.status.success());
    assert_ne!(value(&stdout(&o), "verdict"), "absent");

    let ext = write_config(&dir, "t2.toml", &WEDGE_INTERIOR.replace("interior_bias", "exterior_bias"));
    let o = lwire(&["certify", "--config", arg(&ext), "--family", "theorem4"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().last(), Some("NOT-FOUND"));
}

#[test]
fn sweep_rows_follow_the_input_order() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "c.toml", SMALL_EXTERIOR);
    let out = dir.path().join("sweep.csv");
    let values = [0.3, 0.0, 0.9, 0.1, 2.0];
    let list = values.map(|v| v.to_string()).join(",");
    let o = Command::new(BIN)
        .args(["sweep", "--config", arg(&cfg), "--axis", "v0", "--values", &list, "--out", arg(&out)])
        .env("LWIRE_JOBS", "3")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&out).unwrap();
    let got: Vec<f64> = rows.iter().map(|r| r.v0).collect();
    assert_eq!(got, values);

    // single worker gives the same table
    let out1 = dir.path().join("sweep1.csv");
    let o = lwire(&["sweep", "--config", arg(&cfg), "--axis", "v0", "--values", &list, "--out", arg(&out1), "--jobs", "1"]);
    assert!(o.status.success());
    assert_eq!(read_csv(&out1).unwrap(), rows);
}

#[test]
fn zero_jobs_is_rejected() {
    let o = Command::new(BIN)
        .args(["transverse", "--alpha", "1", "--v0", "0"])
        .env("LWIRE_JOBS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn converge_reports_an_order() {
    let dir = TempDir::new().unwrap();
    let body = r#"
alpha = 0.0
v0 = 0.0
orientation = "interior_bias"
ladder = [[0.2, 2.0], [0.1, 2.0], [0.05, 2.0], [0.05, 3.0]]

[curve]
kind = "wedge"
beta = 0.7853981633974483
"#;
    let cfg = write_config(&dir, "box.toml", body);
    let o = lwire(&["converge", "--config", arg(&cfg)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let order: f64 = value(&stdout(&o), "order").parse().unwrap();
    assert!((order - 2.0).abs() < 0.1, "order {order}");
}
