use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const REFERENCE: &str = "\
dimension = 2+1
alice.gap = 3
alice.alpha_re = 0.7071067811865476
alice.beta_im = -0.7071067811865476
alice.t_on = 0
alice.t_off = 3
alice.position = 0, 0
bob.gap = 3
bob.alpha_re = 0.7071067811865476
bob.beta_re = 0.7071067811865476
bob.t_on = 5
bob.t_off = 8
bob.position = 1, 0
lambda_product = 0.01
";

fn qcc(args: &[&str], tol: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qcc"));
    cmd.args(args);
    match tol {
        Some(t) => cmd.env("QCC_QUAD_TOL", t),
        None => cmd.env_remove("QCC_QUAD_TOL"),
    };
    cmd.output().expect("run qcc")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout_rows(o: &Output) -> Vec<Vec<String>> {
    String::from_utf8(o.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn column<'a>(rows: &'a [Vec<String>], name: &str) -> &'a str {
    let i = rows[0].iter().position(|h| h == name).unwrap();
    &rows[1][i]
}

#[test]
fn point_prints_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "r.cfg", REFERENCE);
    let o = qcc(&["point", cfg.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = stdout_rows(&o);
    assert_eq!(rows.len(), 2);
    assert_eq!(column(&rows, "status"), "ok");
    for name in ["s2", "hB_sig", "hI_on", "hI_off", "hf_sig"] {
        assert!(column(&rows, name).parse::<f64>().unwrap() != 0.0, "{name}");
    }
    let s2: f64 = column(&rows, "s2").parse().unwrap();
    let p: f64 = column(&rows, "p").parse().unwrap();
    let q: f64 = column(&rows, "q").parse().unwrap();
    assert!((p - q - 0.01 * s2.abs()).abs() < 1e-15);
    assert!(String::from_utf8_lossy(&o.stderr).contains("TIMELIKE"));
}

#[test]
fn spacelike_and_three_plus_one_columns_are_exactly_zero() {
    let dir = tempfile::tempdir().unwrap();
    let far = write(dir.path(), "far.cfg", &REFERENCE.replace("bob.position = 1, 0", "bob.position = 10, 0"));
    let o = qcc(&["point", far.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    let rows = stdout_rows(&o);
    for name in ["s2", "hB_sig", "hI_on", "hI_off", "hf_sig"] {
        assert_eq!(column(&rows, name), "0.0000000000000000e0", "{name}");
    }
    let d3 = REFERENCE
        .replace("dimension = 2+1", "dimension = 3+1")
        .replace("position = 0, 0", "position = 0, 0, 0")
        .replace("position = 1, 0", "position = 1, 0, 0");
    let d3 = write(dir.path(), "d3.cfg", &d3);
    let o = qcc(&["point", d3.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(column(&stdout_rows(&o), "s2"), "0.0000000000000000e0");
}

#[test]
fn config_errors_exit_one_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let typo = write(dir.path(), "typo.cfg", &REFERENCE.replace("bob.gap", "bob.gpa"));
    let o = qcc(&["point", typo.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 8: unknown key `bob.gpa`"));

    let o = qcc(&["point", dir.path().join("missing.cfg").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(1));

    let cfg = write(dir.path(), "r.cfg", REFERENCE);
    let o = qcc(&["point", cfg.to_str().unwrap()], Some("zero"));
    assert_eq!(o.status.code(), Some(1));

    let o = qcc(&["sweep", cfg.to_str().unwrap(), "--param", "bob_t_on", "--range", "5:4:0.1", "--out", "x.csv"], None);
    assert_eq!(o.status.code(), Some(1));
    let o = qcc(&["sweep", cfg.to_str().unwrap(), "--param", "nonsense", "--range", "4:5:0.1", "--out", "x.csv"], None);
    assert_eq!(o.status.code(), Some(1));
    let o = qcc(&["frobnicate"], None);
    assert_eq!(o.status.code(), Some(1));
    let o = qcc(&["--help"], None);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn unwritable_output_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "r.cfg", REFERENCE);
    let out = dir.path().join("no/such/dir/out.csv");
    let o = qcc(
        &["sweep", cfg.to_str().unwrap(), "--param", "gap_B", "--range", "1:2:0.5", "--out", out.to_str().unwrap()],
        None,
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_rows_carry_status_for_rejected_points() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "r.cfg", REFERENCE);
    let out = dir.path().join("s.csv");
    let o = qcc(
        &["sweep", cfg.to_str().unwrap(), "--param", "bob_t_on", "--range", "2.5:5:0.5", "--out", out.to_str().unwrap()],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "param,s2,hB_sig,hI_on,hI_off,hf_sig,quad_error,status");
    let status: Vec<&str> = lines[1..].iter().map(|l| l.rsplit(',').next().unwrap()).collect();
    // 2.5 overlaps Alice's window, 3 to 4 cross the lightcone, 4.5 and 5 are timelike
    assert_eq!(
        status,
        ["invalid_scenario", "rejected_lightcone", "rejected_lightcone", "rejected_lightcone", "ok", "ok"]
    );
    assert!(lines[1].starts_with("2.5000000000000000e0,,,,,,"));
    // s2 is still reported when only the field energy is rejected
    assert!(!lines[2].split(',').nth(1).unwrap().is_empty());
    assert!(lines[2].split(',').nth(5).unwrap().is_empty());
}

#[test]
fn sweep_rows_match_point_evaluations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "r.cfg", REFERENCE);
    let out = dir.path().join("s.csv");
    let o = qcc(
        &["sweep", cfg.to_str().unwrap(), "--param", "separation_L", "--range", "0.5:1.5:0.5", "--out", out.to_str().unwrap()],
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    for (line, l) in text.lines().skip(1).zip(["0.5", "1", "1.5"]) {
        let moved = write(dir.path(), "m.cfg", &REFERENCE.replace("bob.position = 1, 0", &format!("bob.position = {l}, 0")));
        let p = qcc(&["point", moved.to_str().unwrap()], None);
        let rows = stdout_rows(&p);
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[1..8], rows[1][0..7].iter().map(String::as_str).collect::<Vec<_>>()[..]);
    }
}

#[test]
fn capacity_overrides_config_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "r.cfg", REFERENCE);
    let o = qcc(&["capacity", cfg.to_str().unwrap(), "--lambda-product", "0.1", "--noise-R", "0.01"], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = stdout_rows(&o);
    assert_eq!(column(&rows, "lambda_product").parse::<f64>().unwrap(), 0.1);
    assert!((column(&rows, "q").parse::<f64>().unwrap() - 0.51).abs() < 1e-12);
    let o = qcc(&["capacity", cfg.to_str().unwrap(), "--lambda-product", "1000"], None);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn validate_passes_and_fails_on_demand() {
    let o = qcc(&["validate", "--samples", "3"], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 18);

    let o = qcc(&["validate", "--samples", "3", "--equivalence-tol", "1e-17"], None);
    assert_eq!(o.status.code(), Some(3));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("FAIL s2_1p1_closed_form")));
}
