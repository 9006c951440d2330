use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stable-brw"))
}

#[test]
fn cstar_writes_all_three_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "cstar",
            "--alpha",
            "2",
            "--sigma",
            "1",
            "--set",
            "particles=1000",
            "--set",
            "t-end=1",
            "--set",
            "n-bins=64",
        ])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("4.9348"));
    for f in ["records.jsonl", "summary.csv", "report.txt"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn invalid_alpha_is_a_usage_error() {
    let out = bin().args(["cstar", "--alpha", "0.8"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("(1, 2]"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# ode run\nalpha = 1.5\ncstar = 2.0\na_frac = 0.5\n").unwrap();
    let out = bin()
        .arg("ode")
        .arg("--config")
        .arg(&cfg)
        .args(["--alpha", "2", "--set", "cstar=4.934802200544679"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("alpha = 2,"), "{stdout}");
    assert!(stdout.contains("a_alpha = 4.640502"), "{stdout}");
}

#[test]
fn critical_prints_csv_rows() {
    let out = bin().args(["critical", "--alpha", "2", "--a", "2,4,6,8"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("alpha,cstar,a,a_alpha,r_a,t_max,K"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.len() == 7));
    // Below a_alpha = 4.64: blow-down data only; above: r_a only.
    assert!(rows[1][4].is_empty() && !rows[1][5].is_empty() && !rows[1][6].is_empty());
    assert!(!rows[2][4].is_empty() && rows[2][5].is_empty());
}

#[test]
fn survival_search_reports_crossings() {
    let out = bin()
        .args([
            "survival",
            "--n",
            "30,60",
            "--trials",
            "200",
            "--max-pop",
            "1000",
            "--seed",
            "4",
            "--set",
            "search=true",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.matches("crossing of s").count(), 2, "{stdout}");
}

#[test]
fn same_seed_same_summary_through_the_cli() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&d1, &d2] {
        let st = bin().args(["bn", "--trials", "300", "--seed", "8"]).arg("--out").arg(d.path()).status().unwrap();
        assert!(st.success());
    }
    let read = |d: &tempfile::TempDir| std::fs::read_to_string(d.path().join("summary.csv")).unwrap();
    assert_eq!(read(&d1), read(&d2));
}

#[test]
fn unknown_set_syntax_is_rejected() {
    let out = bin().args(["ode", "--set", "novalue"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
