//! Harness artifacts, determinism and validation.

use stable_brw::harness::{run, ExperimentKind, RunConfig};
use stable_brw::kv::KvBlock;

fn config(kind: ExperimentKind, text: &str, out: &std::path::Path) -> RunConfig {
    let mut kv = KvBlock::parse(text).unwrap();
    kv.set("out", out.display());
    RunConfig::new(kind, kv).unwrap()
}

#[test]
fn cstar_report_contains_closed_form_and_both_estimates() {
    let dir = tempfile::tempdir().unwrap();
    let c =
        config(ExperimentKind::Cstar, "alpha = 2\nsigma = 1\nparticles = 2000\nt-end = 2\nn-bins = 100", dir.path());
    let r = run(&c).unwrap();
    let report = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("4.9348"), "{report}");
    assert!(report.contains("mc_resampling") && report.contains("spectral"));
    let csv = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    let lines = std::fs::read_to_string(dir.path().join("records.jsonl")).unwrap();
    for l in lines.lines() {
        let v: serde_json::Value = serde_json::from_str(l).unwrap();
        assert_eq!(v["config_hash"], r.config_hash.as_str());
    }
}

#[test]
fn same_seed_gives_identical_summary() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let text = "n = 60\ntrials = 200\nmax-pop = 1000\na-frac = 0.5, 1, 1.5\nseed = 17";
    run(&config(ExperimentKind::Survival, text, d1.path())).unwrap();
    run(&config(ExperimentKind::Survival, text, d2.path())).unwrap();
    let read = |d: &tempfile::TempDir| std::fs::read_to_string(d.path().join("summary.csv")).unwrap();
    assert_eq!(read(&d1), read(&d2));
}

#[test]
fn thread_count_does_not_change_results() {
    let text = "n = 60\ntrials = 300\nmax-pop = 1000\na-frac = 0.7, 1.2";
    let dir = tempfile::tempdir().unwrap();
    let c = config(ExperimentKind::Survival, text, dir.path());
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| run(&c).unwrap());
    let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| run(&c).unwrap());
    assert_eq!(one.summary, many.summary);
    assert_eq!(one.records, many.records);
}

#[test]
fn invalid_alpha_fails_before_compute() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(ExperimentKind::Cstar, "alpha = 0.8", dir.path());
    let e = run(&c).unwrap_err();
    assert!(e.to_string().contains("(1, 2]"));
    assert!(!dir.path().join("summary.csv").exists());
}

#[test]
fn failing_stage_leaves_truncated_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    // The bracket cannot straddle a crossing at this threshold.
    let c = config(
        ExperimentKind::Survival,
        "n = 20\ntrials = 50\nsearch = true\nbracket = 5, 6\nthreshold = 0.999",
        dir.path(),
    );
    assert!(run(&c).is_err());
    let csv = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(csv.contains("truncated"));
    let report = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("TRUNCATED"));
}

#[test]
fn pipeline_emits_every_stage() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        ExperimentKind::Pipeline,
        "alpha = 1.5\nc = 0.001\ny0 = 0.25\nn = 40\ntrials = 100\nmax-pop = 1000\nparticles = 500\nt-end = 1",
        dir.path(),
    );
    let r = run(&c).unwrap();
    let stages: std::collections::BTreeSet<&str> = r.records.iter().filter_map(|v| v["stage"].as_str()).collect();
    for s in ["calibrate_c0", "cstar", "a_alpha", "survival_curve", "critical_crossing"] {
        assert!(stages.contains(s), "missing {s}: {stages:?}");
    }
}

#[test]
fn stage_streams_are_distinct() {
    use stable_brw::rng::{stage, Streams};
    let s = Streams::new(5);
    let all = [
        stage::CALIBRATE,
        stage::CSTAR_MC,
        stage::CSTAR_SPECTRAL,
        stage::TUBE,
        stage::MANY_TO_ONE_TREE,
        stage::MANY_TO_ONE_WALK,
        stage::SURVIVAL,
        stage::CRITICAL_SEARCH,
        stage::BN,
        stage::TWO_BARRIER,
    ];
    let roots: std::collections::BTreeSet<u64> = all.iter().map(|&k| s.stage(k).root()).collect();
    assert_eq!(roots.len(), all.len());
}

#[test]
fn config_file_text_is_accepted() {
    let c = RunConfig::from_text("kind = ode\nalpha = 2\na-frac = 0.5\nseed = 3").unwrap();
    assert_eq!(c.kind, ExperimentKind::Ode);
    assert_eq!(c.seed, 3);
    let r = run(&c).unwrap();
    assert!(r.report.contains("K ="));
}
