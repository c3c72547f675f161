use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use progspace_cli::analyze::{AnalysisMeta, EmbeddingMeta, Group, GroupStats};
use progspace_cli::output::write_json;
use progspace_cli::report::{render_markdown, write_report};

fn fake_analysis(root: &Path, label: &str, group: Group, dispersion: f64, stress: f64) -> PathBuf {
    let dir = root.join(format!("{label}-{group}"));
    let q = match group {
        Group::All => None,
        Group::Question(q) => Some(q),
    };
    write_json(
        &dir.join("stats.json"),
        &GroupStats {
            group,
            question_id: q,
            n: 10,
            medoid_program_id: 3,
            avg_dispersion: dispersion,
            median_dispersion: dispersion - 1.0,
            mad: dispersion - 1.0,
        },
    )
    .unwrap();
    write_json(
        &dir.join("embedding.meta.json"),
        &EmbeddingMeta {
            raw_stress: stress * 10.0,
            avg_stress: stress,
            seed: 0,
            restarts: 4,
            iterations: 10,
            converged: true,
        },
    )
    .unwrap();
    write_json(
        &dir.join("analysis.meta.json"),
        &AnalysisMeta {
            tool_version: "test".into(),
            label: label.into(),
            group,
            input: "x.dmat.csv".into(),
            input_sha256: String::new(),
            corpus_digest: None,
            lambda: 1.0,
            r_max: 10.0,
            seed: 0,
            restarts: 4,
            histogram_bins: 20,
            log_diagram_infinite: 1,
        },
    )
    .unwrap();
    dir
}

#[test]
fn group_with_smallest_values_is_flagged() {
    let tmp = tempfile::tempdir().unwrap();
    let groups = [
        (Group::All, 60.0, 190.0),
        (Group::Question(0), 45.0, 90.0),
        (Group::Question(1), 48.0, 85.0),
        (Group::Question(2), 30.0, 70.0),
        (Group::Question(3), 50.0, 100.0),
    ];
    let dirs: Vec<PathBuf> = groups
        .iter()
        .map(|&(g, d, s)| fake_analysis(tmp.path(), "m", g, d, s))
        .collect();
    let report = write_report(&dirs, &tmp.path().join("out")).unwrap();
    let rows = &report.models[0].rows;
    assert!(rows[0].minimal.is_empty());
    for row in &rows[1..] {
        assert_eq!(row.minimal, [Group::Question(2)], "{}", row.statistic);
    }
    let md = fs::read_to_string(tmp.path().join("out/report.md")).unwrap();
    assert_eq!(md, render_markdown(&report));
    assert!(md.contains("|  | Avg Dispersion | 60.0 | 45.0 | 48.0 | **30.0** | 50.0 |"));
    assert!(md.contains("**70.0**"));
    assert!(md.starts_with("| Model | Statistic | 0-6 | 0 | 1 | 2 | 3 |"));
}

#[test]
fn two_models_and_missing_cells() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs = vec![
        fake_analysis(tmp.path(), "a", Group::All, 10.0, 5.0),
        fake_analysis(tmp.path(), "b", Group::All, 20.0, 6.0),
        fake_analysis(tmp.path(), "b", Group::Question(4), 12.0, 2.0),
    ];
    let report = write_report(&dirs, &tmp.path().join("out")).unwrap();
    assert_eq!(report.columns, [Group::All, Group::Question(4)]);
    assert_eq!(report.models.len(), 2);
    assert_eq!(report.models[0].rows[1].values, [Some(10.0), None]);
    assert!(render_markdown(&report).contains("n/a"));
}

#[test]
fn report_requires_the_all_group() {
    let tmp = tempfile::tempdir().unwrap();
    let dirs = vec![fake_analysis(
        tmp.path(),
        "a",
        Group::Question(1),
        10.0,
        5.0,
    )];
    let e = write_report(&dirs, &tmp.path().join("out")).unwrap_err();
    assert!(e.to_string().contains("no analysis of group all"));
}

#[test]
fn unknown_group_is_a_one_line_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_progspace"))
        .args(["analyze", "missing.dmat.csv", "--group", "9", "--out-dir"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1);
    assert!(stderr.starts_with("error: unknown group"), "{stderr}");
}

#[test]
fn missing_input_fails_cleanly() {
    let out = Command::new(env!("CARGO_BIN_EXE_progspace"))
        .args([
            "distmat",
            "/nonexistent/corpus.jsonl",
            "--out",
            "/nonexistent/x.dmat.csv",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1, "{stderr}");
}
