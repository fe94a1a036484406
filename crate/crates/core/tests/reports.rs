use std::path::{Path, PathBuf};

use mwzeval::error::Error;
use mwzeval::report::{compare, render, render_ranking, run, EvalConfig, EvalReport, Metrics, OutputFormat};
use mwzeval::success::MatchPolicy;

fn data() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/sng0805")
}

fn config(predictions: Vec<PathBuf>) -> EvalConfig {
    let mut config = EvalConfig::from_data_dir(&data(), predictions, "mwz22");
    config.style = "damd".into();
    config.metrics = Metrics {
        bleu: true,
        success: true,
        richness: true,
    };
    config
}

/// A weaker copy of the fixture system that never gives the postcode.
fn weaker_system(dir: &Path) -> PathBuf {
    let text = std::fs::read_to_string(data().join("predictions/ubar.json")).unwrap();
    let path = dir.join("weak.json");
    std::fs::write(&path, text.replace("and the postcode is [value_postcode] ", "")).unwrap();
    path
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let c = config(vec![data().join("predictions/ubar.json")]);
    assert_eq!(run(&c).unwrap().report.to_json(), run(&c).unwrap().report.to_json());
}

#[test]
fn report_contents() {
    let report = run(&config(vec![data().join("predictions/ubar.json")])).unwrap().report;
    assert_eq!(report.schema_version, 1);
    let keys: Vec<&str> = report.inputs.keys().map(String::as_str).collect();
    assert_eq!(keys, ["db/restaurant.json", "goals", "ontology", "references"]);
    assert!(report.inputs.values().all(|d| d.len() == 64));
    let system = &report.systems[0];
    assert_eq!(system.name, "ubar");
    assert_eq!((system.dialogues, system.turns, system.missing_turns), (1, 4, 0));
    assert_eq!(system.coverage, 1.0);
    let success = system.success.as_ref().unwrap();
    assert_eq!((success.inform, success.success), (100.0, 100.0));
    let bleu = system.bleu.as_ref().unwrap();
    assert!(bleu.score > 0.0 && bleu.score < 100.0);
    assert!(system.richness.is_some());
}

#[test]
fn reports_round_trip_and_reject_unknown_fields() {
    let report = run(&config(vec![data().join("predictions/ubar.json")])).unwrap().report;
    let text = report.to_json();
    assert_eq!(EvalReport::from_json(&text, "r.json").unwrap(), report);

    let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
    value["systems"][0]["extra"] = serde_json::json!(1);
    assert!(EvalReport::from_json(&value.to_string(), "r.json").is_err());

    let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
    value["schema_version"] = serde_json::json!(2);
    let err = EvalReport::from_json(&value.to_string(), "r.json").unwrap_err();
    assert!(err.to_string().contains("schema_version"), "{err}");
}

#[test]
fn compare_ranks_systems_from_separate_reports() {
    let dir = tempfile::tempdir().unwrap();
    let strong = run(&config(vec![data().join("predictions/ubar.json")])).unwrap().report;
    let weak = run(&config(vec![weaker_system(dir.path())])).unwrap().report;
    let ranking = compare(&[weak, strong]).unwrap();
    let success: Vec<&str> = ranking.metrics["success"].iter().map(|e| e.system.as_str()).collect();
    assert_eq!(success, ["ubar", "weak"]);
    // Both inform, so the tie falls back to names.
    let inform: Vec<&str> = ranking.metrics["inform"].iter().map(|e| e.system.as_str()).collect();
    assert_eq!(inform, ["ubar", "weak"]);
    let csv = render_ranking(&ranking, OutputFormat::Csv);
    assert!(csv.starts_with("metric,rank,system,value\n"));
    assert!(csv.contains("success,1,ubar,100.00\n"));
}

#[test]
fn compare_refuses_different_configs() {
    let strong = run(&config(vec![data().join("predictions/ubar.json")])).unwrap().report;
    let mut optimistic = config(vec![data().join("predictions/ubar.json")]);
    optimistic.policy = MatchPolicy::optimistic();
    let other = run(&optimistic).unwrap().report;
    match compare(&[strong, other]) {
        Err(Error::ConfigMismatch(fields)) => {
            assert!(fields.iter().all(|f| f.starts_with("config.policy")), "{fields:?}");
            assert!(!fields.is_empty());
        }
        other => panic!("expected a config mismatch, got {other:?}"),
    }
    assert!(compare(&[]).is_err());
}

#[test]
fn duplicate_system_names_are_rejected() {
    let path = data().join("predictions/ubar.json");
    assert!(run(&config(vec![path.clone(), path])).is_err());
}

#[test]
fn csv_and_table_views() {
    let report = run(&config(vec![data().join("predictions/ubar.json")])).unwrap().report;
    let csv = render(&report, OutputFormat::Csv);
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("system,coverage,bleu,inform,success,"));
    assert!(header.ends_with(",coverage_incomplete"));
    assert!(lines.next().unwrap().starts_with("ubar,1.0000,"));
    let table = render(&report, OutputFormat::Table);
    assert!(table.lines().nth(2).unwrap().starts_with("ubar"));
    assert!(!table.contains('*'));
}

#[test]
fn validation_reports_missing_inputs() {
    let mut c = config(vec![data().join("predictions/missing.json")]);
    assert!(c.validate().unwrap_err().is_io());
    c.predictions = vec![data().join("predictions/ubar.json")];
    c.metrics = Metrics::default();
    assert!(!c.validate().unwrap_err().is_io());
    c.metrics.success = true;
    c.policy.threshold = 120.0;
    assert!(c.validate().is_err());
}

#[test]
fn two_systems_share_one_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = run(&config(vec![
        data().join("predictions/ubar.json"),
        weaker_system(dir.path()),
    ]))
    .unwrap()
    .report;
    let names: Vec<&str> = report.systems.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names, ["ubar", "weak"]);
    assert_ne!(
        report.systems[0].predictions_digest,
        report.systems[1].predictions_digest
    );
    assert_eq!(report.inputs.len(), 4);
}

#[test]
fn bleu_ranking_follows_scores() {
    let base = run(&config(vec![data().join("predictions/ubar.json")])).unwrap().report;
    let with_bleu = |name: &str, score: f64| {
        let mut r = base.clone();
        r.systems[0].name = name.into();
        r.systems[0].bleu.as_mut().unwrap().score = score;
        r
    };
    let ranking = compare(&[with_bleu("ubar", 16.3), with_bleu("mintl", 18.6)]).unwrap();
    let order: Vec<(&str, f64)> = ranking.metrics["bleu"]
        .iter()
        .map(|e| (e.system.as_str(), e.value))
        .collect();
    assert_eq!(order, [("mintl", 18.6), ("ubar", 16.3)]);

    let tied = compare(&[with_bleu("zeta", 10.0), with_bleu("alpha", 10.0)]).unwrap();
    assert_eq!(tied.metrics["bleu"][0].system, "alpha");

    let mut other_refs = with_bleu("hdsa", 1.0);
    other_refs.config.reference_style = "hdsa".into();
    assert!(compare(&[base, other_refs]).is_err());
}

#[test]
fn partial_coverage_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let mut goals: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(data().join("goals.json")).unwrap()).unwrap();
    goals["PMUL0001"] = serde_json::json!({"hotel": {"constraints": {"area": "east"}}});
    let goals_path = dir.path().join("goals.json");
    std::fs::write(&goals_path, goals.to_string()).unwrap();

    let mut c = config(vec![data().join("predictions/ubar.json")]);
    c.goals = goals_path;
    c.metrics = Metrics { success: true, ..Metrics::default() };
    let report = run(&c).unwrap().report;
    let system = &report.systems[0];
    assert_eq!(system.coverage, 0.5);
    assert!(system.coverage_incomplete);
    assert_eq!(system.success.as_ref().unwrap().evaluated, 1);
    let table = render(&report, OutputFormat::Table);
    assert!(table.contains("0.5000*"));
    assert!(table.ends_with("* predictions cover only part of the benchmark\n"));
    assert!(render(&report, OutputFormat::Csv).lines().nth(1).unwrap().ends_with(",true"));
}
