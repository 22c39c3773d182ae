use std::collections::BTreeMap;

use sparse_bandit::harness::{
    emit_csv, emit_svg, iqr, median, read_long_csv, read_summary_csv, run_experiment,
    ExperimentConfig, MAX_TRAJECTORY_POINTS,
};

fn config(json: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(json).unwrap()
}

const MIXED: &str = r#"{
    "instance": {"kind": "hard", "d": 6, "s": 2, "kappa": 0.8},
    "policies": [{"name": "estc"}, {"name": "linucb"}, {"name": "phased_elimination"}],
    "horizons": [200, 2500],
    "replications": 3,
    "base_seed": 11
}"#;

#[test]
fn one_policy_one_horizon_three_seeds_gives_three_runs() {
    let res = run_experiment(&config(
        r#"{"instance": {"kind": "basis", "d": 3}, "policies": [{"name": "linucb"}],
            "horizons": [50], "replications": 3}"#,
    ))
    .unwrap();
    assert_eq!(res.records.len(), 3);
    let seeds: Vec<u64> = res.records.iter().map(|r| r.seed).collect();
    assert_eq!(seeds, [0, 1, 2]);
}

#[test]
fn summary_matches_long_form_finals() {
    let res = run_experiment(&config(MIXED)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = emit_csv(&res, &dir.path().join("regret.csv")).unwrap();
    let long = read_long_csv(&files.long).unwrap();
    let summary = read_summary_csv(&files.summary).unwrap();
    assert_eq!(summary.len(), 3 * 2);

    let mut finals: BTreeMap<(String, usize), BTreeMap<u64, (usize, f64)>> = BTreeMap::new();
    for row in &long {
        let last = finals
            .entry((row.policy.clone(), row.horizon))
            .or_default()
            .entry(row.seed)
            .or_insert((0, 0.0));
        if row.round >= last.0 {
            *last = (row.round, row.cum_regret);
        }
    }
    for s in &summary {
        let per_seed = &finals[&(s.policy.clone(), s.horizon)];
        assert!(per_seed.values().all(|(round, _)| *round == s.horizon));
        let values: Vec<f64> = per_seed.values().map(|v| v.1).collect();
        assert!((median(&values) - s.median).abs() < 1e-9 * s.median.max(1.0));
        assert!((iqr(&values) - s.iqr).abs() < 1e-9 * s.median.max(1.0));
    }
}

#[test]
fn trajectories_are_downsampled() {
    let res = run_experiment(&config(MIXED)).unwrap();
    for rec in &res.records {
        assert!(rec.trajectory.len() <= MAX_TRAJECTORY_POINTS);
        assert_eq!(rec.trajectory.last().unwrap().0, rec.horizon);
        assert_eq!(rec.trajectory.last().unwrap().1, rec.final_regret);
    }
    let short = res.records.iter().find(|r| r.horizon == 200).unwrap();
    assert_eq!(short.trajectory.len(), 200);
}

#[test]
fn replications_do_not_depend_on_each_other() {
    // seed 12 run alone must equal seed 12 inside a larger batch
    let batch = run_experiment(&config(MIXED)).unwrap();
    let single = run_experiment(&config(
        &MIXED
            .replace("\"replications\": 3", "\"replications\": 1")
            .replace("\"base_seed\": 11", "\"base_seed\": 12"),
    ))
    .unwrap();
    for rec in &single.records {
        let twin = batch
            .records
            .iter()
            .find(|r| r.policy == rec.policy && r.horizon == rec.horizon && r.seed == rec.seed)
            .unwrap();
        assert_eq!(twin.trajectory, rec.trajectory);
        assert_eq!(twin.diagnostics, rec.diagnostics);
    }
}

#[test]
fn reruns_are_identical() {
    let a = run_experiment(&config(MIXED)).unwrap();
    let b = run_experiment(&config(MIXED)).unwrap();
    assert_eq!(a.records, b.records);
}

#[test]
fn svg_is_well_formed() {
    let mut cfg = config(MIXED);
    cfg.output.bounds = true;
    let res = run_experiment(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plot.svg");
    emit_svg(&res, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    let polylines = doc
        .descendants()
        .filter(|n| n.has_tag_name("polyline"))
        .count();
    assert_eq!(polylines, 3 + 2);
}

#[test]
fn invalid_configs_are_rejected() {
    for bad in [
        r#"{"instance": {"kind": "basis"}, "policies": []}"#,
        r#"{"instance": {"kind": "basis"}, "policies": [{"name": "estc"}], "replications": 0}"#,
        r#"{"instance": {"kind": "basis"}, "policies": [{"name": "estc"}], "horizons": [100, 50]}"#,
        r#"{"instance": {"kind": "basis"}, "policies": [{"name": "estc"}, {"name": "estc"}]}"#,
        r#"{"instance": {"kind": "nope"}, "policies": [{"name": "estc"}]}"#,
        r#"{"instance": {"kind": "basis"}, "policies": [{"name": "estc"}], "typo": 1}"#,
    ] {
        let err = ExperimentConfig::from_json(bad).unwrap_err();
        assert!(err.is_config_error(), "{bad}: {err}");
    }
}
