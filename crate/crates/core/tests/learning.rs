//! End-to-end learning on generated data with a planted relevance signal.

use oltr::click::ClickModel;
use oltr::dataset::QueryDataset;
use oltr::harness::{run_experiment, run_single, Algorithm, ExperimentOutcome, RunConfig};
use oltr::scorer::ScorerKind;
use oltr::synthetic::{synthetic_dataset, SyntheticSpec};

fn dataset() -> QueryDataset {
    synthetic_dataset(
        &SyntheticSpec {
            folds: 2,
            ..SyntheticSpec::default()
        },
        11,
    )
}

fn config(algorithm: Algorithm, model: ScorerKind, click: &str) -> RunConfig {
    RunConfig {
        dataset: "synthetic".into(),
        algorithm,
        model,
        click_model: click.into(),
        impressions: 2_000,
        eval_interval: 500,
        repeats: 4,
        ..RunConfig::default()
    }
}

fn start_mean(out: &ExperimentOutcome, arm: usize) -> f64 {
    let runs = &out.runs[arm];
    runs.iter()
        .map(|r| r.eval_points[0].offline_ndcg)
        .sum::<f64>()
        / runs.len() as f64
}

#[test]
fn pdgd_learns_under_every_click_model() {
    let ds = dataset();
    for model in [ScorerKind::Linear, ScorerKind::Neural { hidden_units: 16 }] {
        for click in ["perfect", "navigational", "informational"] {
            let out = run_experiment(&[config(Algorithm::Pdgd, model, click)], &ds).unwrap();
            let arm = &out.report.arms[0];
            assert!(
                arm.offline.mean > 0.9,
                "{} {click}: {}",
                arm.label,
                arm.offline.mean
            );
            assert!(arm.offline.mean > start_mean(&out, 0) + 0.3);
        }
    }
}

#[test]
fn baselines_learn_and_pay_for_exploration() {
    let ds = dataset();
    let configs = [
        config(Algorithm::Pdgd, ScorerKind::Linear, "perfect"),
        config(Algorithm::Dbgd, ScorerKind::Linear, "perfect"),
        config(Algorithm::Pairwise, ScorerKind::Linear, "perfect"),
    ];
    let out = run_experiment(&configs, &ds).unwrap();
    let report = &out.report;
    for arm in &report.arms {
        assert!(
            arm.offline.mean > start_mean(&out, 0) + 0.2,
            "{}",
            arm.label
        );
    }
    let pdgd = report.arm("pdgd-linear").unwrap();
    let pairwise = report.arm("pairwise-linear").unwrap();
    assert!(pdgd.online.mean > pairwise.online.mean);
    assert!(
        report
            .comparison("pdgd-linear", "pairwise-linear")
            .unwrap()
            .online
            .p
            < 0.05
    );
}

#[test]
fn noisy_clicks_hurt_dbgd_more_than_pdgd() {
    let ds = dataset();
    let configs = [
        config(Algorithm::Pdgd, ScorerKind::Linear, "informational"),
        config(Algorithm::Dbgd, ScorerKind::Linear, "informational"),
    ];
    let report = run_experiment(&configs, &ds).unwrap().report;
    let c = report.comparison("pdgd-linear", "dbgd-linear").unwrap();
    assert!(c.offline.t > 0.0 && c.offline.p < 0.05, "{c:?}");
}

#[test]
fn never_clicking_user_leaves_the_model_untouched() {
    let ds = dataset();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("never.json");
    std::fs::write(&path, "[0,0,0,0,0, 0,0,0,0,0]").unwrap();
    assert!(ClickModel::from_file(&path).is_ok());
    for algorithm in [Algorithm::Pdgd, Algorithm::Dbgd, Algorithm::Pairwise] {
        let c = RunConfig {
            click_model: path.to_string_lossy().into_owned(),
            impressions: 1,
            ..config(algorithm, ScorerKind::Linear, "")
        };
        let record = run_single(&c, &ds, 0, 9).unwrap();
        assert!(
            record.final_params.iter().all(|&w| w == 0.0),
            "{algorithm:?}"
        );
        assert_eq!(record.final_online, record.impressions[0].ndcg);
        assert_eq!(record.eval_points.len(), 2);
    }
}
