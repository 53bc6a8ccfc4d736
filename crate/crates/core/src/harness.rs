//! Repeated seeded runs and their aggregation.
//!
//! Run `r` of an experiment uses seed `base_seed + r` and fold
//! `r % n_folds`. All randomness of a run comes from one ChaCha8 stream
//! seeded with that value, so adding repeats leaves earlier runs untouched.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{Dbgd, DbgdConfig, PairwiseBaseline, PairwiseConfig};
use crate::click::{ClickModel, ClickModelError};
use crate::dataset::QueryDataset;
use crate::learner::{OnlineLearner, SimulatedUser};
use crate::metrics::{offline_performance, online_performance, query_ndcg, MetricsConfig};
use crate::pdgd::{Pdgd, PdgdConfig};
use crate::scorer::{Parameters, ScorerKind, ScorerSpec, DEFAULT_HIDDEN_UNITS};
use crate::stats::{student_t_test, Summary, TTest};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error("fold {fold} has no {split} queries")]
    EmptySplit { fold: usize, split: &'static str },
    #[error(transparent)]
    ClickModel(#[from] ClickModelError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot encode results: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Pdgd,
    Dbgd,
    Pairwise,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Pdgd => "pdgd",
            Algorithm::Dbgd => "dbgd",
            Algorithm::Pairwise => "pairwise",
        }
    }

    pub fn default_learning_rate(self) -> f64 {
        match self {
            Algorithm::Pdgd => PdgdConfig::default().learning_rate,
            Algorithm::Dbgd => DbgdConfig::default().learning_rate,
            Algorithm::Pairwise => PairwiseConfig::default().learning_rate,
        }
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pdgd" => Ok(Algorithm::Pdgd),
            "dbgd" => Ok(Algorithm::Dbgd),
            "pairwise" | "pair" => Ok(Algorithm::Pairwise),
            _ => Err(format!(
                "unknown algorithm `{s}` (expected pdgd, dbgd or pairwise)"
            )),
        }
    }
}

/// Everything that determines one experiment arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub dataset: String,
    pub data_root: Option<PathBuf>,
    pub algorithm: Algorithm,
    pub model: ScorerKind,
    /// A built-in model name or a path to a JSON click table.
    pub click_model: String,
    pub impressions: usize,
    pub k: usize,
    /// `None` picks the algorithm's default.
    pub learning_rate: Option<f64>,
    pub delta: f64,
    pub epsilon: f64,
    pub gamma: f64,
    pub eval_interval: usize,
    pub repeats: usize,
    pub base_seed: u64,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: "mq2008".into(),
            data_root: None,
            algorithm: Algorithm::Pdgd,
            model: ScorerKind::Linear,
            click_model: "perfect".into(),
            impressions: 10_000,
            k: 10,
            learning_rate: None,
            delta: DbgdConfig::default().delta,
            epsilon: PairwiseConfig::default().epsilon,
            gamma: 0.9995,
            eval_interval: 100,
            repeats: 25,
            base_seed: 0,
            output: None,
        }
    }
}

impl RunConfig {
    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
            .unwrap_or_else(|| self.algorithm.default_learning_rate())
    }

    /// Short name used in result files, e.g. `pdgd-linear`.
    pub fn label(&self) -> String {
        let model = match self.model {
            ScorerKind::Linear => "linear",
            ScorerKind::Neural { .. } => "neural",
        };
        format!("{}-{model}", self.algorithm.name())
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |m: &str| Err(HarnessError::InvalidConfig(m.to_string()));
        if self.impressions == 0 {
            return fail("impressions must be at least 1");
        }
        if self.repeats == 0 {
            return fail("repeats must be at least 1");
        }
        if self.k == 0 {
            return fail("k must be at least 1");
        }
        if self.eval_interval == 0 {
            return fail("eval_interval must be at least 1");
        }
        if self.learning_rate().is_nan() || self.learning_rate() <= 0.0 {
            return fail("learning rate must be positive");
        }
        if self.algorithm == Algorithm::Dbgd && (self.delta.is_nan() || self.delta <= 0.0) {
            return fail("delta must be positive");
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return fail("epsilon must lie in [0, 1]");
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return fail("gamma must lie in (0, 1]");
        }
        if let ScorerKind::Neural { hidden_units: 0 } = self.model {
            return fail("a neural model needs hidden units");
        }
        Ok(())
    }

    pub fn scorer(&self, feature_dim: usize) -> ScorerSpec {
        match self.model {
            ScorerKind::Linear => ScorerSpec::linear(feature_dim),
            ScorerKind::Neural { hidden_units } => ScorerSpec::neural(feature_dim, hidden_units),
        }
    }

    pub fn resolve_click_model(&self) -> Result<ClickModel, HarnessError> {
        match ClickModel::by_name(&self.click_model) {
            Ok(model) => Ok(model),
            Err(e) => {
                let path = Path::new(&self.click_model);
                if path.is_file() {
                    Ok(ClickModel::from_file(path)?)
                } else {
                    Err(e.into())
                }
            }
        }
    }

    pub fn metrics(&self) -> MetricsConfig {
        MetricsConfig {
            gamma: self.gamma,
            eval_interval: self.eval_interval,
            ..MetricsConfig::default()
        }
    }

    /// Evaluation times: every multiple of `eval_interval` from 0 up to
    /// `impressions`, plus `impressions` itself.
    pub fn eval_points(&self) -> Vec<usize> {
        let mut points: Vec<usize> = (0..=self.impressions).step_by(self.eval_interval).collect();
        if points.last() != Some(&self.impressions) {
            points.push(self.impressions);
        }
        points
    }

    pub fn build_learner(&self, feature_dim: usize, seed: u64) -> Box<dyn OnlineLearner> {
        let spec = self.scorer(feature_dim);
        let params = spec.initialize(seed);
        let learning_rate = self.learning_rate();
        match self.algorithm {
            Algorithm::Pdgd => Box::new(Pdgd::new(
                spec,
                params,
                PdgdConfig {
                    learning_rate,
                    display_k: self.k,
                },
            )),
            Algorithm::Dbgd => Box::new(Dbgd {
                spec,
                params,
                config: DbgdConfig {
                    learning_rate,
                    delta: self.delta,
                    display_k: self.k,
                    ..DbgdConfig::default()
                },
            }),
            Algorithm::Pairwise => Box::new(PairwiseBaseline {
                spec,
                params,
                config: PairwiseConfig {
                    learning_rate,
                    epsilon: self.epsilon,
                    display_k: self.k,
                },
            }),
        }
    }
}

/// Parses `linear`, `neural` or `neural:<hidden units>`.
pub fn parse_model(s: &str) -> Result<ScorerKind, String> {
    match s.to_ascii_lowercase().split_once(':') {
        None if s.eq_ignore_ascii_case("linear") => Ok(ScorerKind::Linear),
        None if s.eq_ignore_ascii_case("neural") => Ok(ScorerKind::Neural {
            hidden_units: DEFAULT_HIDDEN_UNITS,
        }),
        Some(("neural", n)) => n
            .parse()
            .ok()
            .filter(|&h| h > 0)
            .map(|hidden_units| ScorerKind::Neural { hidden_units })
            .ok_or_else(|| format!("bad hidden unit count `{n}`")),
        _ => Err(format!("unknown model `{s}` (expected linear or neural)")),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpressionRecord {
    pub t: usize,
    pub query_id: String,
    pub ndcg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub t: usize,
    pub offline_ndcg: f64,
    pub cumulative_online: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub label: String,
    pub fold: usize,
    pub seed: u64,
    pub impressions: Vec<ImpressionRecord>,
    pub eval_points: Vec<EvalPoint>,
    pub final_offline: f64,
    pub final_online: f64,
    pub scorer: ScorerSpec,
    pub final_params: Parameters,
}

impl RunRecord {
    pub fn offline_at(&self, t: usize) -> Option<f64> {
        self.eval_points
            .iter()
            .find(|p| p.t == t)
            .map(|p| p.offline_ndcg)
    }
}

/// One run: `impressions` uniformly sampled training queries, each shown
/// and learned from, with offline evaluation on the fold's test queries at
/// every eval point.
pub fn run_single(
    config: &RunConfig,
    dataset: &QueryDataset,
    fold: usize,
    seed: u64,
) -> Result<RunRecord, HarnessError> {
    config.validate()?;
    let click_model = config.resolve_click_model()?;
    let Some(split) = dataset.folds.get(fold) else {
        return Err(HarnessError::InvalidConfig(format!(
            "fold {fold} does not exist ({} available)",
            dataset.folds.len()
        )));
    };
    if split.train.is_empty() {
        return Err(HarnessError::EmptySplit {
            fold,
            split: "train",
        });
    }
    if split.test.is_empty() {
        return Err(HarnessError::EmptySplit {
            fold,
            split: "test",
        });
    }

    let metrics = config.metrics();
    let user = SimulatedUser::new(click_model, dataset.max_grade);
    let mut learner = config.build_learner(dataset.feature_dim, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eval_at = config.eval_points();
    let mut next_eval = eval_at.iter().copied().peekable();

    let mut impressions = Vec::with_capacity(config.impressions);
    let mut eval_points = Vec::with_capacity(eval_at.len());
    let mut cumulative = 0.0;
    let mut weight = 1.0;
    for t in 0..=config.impressions {
        if t > 0 {
            let query = &split.train[rng.random_range(0..split.train.len())];
            let shown = learner.impression(query, &user, &mut rng);
            let ndcg = query_ndcg(query, &shown.displayed, &metrics);
            cumulative += ndcg * weight;
            weight *= config.gamma;
            impressions.push(ImpressionRecord {
                t,
                query_id: query.query_id.clone(),
                ndcg,
            });
        }
        if next_eval.peek() == Some(&t) {
            next_eval.next();
            eval_points.push(EvalPoint {
                t,
                offline_ndcg: offline_performance(
                    learner.scorer(),
                    learner.parameters(),
                    &split.test,
                    &metrics,
                ),
                cumulative_online: cumulative,
            });
        }
    }

    let ndcgs: Vec<f64> = impressions.iter().map(|r| r.ndcg).collect();
    Ok(RunRecord {
        label: config.label(),
        fold,
        seed,
        final_offline: eval_points.last().map_or(f64::NAN, |p| p.offline_ndcg),
        final_online: online_performance(&ndcgs, config.gamma),
        impressions,
        eval_points,
        scorer: *learner.scorer(),
        final_params: learner.parameters().clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub fold: usize,
    pub seed: u64,
    pub offline: f64,
    pub online: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmReport {
    pub label: String,
    pub config: RunConfig,
    pub offline: Summary,
    pub online: Summary,
    pub runs: Vec<RunSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    /// Two-tailed Student's t-test on final offline NDCG.
    pub offline: TTest,
    pub online: TTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub dataset: String,
    pub arms: Vec<ArmReport>,
    /// Every pair of arms; empty when any arm has fewer than two runs.
    pub comparisons: Vec<Comparison>,
}

impl AggregateReport {
    pub fn arm(&self, label: &str) -> Option<&ArmReport> {
        self.arms.iter().find(|a| a.label == label)
    }

    pub fn comparison(&self, a: &str, b: &str) -> Option<&Comparison> {
        self.comparisons.iter().find(|c| c.a == a && c.b == b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub report: AggregateReport,
    /// Grouped by arm, then by repeat.
    pub runs: Vec<Vec<RunRecord>>,
}

/// The `(fold, seed)` pairs of an arm's repeats.
pub fn run_schedule(config: &RunConfig, n_folds: usize) -> Vec<(usize, u64)> {
    (0..config.repeats)
        .map(|r| (r % n_folds, config.base_seed.wrapping_add(r as u64)))
        .collect()
}

/// Runs every arm `repeats` times in parallel and aggregates the results.
/// Output order and contents do not depend on the thread count.
pub fn run_experiment(
    configs: &[RunConfig],
    dataset: &QueryDataset,
) -> Result<ExperimentOutcome, HarnessError> {
    if configs.is_empty() {
        return Err(HarnessError::InvalidConfig(
            "no algorithm configured".into(),
        ));
    }
    if dataset.folds.is_empty() {
        return Err(HarnessError::InvalidConfig("dataset has no folds".into()));
    }
    for config in configs {
        config.validate()?;
    }
    let labels: Vec<String> = configs.iter().map(RunConfig::label).collect();
    for (i, label) in labels.iter().enumerate() {
        if labels[..i].contains(label) {
            return Err(HarnessError::InvalidConfig(format!(
                "arm `{label}` given twice"
            )));
        }
    }

    let jobs: Vec<(usize, usize, u64)> = configs
        .iter()
        .enumerate()
        .flat_map(|(arm, c)| {
            run_schedule(c, dataset.folds.len())
                .into_iter()
                .map(move |(fold, seed)| (arm, fold, seed))
        })
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(arm, fold, seed)| run_single(&configs[arm], dataset, fold, seed))
        .collect::<Result<Vec<_>, _>>()?;

    let mut runs: Vec<Vec<RunRecord>> = vec![Vec::new(); configs.len()];
    for (&(arm, _, _), record) in jobs.iter().zip(records) {
        runs[arm].push(record);
    }

    let arms: Vec<ArmReport> = configs
        .iter()
        .zip(&runs)
        .map(|(config, records)| {
            let offline: Vec<f64> = records.iter().map(|r| r.final_offline).collect();
            let online: Vec<f64> = records.iter().map(|r| r.final_online).collect();
            ArmReport {
                label: config.label(),
                config: config.clone(),
                offline: Summary::of(&offline),
                online: Summary::of(&online),
                runs: records
                    .iter()
                    .map(|r| RunSummary {
                        fold: r.fold,
                        seed: r.seed,
                        offline: r.final_offline,
                        online: r.final_online,
                    })
                    .collect(),
            }
        })
        .collect();

    let mut comparisons = Vec::new();
    if runs.iter().all(|r| r.len() >= 2) {
        for i in 0..arms.len() {
            for j in i + 1..arms.len() {
                let values = |arm: &ArmReport, online: bool| -> Vec<f64> {
                    arm.runs
                        .iter()
                        .map(|r| if online { r.online } else { r.offline })
                        .collect()
                };
                comparisons.push(Comparison {
                    a: arms[i].label.clone(),
                    b: arms[j].label.clone(),
                    offline: student_t_test(&values(&arms[i], false), &values(&arms[j], false)),
                    online: student_t_test(&values(&arms[i], true), &values(&arms[j], true)),
                });
            }
        }
    }

    Ok(ExperimentOutcome {
        report: AggregateReport {
            dataset: dataset.name.clone(),
            arms,
            comparisons,
        },
        runs,
    })
}

pub const CURVES_HEADER: &str = "algorithm,fold,seed,t,offline_ndcg,cumulative_online";

/// Plot-ready curves, one row per run and eval point.
pub fn curves_csv(runs: &[Vec<RunRecord>]) -> String {
    let mut out = String::from(CURVES_HEADER);
    out.push('\n');
    for record in runs.iter().flatten() {
        for p in &record.eval_points {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                record.label, record.fold, record.seed, p.t, p.offline_ndcg, p.cumulative_online
            )
            .expect("writing to a String");
        }
    }
    out
}

/// A trained model on disk: enough to rebuild the scorer and evaluate it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub scorer: ScorerSpec,
    pub parameters: Parameters,
}

impl Checkpoint {
    pub fn read(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn write(path: &Path, contents: &str) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `summary.json`, `curves.csv` and one checkpoint per run under
/// `params/` into `dir`, creating it if needed.
pub fn emit_results(outcome: &ExperimentOutcome, dir: &Path) -> Result<(), HarnessError> {
    let io = |source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    };
    fs::create_dir_all(dir.join("params")).map_err(io)?;
    write(
        &dir.join("summary.json"),
        &serde_json::to_string_pretty(&outcome.report)?,
    )?;
    write(&dir.join("curves.csv"), &curves_csv(&outcome.runs))?;
    for record in outcome.runs.iter().flatten() {
        let checkpoint = Checkpoint {
            scorer: record.scorer,
            parameters: record.final_params.clone(),
        };
        let name = format!(
            "{}-fold{}-seed{}.json",
            record.label, record.fold, record.seed
        );
        write(
            &dir.join("params").join(name),
            &serde_json::to_string(&checkpoint)?,
        )?;
    }
    Ok(())
}
