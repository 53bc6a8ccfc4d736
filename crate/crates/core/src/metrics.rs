//! Offline and online ranking quality.

use serde::{Deserialize, Serialize};

use crate::dataset::Query;
use crate::scorer::ScorerSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gain {
    /// `2^grade - 1`
    #[default]
    Exponential,
    /// `grade`
    Linear,
}

impl Gain {
    #[inline]
    pub fn of(self, grade: u8) -> f64 {
        match self {
            Gain::Exponential => f64::from(grade).exp2() - 1.0,
            Gain::Linear => f64::from(grade),
        }
    }
}

/// What NDCG reports for a query without any relevant document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoRelevant {
    /// Count the query with NDCG 0.
    #[default]
    Zero,
    /// Leave the query out of offline averages.
    Skip,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsConfig {
    pub cutoff: usize,
    pub gamma: f64,
    pub eval_interval: usize,
    #[serde(default)]
    pub gain: Gain,
    #[serde(default)]
    pub no_relevant: NoRelevant,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            cutoff: 10,
            gamma: 0.9995,
            eval_interval: 100,
            gain: Gain::Exponential,
            no_relevant: NoRelevant::Zero,
        }
    }
}

fn dcg(grades: impl IntoIterator<Item = u8>, k: usize, gain: Gain) -> f64 {
    grades
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, g)| gain.of(g) / ((i + 2) as f64).log2())
        .sum()
}

pub fn ideal_dcg(all_grades: &[u8], k: usize, gain: Gain) -> f64 {
    let mut sorted = all_grades.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    dcg(sorted, k, gain)
}

/// NDCG@k with exponential gain. Returns 0 when no candidate is relevant.
pub fn ndcg_at_k(ranking_grades: &[u8], all_grades: &[u8], k: usize) -> f64 {
    ndcg_with_gain(ranking_grades, all_grades, k, Gain::Exponential)
}

pub fn ndcg_with_gain(ranking_grades: &[u8], all_grades: &[u8], k: usize, gain: Gain) -> f64 {
    let ideal = ideal_dcg(all_grades, k, gain);
    if ideal == 0.0 {
        return 0.0;
    }
    dcg(ranking_grades.iter().copied(), k, gain) / ideal
}

/// NDCG of a displayed list of document indices into `query`.
pub fn query_ndcg(query: &Query, displayed: &[usize], config: &MetricsConfig) -> f64 {
    let grades: Vec<u8> = displayed
        .iter()
        .map(|&d| query.documents[d].relevance)
        .collect();
    ndcg_with_gain(&grades, &query.grades(), config.cutoff, config.gain)
}

/// Document indices sorted by descending score, ties by ascending index.
pub fn deterministic_ranking(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Mean NDCG of the model's deterministic rankings over held-out queries.
///
/// # Panics
///
/// If `test_queries` is empty.
pub fn offline_performance(
    spec: &ScorerSpec,
    params: &[f64],
    test_queries: &[Query],
    config: &MetricsConfig,
) -> f64 {
    assert!(
        !test_queries.is_empty(),
        "offline evaluation needs test queries"
    );
    let mut total = 0.0;
    let mut counted = 0usize;
    for query in test_queries {
        let grades = query.grades();
        if config.no_relevant == NoRelevant::Skip && grades.iter().all(|&g| g == 0) {
            continue;
        }
        let scores = spec.score_all(
            params,
            query.documents.iter().map(|d| d.features.as_slice()),
        );
        total += query_ndcg(query, &deterministic_ranking(&scores), config);
        counted += 1;
    }
    if counted == 0 {
        0.0
    } else {
        total / counted as f64
    }
}

/// `sum_t ndcg_t * gamma^(t-1)`.
pub fn online_performance(impression_ndcgs: &[f64], gamma: f64) -> f64 {
    let mut weight = 1.0;
    let mut total = 0.0;
    for &ndcg in impression_ndcgs {
        total += ndcg * weight;
        weight *= gamma;
    }
    total
}
