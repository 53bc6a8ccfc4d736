//! Small generated datasets with a planted linear relevance signal.
//!
//! Meant for examples and tests when no LETOR data is at hand.
//! Each document's features are uniform in `[0, 1)`; its grade comes from
//! thresholding `w . x + noise` against quantiles of the query's own
//! documents, so every query has a mix of grades and most documents are
//! irrelevant, similar to the MQ collections.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{normalize_per_query, Document, Fold, Query, QueryDataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub feature_dim: usize,
    pub max_grade: u8,
    pub folds: usize,
    pub train_queries: usize,
    pub test_queries: usize,
    pub min_docs: usize,
    pub max_docs: usize,
    /// Standard deviation of the noise added to the planted score.
    pub noise: f64,
    /// Fraction of each query's documents at every grade above zero.
    pub relevant_fraction: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            feature_dim: 10,
            max_grade: 2,
            folds: 1,
            train_queries: 60,
            test_queries: 20,
            min_docs: 8,
            max_docs: 20,
            noise: 0.1,
            relevant_fraction: 0.15,
        }
    }
}

/// The planted weight vector used for a given seed.
pub fn planted_weights(feature_dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..feature_dim)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn generate_query<R: Rng + ?Sized>(
    spec: &SyntheticSpec,
    weights: &[f64],
    id: String,
    rng: &mut R,
) -> Query {
    let n = rng.random_range(spec.min_docs..=spec.max_docs);
    let features: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..spec.feature_dim).map(|_| rng.random::<f64>()).collect())
        .collect();
    let latent: Vec<f64> = features
        .iter()
        .map(|x| {
            let signal: f64 = x.iter().zip(weights).map(|(a, b)| a * b).sum();
            signal + spec.noise * rng.sample::<f64, _>(StandardNormal)
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| latent[b].total_cmp(&latent[a]));
    let mut grades = vec![0u8; n];
    let per_grade = ((n as f64 * spec.relevant_fraction).round() as usize).max(1);
    for (rank, &doc) in order.iter().enumerate() {
        let from_top = rank / per_grade;
        grades[doc] = spec
            .max_grade
            .saturating_sub(from_top.min(u8::MAX as usize) as u8);
    }
    let documents = features
        .into_iter()
        .zip(grades)
        .enumerate()
        .map(|(doc_index, (features, relevance))| Document {
            features,
            relevance,
            doc_index,
        })
        .collect();
    normalize_per_query(Query {
        query_id: id,
        documents,
    })
}

/// Builds a dataset deterministically from `seed`.
///
/// # Panics
///
/// If the spec asks for no features, no folds or `min_docs > max_docs`.
pub fn synthetic_dataset(spec: &SyntheticSpec, seed: u64) -> QueryDataset {
    assert!(
        spec.feature_dim >= 1 && spec.folds >= 1,
        "need features and folds"
    );
    assert!(
        1 <= spec.min_docs && spec.min_docs <= spec.max_docs,
        "bad document range"
    );
    let weights = planted_weights(spec.feature_dim, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let folds = (0..spec.folds)
        .map(|f| {
            let mut make = |prefix: &str, count: usize| -> Vec<Query> {
                (0..count)
                    .map(|i| generate_query(spec, &weights, format!("f{f}-{prefix}{i}"), &mut rng))
                    .collect()
            };
            Fold {
                train: make("train", spec.train_queries),
                validation: Vec::new(),
                test: make("test", spec.test_queries),
            }
        })
        .collect();
    QueryDataset {
        name: "synthetic".into(),
        feature_dim: spec.feature_dim,
        max_grade: spec.max_grade,
        folds,
    }
}
