//! Pairwise Differentiable Gradient Descent.
//!
//! Each impression samples a ranking from the Plackett-Luce model over the
//! current scores, infers `clicked > unclicked` preferences from what the
//! user examined, and ascends the pairwise probability of every preference,
//! weighting each pair by
//!
//! ```text
//! rho = P(R*) / (P(R) + P(R*))
//! ```
//!
//! where `R*` is the displayed ranking with the pair's positions swapped.
//! The weight is treated as a constant when differentiating.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::click::ClickRealization;
use crate::dataset::Query;
use crate::learner::{query_scores, Impression, OnlineLearner, SimulatedUser};
use crate::plackett_luce::{log_ranking_probability, reverse_pair, sample_ranking, RankedList};
use crate::scorer::{Parameters, ScorerSpec};

/// `preferred` was clicked, `dominated` was examined and skipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PreferencePair {
    pub preferred: usize,
    pub dominated: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdgdConfig {
    pub learning_rate: f64,
    pub display_k: usize,
}

impl Default for PdgdConfig {
    fn default() -> Self {
        PdgdConfig {
            learning_rate: 0.1,
            display_k: 10,
        }
    }
}

#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Number of leading positions the user is assumed to have examined:
/// everything up to the last click plus the first document after it.
pub fn observed_prefix_len(clicks: &ClickRealization) -> usize {
    clicks
        .last_click()
        .map_or(0, |last| (last + 2).min(clicks.len()))
}

/// Every (clicked, unclicked) pair within the observed prefix, ordered by the
/// clicked document's position and then the unclicked one's.
///
/// # Panics
///
/// If the click vector is not aligned with the ranking.
pub fn infer_preferences(ranking: &RankedList, clicks: &ClickRealization) -> Vec<PreferencePair> {
    assert_eq!(
        ranking.len(),
        clicks.len(),
        "clicks misaligned with ranking"
    );
    let observed = observed_prefix_len(clicks);
    let mut pairs = Vec::new();
    for i in (0..observed).filter(|&i| clicks.clicked[i]) {
        for j in (0..observed).filter(|&j| !clicks.clicked[j]) {
            pairs.push(PreferencePair {
                preferred: ranking.doc_indices[i],
                dominated: ranking.doc_indices[j],
            });
        }
    }
    pairs
}

/// The debiasing weight of a preference pair, `P(R*) / (P(R) + P(R*))`.
pub fn pair_weight_rho(scores: &[f64], ranking: &RankedList, pair: PreferencePair) -> f64 {
    let log_p = log_ranking_probability(scores, &ranking.doc_indices);
    rho_from_log_p(scores, ranking, pair, log_p)
}

fn rho_from_log_p(scores: &[f64], ranking: &RankedList, pair: PreferencePair, log_p: f64) -> f64 {
    let swapped = reverse_pair(ranking, pair.preferred, pair.dominated);
    let log_p_swapped = log_ranking_probability(scores, &swapped.doc_indices);
    logistic(log_p_swapped - log_p)
}

/// `e^{f_k} e^{f_l} / (e^{f_k} + e^{f_l})^2`, the derivative factor of the
/// pairwise probability `P(d_k before d_l)`.
pub fn pair_gradient_scale(score_k: f64, score_l: f64) -> f64 {
    let diff = score_k - score_l;
    logistic(diff) * logistic(-diff)
}

/// The rho-weighted pairwise gradient for one impression.
pub fn compute_gradient(
    spec: &ScorerSpec,
    params: &[f64],
    query: &Query,
    ranking: &RankedList,
    clicks: &ClickRealization,
) -> Parameters {
    let mut gradient = Parameters::zeros(spec.param_len());
    let pairs = infer_preferences(ranking, clicks);
    if pairs.is_empty() {
        return gradient;
    }
    let scores = &ranking.scores;
    let log_p = log_ranking_probability(scores, &ranking.doc_indices);
    for pair in pairs {
        let (k, l) = (pair.preferred, pair.dominated);
        let weight = rho_from_log_p(scores, ranking, pair, log_p)
            * pair_gradient_scale(scores[k], scores[l]);
        spec.add_score_gradient(params, &query.documents[k].features, weight, &mut gradient);
        spec.add_score_gradient(params, &query.documents[l].features, -weight, &mut gradient);
    }
    gradient
}

/// One full PDGD step: score, sample, observe clicks, update.
pub fn pdgd_impression<R: Rng + ?Sized>(
    spec: &ScorerSpec,
    params: &Parameters,
    query: &Query,
    config: &PdgdConfig,
    user: &SimulatedUser,
    rng: &mut R,
) -> (Parameters, Impression) {
    let scores = query_scores(spec, params, query);
    let ranking = sample_ranking(&scores, config.display_k, rng);
    let clicks = user.interact(query, &ranking.doc_indices, rng);
    let gradient = compute_gradient(spec, params, query, &ranking, &clicks);
    let updated = params.apply_update(&gradient, config.learning_rate);
    let impression = Impression {
        displayed: ranking.doc_indices,
        clicks,
    };
    (updated, impression)
}

/// PDGD as an [`OnlineLearner`].
#[derive(Debug, Clone)]
pub struct Pdgd {
    pub spec: ScorerSpec,
    pub params: Parameters,
    pub config: PdgdConfig,
}

impl Pdgd {
    pub fn new(spec: ScorerSpec, params: Parameters, config: PdgdConfig) -> Self {
        Pdgd {
            spec,
            params,
            config,
        }
    }
}

impl OnlineLearner for Pdgd {
    fn name(&self) -> &'static str {
        "pdgd"
    }

    fn scorer(&self) -> &ScorerSpec {
        &self.spec
    }

    fn parameters(&self) -> &Parameters {
        &self.params
    }

    fn impression(
        &mut self,
        query: &Query,
        user: &SimulatedUser,
        rng: &mut dyn RngCore,
    ) -> Impression {
        let (params, impression) =
            pdgd_impression(&self.spec, &self.params, query, &self.config, user, rng);
        self.params = params;
        impression
    }
}
