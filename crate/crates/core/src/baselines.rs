//! Comparison optimizers: Dueling Bandit Gradient Descent with team-draft
//! interleaving, and the epsilon-greedy pairwise learner.

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::Query;
use crate::learner::{query_scores, Impression, OnlineLearner, SimulatedUser};
use crate::metrics::deterministic_ranking;
use crate::pdgd::{infer_preferences, pair_gradient_scale};
use crate::plackett_luce::RankedList;
use crate::scorer::{Parameters, ScorerSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbgdConfig {
    pub learning_rate: f64,
    /// Radius of the exploration sphere.
    pub delta: f64,
    pub candidates: usize,
    pub display_k: usize,
}

impl Default for DbgdConfig {
    fn default() -> Self {
        DbgdConfig {
            learning_rate: 0.01,
            delta: 1.0,
            candidates: 1,
            display_k: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairwiseConfig {
    pub learning_rate: f64,
    /// Probability of filling a position with a uniformly random document.
    pub epsilon: f64,
    pub display_k: usize,
}

impl Default for PairwiseConfig {
    fn default() -> Self {
        PairwiseConfig {
            learning_rate: 0.01,
            epsilon: 0.8,
            display_k: 10,
        }
    }
}

/// A uniformly random direction scaled to norm `delta`.
pub fn sample_unit_sphere<R: Rng + ?Sized>(dim: usize, delta: f64, rng: &mut R) -> Parameters {
    assert!(dim >= 1, "sphere dimension must be positive");
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            return Parameters(v.into_iter().map(|x| x * delta / norm).collect());
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Team {
    A,
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interleaving {
    pub doc_indices: Vec<usize>,
    pub teams: Vec<Team>,
}

impl Interleaving {
    /// Clicks credited to each team, `(A, B)`.
    pub fn credit(&self, clicked: &[bool]) -> (usize, usize) {
        self.teams
            .iter()
            .zip(clicked)
            .filter(|(_, &c)| c)
            .fold((0, 0), |(a, b), (team, _)| match team {
                Team::A => (a + 1, b),
                Team::B => (a, b + 1),
            })
    }
}

/// Team-draft interleaving of two rankings over the same candidates.
///
/// Every round a coin flip picks which team drafts first; each team then
/// adds its highest-ranked document not yet placed.
pub fn team_draft_interleave<R: Rng + ?Sized>(
    ranking_a: &[usize],
    ranking_b: &[usize],
    k: usize,
    rng: &mut R,
) -> Interleaving {
    let n = ranking_a.len().max(ranking_b.len());
    let k = k.min(n);
    let mut placed = vec![false; n];
    let mut out = Interleaving {
        doc_indices: Vec::with_capacity(k),
        teams: Vec::with_capacity(k),
    };
    let (mut next_a, mut next_b) = (0, 0);
    while out.doc_indices.len() < k {
        let order = if rng.random::<bool>() {
            [Team::A, Team::B]
        } else {
            [Team::B, Team::A]
        };
        for team in order {
            if out.doc_indices.len() == k {
                break;
            }
            let (source, cursor) = match team {
                Team::A => (ranking_a, &mut next_a),
                Team::B => (ranking_b, &mut next_b),
            };
            while *cursor < source.len() && placed[source[*cursor]] {
                *cursor += 1;
            }
            if let Some(&doc) = source.get(*cursor) {
                placed[doc] = true;
                out.doc_indices.push(doc);
                out.teams.push(team);
            }
        }
    }
    out
}

/// One DBGD step: duel the current model against a random perturbation and
/// move toward the perturbation if it wins the interleaved comparison.
pub fn dbgd_impression<R: Rng + ?Sized>(
    spec: &ScorerSpec,
    params: &Parameters,
    query: &Query,
    config: &DbgdConfig,
    user: &SimulatedUser,
    rng: &mut R,
) -> (Parameters, Impression) {
    let direction = sample_unit_sphere(params.len(), config.delta, rng);
    let candidate = params.apply_update(&direction, 1.0);
    let current_ranking = deterministic_ranking(&query_scores(spec, params, query));
    let candidate_ranking = deterministic_ranking(&query_scores(spec, &candidate, query));
    let interleaving =
        team_draft_interleave(&current_ranking, &candidate_ranking, config.display_k, rng);
    let clicks = user.interact(query, &interleaving.doc_indices, rng);
    let (current_wins, candidate_wins) = interleaving.credit(&clicks.clicked);
    let updated = if candidate_wins > current_wins {
        params.apply_update(&direction, config.learning_rate / config.delta)
    } else {
        params.clone()
    };
    let impression = Impression {
        displayed: interleaving.doc_indices,
        clicks,
    };
    (updated, impression)
}

/// Epsilon-greedy result list: each position is a uniformly random remaining
/// document with probability `epsilon`, else the best-scored remaining one.
pub fn epsilon_greedy_list<R: Rng + ?Sized>(
    scores: &[f64],
    k: usize,
    epsilon: f64,
    rng: &mut R,
) -> Vec<usize> {
    let mut remaining = deterministic_ranking(scores);
    let k = k.min(remaining.len());
    let mut shown = Vec::with_capacity(k);
    for _ in 0..k {
        let pick = if rng.random::<f64>() < epsilon {
            rng.random_range(0..remaining.len())
        } else {
            0
        };
        shown.push(remaining.remove(pick));
    }
    shown
}

/// One step of the pairwise baseline: the same preference inference as PDGD
/// but with every pair weighted equally.
pub fn pairwise_baseline_impression<R: Rng + ?Sized>(
    spec: &ScorerSpec,
    params: &Parameters,
    query: &Query,
    config: &PairwiseConfig,
    user: &SimulatedUser,
    rng: &mut R,
) -> (Parameters, Impression) {
    let scores = query_scores(spec, params, query);
    let displayed = epsilon_greedy_list(&scores, config.display_k, config.epsilon, rng);
    let clicks = user.interact(query, &displayed, rng);
    let ranking = RankedList::new(displayed, scores);
    let mut gradient = Parameters::zeros(params.len());
    for pair in infer_preferences(&ranking, &clicks) {
        let (k, l) = (pair.preferred, pair.dominated);
        let weight = pair_gradient_scale(ranking.scores[k], ranking.scores[l]);
        spec.add_score_gradient(params, &query.documents[k].features, weight, &mut gradient);
        spec.add_score_gradient(params, &query.documents[l].features, -weight, &mut gradient);
    }
    let updated = params.apply_update(&gradient, config.learning_rate);
    let impression = Impression {
        displayed: ranking.doc_indices,
        clicks,
    };
    (updated, impression)
}

#[derive(Debug, Clone)]
pub struct Dbgd {
    pub spec: ScorerSpec,
    pub params: Parameters,
    pub config: DbgdConfig,
}

impl OnlineLearner for Dbgd {
    fn name(&self) -> &'static str {
        "dbgd"
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
            dbgd_impression(&self.spec, &self.params, query, &self.config, user, rng);
        self.params = params;
        impression
    }
}

#[derive(Debug, Clone)]
pub struct PairwiseBaseline {
    pub spec: ScorerSpec,
    pub params: Parameters,
    pub config: PairwiseConfig,
}

impl OnlineLearner for PairwiseBaseline {
    fn name(&self) -> &'static str {
        "pairwise"
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
            pairwise_baseline_impression(&self.spec, &self.params, query, &self.config, user, rng);
        self.params = params;
        impression
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::click::ClickModel;
    use crate::dataset::Document;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    #[test]
    fn sphere_norms() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((sample_unit_sphere(46, 1.0, &mut rng).norm() - 1.0).abs() < 1e-9);
        assert!((sample_unit_sphere(46, 2.0, &mut rng).norm() - 2.0).abs() < 1e-9);
        let a = sample_unit_sphere(5, 1.0, &mut ChaCha8Rng::seed_from_u64(9));
        let b = sample_unit_sphere(5, 1.0, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn identical_rankings_interleave_to_themselves() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = [3, 1, 4, 0, 2];
        for _ in 0..50 {
            let il = team_draft_interleave(&r, &r, 5, &mut rng);
            assert_eq!(il.doc_indices, r);
        }
    }

    #[test]
    fn opposite_two_doc_rankings() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut outcomes = HashMap::new();
        let n = 20_000;
        for _ in 0..n {
            let il = team_draft_interleave(&[0, 1], &[1, 0], 2, &mut rng);
            assert_eq!(il.teams.iter().filter(|&&t| t == Team::A).count(), 1);
            *outcomes.entry(il.doc_indices).or_insert(0usize) += 1;
        }
        assert_eq!(outcomes.len(), 2);
        let first = outcomes[&vec![0, 1]] as f64 / n as f64;
        assert!((first - 0.5).abs() < 0.02);
    }

    #[test]
    fn credit_counts_clicks_per_team() {
        let il = Interleaving {
            doc_indices: vec![0, 1, 2],
            teams: vec![Team::A, Team::B, Team::B],
        };
        assert_eq!(il.credit(&[true, true, false]), (1, 1));
        assert_eq!(il.credit(&[false, true, true]), (0, 2));
    }

    fn query(n: usize) -> Query {
        Query {
            query_id: "q".into(),
            documents: (0..n)
                .map(|i| Document {
                    features: vec![i as f64 / n as f64, (i % 3) as f64],
                    relevance: (i % 3) as u8,
                    doc_index: i,
                })
                .collect(),
        }
    }

    #[test]
    fn silent_user_freezes_dbgd() {
        let spec = ScorerSpec::linear(2);
        let q = query(8);
        let user = SimulatedUser::new(ClickModel::new("never", [0.0; 5], [0.0; 5]).unwrap(), 2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut params = Parameters(vec![0.1, -0.2]);
        let start = params.clone();
        for _ in 0..200 {
            params = dbgd_impression(&spec, &params, &q, &DbgdConfig::default(), &user, &mut rng).0;
        }
        assert_eq!(params, start);
    }

    #[test]
    fn dbgd_moves_only_on_candidate_wins() {
        let spec = ScorerSpec::linear(2);
        let q = query(8);
        let user = SimulatedUser::new(ClickModel::perfect(), 2);
        let config = DbgdConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut moved = 0;
        for _ in 0..300 {
            let params = Parameters(vec![0.0, 0.0]);
            let (next, _) = dbgd_impression(&spec, &params, &q, &config, &user, &mut rng);
            if next != params {
                moved += 1;
                assert!((next.norm() - config.learning_rate).abs() < 1e-12);
            }
        }
        assert!(moved > 0);
    }

    #[test]
    fn greedy_and_random_limits() {
        let scores = [0.3, 2.0, -1.0, 0.7, 1.5];
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        assert_eq!(
            epsilon_greedy_list(&scores, 3, 0.0, &mut rng),
            vec![1, 4, 3]
        );
        let mut first = [0usize; 5];
        for _ in 0..50_000 {
            first[epsilon_greedy_list(&scores, 3, 1.0, &mut rng)[0]] += 1;
        }
        assert!(first
            .iter()
            .all(|&c| (c as f64 / 50_000.0 - 0.2).abs() < 0.01));
    }

    #[test]
    fn greedy_pairwise_without_clicks_is_a_no_op() {
        let spec = ScorerSpec::linear(2);
        let q = query(6);
        let user = SimulatedUser::new(ClickModel::new("never", [0.0; 5], [0.0; 5]).unwrap(), 2);
        let config = PairwiseConfig {
            epsilon: 0.0,
            ..PairwiseConfig::default()
        };
        let params = Parameters(vec![0.5, 0.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (next, imp) =
            pairwise_baseline_impression(&spec, &params, &q, &config, &user, &mut rng);
        assert_eq!(next, params);
        assert_eq!(imp.displayed.len(), 6);
    }

    proptest! {
        #[test]
        fn sphere_norm_is_exact(dim in 1usize..200, delta in 0.01f64..10.0, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            prop_assert!((sample_unit_sphere(dim, delta, &mut rng).norm() - delta).abs() <= 1e-9);
        }

        #[test]
        fn team_draft_is_fair(n in 1usize..15, seed in any::<u64>(), k in 1usize..15) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a: Vec<usize> = (0..n).collect();
            let mut b = a.clone();
            b.reverse();
            b.rotate_left(seed as usize % n);
            let il = team_draft_interleave(&a, &b, k, &mut rng);
            prop_assert_eq!(il.doc_indices.len(), k.min(n));
            let mut seen = il.doc_indices.clone();
            seen.sort_unstable();
            seen.dedup();
            prop_assert_eq!(seen.len(), il.doc_indices.len());
            let mut diff: i64 = 0;
            for (i, t) in il.teams.iter().enumerate() {
                diff += if *t == Team::A { 1 } else { -1 };
                if i % 2 == 1 {
                    prop_assert_eq!(diff, 0);
                }
                prop_assert!(diff.abs() <= 1);
            }
        }
    }
}
