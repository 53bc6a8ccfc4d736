//! Brute-force check that PDGD's expected gradient respects user preferences.
//!
//! For a handful of documents with fixed scores, every displayed ranking and
//! every click vector can be enumerated together with its exact probability.
//! Summing each preference pair's weight `rho * scale` over that enumeration
//! gives the coefficient `alpha[k][l]` of `(f'(d_k) - f'(d_l))` in the
//! expected update. The unbiasedness property says
//!
//! * equal grades: `alpha[k][l] == 0`
//! * `grade_k > grade_l`: `alpha[k][l] > 0`
//!
//! and antisymmetrically for the reverse orientation.
//!
//! The enumeration works on abstract scores; no feature vectors are involved
//! because the property concerns the pair coefficients only.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::click::{grade_to_column, ClickModel, ClickRealization};
use crate::pdgd::{infer_preferences, pair_gradient_scale, pair_weight_rho};
use crate::plackett_luce::{log_ranking_probability, reverse_pair, sample_ranking, RankedList};

pub const MAX_DOCS: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("instance with {n_docs} documents and k={k} is too large to enumerate (at most {MAX_DOCS} documents, 1 <= k <= n)")]
    TooLarge { n_docs: usize, k: usize },
    #[error("instance is malformed: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleInstance {
    pub scores: Vec<f64>,
    pub grades: Vec<u8>,
    pub max_grade: u8,
    pub k: usize,
    pub click_model: ClickModel,
}

impl OracleInstance {
    pub fn n_docs(&self) -> usize {
        self.scores.len()
    }

    fn validate(&self) -> Result<(), OracleError> {
        let n = self.n_docs();
        if n > MAX_DOCS || self.k == 0 || self.k > n {
            return Err(OracleError::TooLarge {
                n_docs: n,
                k: self.k,
            });
        }
        if self.grades.len() != n {
            return Err(OracleError::Malformed(
                "one grade per score required".into(),
            ));
        }
        if self.max_grade != 2 && self.max_grade != 4 {
            return Err(OracleError::Malformed("max_grade must be 2 or 4".into()));
        }
        if self.grades.iter().any(|&g| g > self.max_grade) {
            return Err(OracleError::Malformed("grade above max_grade".into()));
        }
        if self.scores.iter().any(|s| !s.is_finite()) {
            return Err(OracleError::Malformed("scores must be finite".into()));
        }
        Ok(())
    }

    fn displayed_grades(&self, ranking: &[usize]) -> Vec<u8> {
        ranking.iter().map(|&d| self.grades[d]).collect()
    }
}

/// Whether a cascade model satisfies the user assumptions on this grade
/// scale: click probability strictly increasing in grade and stop
/// probability non-decreasing.
pub fn is_admissible(model: &ClickModel, max_grade: u8) -> bool {
    let columns: Vec<usize> = (0..=max_grade)
        .map(|g| grade_to_column(g, max_grade))
        .collect();
    columns.windows(2).all(|w| {
        model.click_prob[w[0]] < model.click_prob[w[1]]
            && model.stop_prob[w[0]] <= model.stop_prob[w[1]]
    })
}

/// Antisymmetric pair coefficients, `alpha(k, l) == -alpha(l, k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairCoefficients {
    pub n_docs: usize,
    /// Row-major `n_docs x n_docs`.
    pub alpha: Vec<f64>,
}

impl PairCoefficients {
    pub fn zeros(n_docs: usize) -> Self {
        PairCoefficients {
            n_docs,
            alpha: vec![0.0; n_docs * n_docs],
        }
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.alpha[k * self.n_docs + l]
    }

    fn add(&mut self, preferred: usize, dominated: usize, weight: f64) {
        self.alpha[preferred * self.n_docs + dominated] += weight;
        self.alpha[dominated * self.n_docs + preferred] -= weight;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.alpha
            .chunks(self.n_docs.max(1))
            .map(<[f64]>::to_vec)
            .collect()
    }

    /// Largest absolute coefficient difference.
    pub fn max_abs_diff(&self, other: &PairCoefficients) -> f64 {
        self.alpha
            .iter()
            .zip(&other.alpha)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Exact coefficients plus the internal consistency measurements of the
/// enumeration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Enumeration {
    pub coefficients: PairCoefficients,
    /// Total probability of all enumerated rankings; 1 up to rounding.
    pub ranking_mass: f64,
    /// Worst deviation from 1 of the click-vector probabilities of a ranking.
    pub max_click_mass_error: f64,
    /// Worst relative gap between `P(R) rho(R)` and `P(R*) rho(R*)`.
    pub max_omega_rel_error: f64,
}

/// All ordered selections of `k` distinct documents out of `n`.
pub fn prefix_rankings(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn extend(prefix: &mut Vec<usize>, n: usize, k: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == k {
            out.push(prefix.clone());
            return;
        }
        for d in 0..n {
            if !prefix.contains(&d) {
                prefix.push(d);
                extend(prefix, n, k, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::with_capacity(k), n, k, &mut out);
    out
}

fn click_vectors(len: usize) -> impl Iterator<Item = ClickRealization> {
    (0..1u32 << len)
        .map(move |bits| ClickRealization::new((0..len).map(|i| bits >> i & 1 == 1).collect()))
}

/// Exact expected pair coefficients of the PDGD update.
pub fn enumerate_expected_gradient(
    instance: &OracleInstance,
) -> Result<PairCoefficients, OracleError> {
    enumerate_with_diagnostics(instance).map(|e| e.coefficients)
}

pub fn enumerate_with_diagnostics(instance: &OracleInstance) -> Result<Enumeration, OracleError> {
    instance.validate()?;
    let scores = &instance.scores;
    let mut coefficients = PairCoefficients::zeros(instance.n_docs());
    let mut ranking_mass = 0.0;
    let mut max_click_mass_error: f64 = 0.0;
    let mut max_omega_rel_error: f64 = 0.0;

    for order in prefix_rankings(instance.n_docs(), instance.k) {
        let p_ranking = log_ranking_probability(scores, &order).exp();
        ranking_mass += p_ranking;
        let ranking = RankedList::new(order, scores.clone());
        let grades = instance.displayed_grades(&ranking.doc_indices);

        let mut click_mass = 0.0;
        for clicks in click_vectors(instance.k) {
            let p_clicks =
                instance
                    .click_model
                    .click_vector_probability(&grades, instance.max_grade, &clicks);
            click_mass += p_clicks;
            if p_clicks == 0.0 {
                continue;
            }
            for pair in infer_preferences(&ranking, &clicks) {
                let rho = pair_weight_rho(scores, &ranking, pair);
                let scale = pair_gradient_scale(scores[pair.preferred], scores[pair.dominated]);
                coefficients.add(
                    pair.preferred,
                    pair.dominated,
                    p_ranking * p_clicks * rho * scale,
                );

                let swapped = reverse_pair(&ranking, pair.preferred, pair.dominated);
                let omega = p_ranking * rho;
                let omega_swapped = log_ranking_probability(scores, &swapped.doc_indices).exp()
                    * pair_weight_rho(scores, &swapped, pair);
                let rel = (omega - omega_swapped).abs() / omega.abs().max(omega_swapped.abs());
                max_omega_rel_error = max_omega_rel_error.max(rel);
            }
        }
        max_click_mass_error = max_click_mass_error.max((click_mass - 1.0).abs());
    }

    Ok(Enumeration {
        coefficients,
        ranking_mass,
        max_click_mass_error,
        max_omega_rel_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub coefficients: PairCoefficients,
    /// Standard error of each coefficient, same layout.
    pub standard_errors: Vec<f64>,
    pub samples: usize,
}

impl MonteCarloEstimate {
    pub fn standard_error(&self, k: usize, l: usize) -> f64 {
        self.standard_errors[k * self.coefficients.n_docs + l]
    }
}

/// Averages the per-impression pair weights over sampled rankings and
/// simulated clicks.
///
/// # Panics
///
/// If `samples` is zero or the instance is invalid.
pub fn empirical_expected_gradient<R: Rng + ?Sized>(
    instance: &OracleInstance,
    samples: usize,
    rng: &mut R,
) -> MonteCarloEstimate {
    assert!(samples >= 1, "need at least one sample");
    if let Err(e) = instance.validate() {
        panic!("{e}");
    }
    let n = instance.n_docs();
    let mut sum = vec![0.0; n * n];
    let mut sum_sq = vec![0.0; n * n];
    let mut current = PairCoefficients::zeros(n);
    let mut touched = Vec::new();
    for _ in 0..samples {
        let ranking = sample_ranking(&instance.scores, instance.k, rng);
        let grades = instance.displayed_grades(&ranking.doc_indices);
        let clicks = instance
            .click_model
            .simulate(&grades, instance.max_grade, rng);
        for pair in infer_preferences(&ranking, &clicks) {
            let rho = pair_weight_rho(&instance.scores, &ranking, pair);
            let scale = pair_gradient_scale(
                instance.scores[pair.preferred],
                instance.scores[pair.dominated],
            );
            current.add(pair.preferred, pair.dominated, rho * scale);
            touched.push(pair.preferred * n + pair.dominated);
            touched.push(pair.dominated * n + pair.preferred);
        }
        // Only the touched cells are non-zero for this sample.
        touched.sort_unstable();
        touched.dedup();
        for &cell in &touched {
            let v = current.alpha[cell];
            sum[cell] += v;
            sum_sq[cell] += v * v;
            current.alpha[cell] = 0.0;
        }
        touched.clear();
    }
    let count = samples as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / count).collect();
    let standard_errors = sum_sq
        .iter()
        .zip(&mean)
        .map(|(sq, m)| {
            if samples < 2 {
                return f64::INFINITY;
            }
            let var = (sq / count - m * m).max(0.0) * count / (count - 1.0);
            (var / count).sqrt()
        })
        .collect();
    MonteCarloEstimate {
        coefficients: PairCoefficients {
            n_docs: n,
            alpha: mean,
        },
        standard_errors,
        samples,
    }
}

/// Tolerance below which an equal-grade coefficient counts as zero.
pub const ZERO_TOLERANCE: f64 = 1e-12;

/// Checks the sign pattern of `coefficients` against the instance grades.
/// Returns the offending ordered pairs.
pub fn sign_violations(
    instance: &OracleInstance,
    coefficients: &PairCoefficients,
) -> Vec<(usize, usize)> {
    let n = instance.n_docs();
    let mut bad = Vec::new();
    for k in 0..n {
        for l in 0..n {
            if k == l {
                continue;
            }
            let a = coefficients.get(k, l);
            let (gk, gl) = (instance.grades[k], instance.grades[l]);
            let ok = match gk.cmp(&gl) {
                std::cmp::Ordering::Equal => a.abs() <= ZERO_TOLERANCE,
                std::cmp::Ordering::Greater => a > 0.0,
                std::cmp::Ordering::Less => a < 0.0,
            };
            if !ok {
                bad.push((k, l));
            }
        }
    }
    bad
}

/// A random admissible cascade model: strictly increasing click
/// probabilities and non-decreasing stop probabilities over five columns.
pub fn random_admissible_model<R: Rng + ?Sized>(rng: &mut R) -> ClickModel {
    let mut click: [f64; 5] = std::array::from_fn(|_| rng.random::<f64>());
    let mut stop: [f64; 5] = std::array::from_fn(|_| rng.random::<f64>());
    click.sort_by(f64::total_cmp);
    stop.sort_by(f64::total_cmp);
    // Occasionally pin the extremes the built-in tables use.
    if rng.random_bool(0.3) {
        click[0] = 0.0;
    }
    if rng.random_bool(0.3) {
        stop = [0.0; 5];
    }
    // Ties in the draws have probability zero, but keep the order strict anyway.
    for i in 1..5 {
        if click[i] <= click[i - 1] {
            click[i] = (click[i - 1] + 1e-3).min(1.0);
        }
    }
    ClickModel::new("random", click, stop).expect("probabilities lie in [0, 1]")
}

/// Generates oracle instances with 2 to 4 documents and `k >= 2`, cycling through the
/// three built-in click models and random admissible ones.
pub fn generate_instances(count: usize, seed: u64) -> Vec<OracleInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let n_docs = rng.random_range(2..=4);
            // A single displayed slot never yields a clicked/unclicked pair.
            let k = if n_docs == 2 || rng.random_bool(0.75) {
                n_docs
            } else {
                rng.random_range(2..n_docs)
            };
            let max_grade = if rng.random_bool(0.5) { 2 } else { 4 };
            let grades = (0..n_docs)
                .map(|_| rng.random_range(0..=max_grade))
                .collect();
            let scores = (0..n_docs).map(|_| rng.random_range(-2.0..2.0)).collect();
            let click_model = match i % 4 {
                0 => ClickModel::perfect(),
                1 => ClickModel::navigational(),
                2 => ClickModel::informational(),
                _ => random_admissible_model(&mut rng),
            };
            OracleInstance {
                scores,
                grades,
                max_grade,
                k,
                click_model,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub instances: usize,
    pub samples: usize,
    pub seed: u64,
    /// Allowed Monte-Carlo deviation per coefficient.
    pub mc_tolerance: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            instances: 24,
            samples: 1_000_000,
            seed: 2018,
            mc_tolerance: 0.005,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceReport {
    pub instance: OracleInstance,
    pub admissible: bool,
    pub alpha: Vec<Vec<f64>>,
    pub monte_carlo_alpha: Vec<Vec<f64>>,
    pub max_monte_carlo_error: f64,
    pub ranking_mass: f64,
    pub max_click_mass_error: f64,
    pub max_omega_rel_error: f64,
    pub sign_violations: Vec<(usize, usize)>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub config: VerifyConfig,
    pub instances: Vec<InstanceReport>,
    pub passed: bool,
}

pub fn check_instance(
    instance: &OracleInstance,
    samples: usize,
    seed: u64,
    mc_tolerance: f64,
) -> Result<InstanceReport, OracleError> {
    let exact = enumerate_with_diagnostics(instance)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let estimate = empirical_expected_gradient(instance, samples, &mut rng);
    let max_monte_carlo_error = exact.coefficients.max_abs_diff(&estimate.coefficients);
    let violations = sign_violations(instance, &exact.coefficients);
    let admissible = is_admissible(&instance.click_model, instance.max_grade);
    let passed = admissible
        && violations.is_empty()
        && max_monte_carlo_error <= mc_tolerance
        && (exact.ranking_mass - 1.0).abs() <= 1e-9
        && exact.max_click_mass_error <= 1e-9
        && exact.max_omega_rel_error <= 1e-9;
    Ok(InstanceReport {
        instance: instance.clone(),
        admissible,
        alpha: exact.coefficients.rows(),
        monte_carlo_alpha: estimate.coefficients.rows(),
        max_monte_carlo_error,
        ranking_mass: exact.ranking_mass,
        max_click_mass_error: exact.max_click_mass_error,
        max_omega_rel_error: exact.max_omega_rel_error,
        sign_violations: violations,
        passed,
    })
}

/// Runs the enumeration and Monte-Carlo checks on generated instances.
/// Instances are checked in parallel; results keep generation order.
pub fn verify_theorem(config: &VerifyConfig) -> Result<TheoremReport, OracleError> {
    let instances = generate_instances(config.instances, config.seed);
    let reports = instances
        .par_iter()
        .enumerate()
        .map(|(i, inst)| {
            check_instance(
                inst,
                config.samples,
                config.seed.wrapping_add(1 + i as u64),
                config.mc_tolerance,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let passed = reports.iter().all(|r| r.passed);
    Ok(TheoremReport {
        config: *config,
        instances: reports,
        passed,
    })
}
