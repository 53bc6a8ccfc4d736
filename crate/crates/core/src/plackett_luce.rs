//! Plackett-Luce ranking distribution over document scores.
//!
//! A ranking is built by drawing a document from the softmax over the
//! remaining candidates, removing it and renormalizing. All probabilities
//! are over the displayed prefix of length `k`; undisplayed documents only
//! enter through the normalizers.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// An ordered prefix of documents shown to a user, with the scores of the
/// full candidate set that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub doc_indices: Vec<usize>,
    pub scores: Vec<f64>,
}

impl RankedList {
    pub fn new(doc_indices: Vec<usize>, scores: Vec<f64>) -> Self {
        RankedList {
            doc_indices,
            scores,
        }
    }

    pub fn len(&self) -> usize {
        self.doc_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_indices.is_empty()
    }

    pub fn position_of(&self, doc: usize) -> Option<usize> {
        self.doc_indices.iter().position(|&d| d == doc)
    }
}

/// Softmax over the scores.
///
/// # Panics
///
/// If `scores` is empty.
pub fn doc_distribution(scores: &[f64]) -> Vec<f64> {
    assert!(!scores.is_empty(), "softmax of an empty score vector");
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Samples a ranking of `min(k, scores.len())` documents without replacement.
pub fn sample_ranking<R: Rng + ?Sized>(scores: &[f64], k: usize, rng: &mut R) -> RankedList {
    let k = k.min(scores.len());
    let mut available = vec![true; scores.len()];
    let mut ranking = Vec::with_capacity(k);
    for _ in 0..k {
        let max = max_available(scores, &available);
        let total: f64 = weights(scores, &available, max).map(|(_, w)| w).sum();
        let mut target = rng.random::<f64>() * total;
        let mut chosen = None;
        for (i, w) in weights(scores, &available, max) {
            chosen = Some(i);
            if target < w {
                break;
            }
            target -= w;
        }
        // Falling off the end only happens through rounding; keep the last one.
        let chosen = chosen.expect("k never exceeds the candidate count");
        available[chosen] = false;
        ranking.push(chosen);
    }
    RankedList::new(ranking, scores.to_vec())
}

fn max_available(scores: &[f64], available: &[bool]) -> f64 {
    scores
        .iter()
        .zip(available)
        .filter(|(_, &a)| a)
        .map(|(&s, _)| s)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn weights<'a>(
    scores: &'a [f64],
    available: &'a [bool],
    max: f64,
) -> impl Iterator<Item = (usize, f64)> + 'a {
    scores
        .iter()
        .enumerate()
        .filter(move |(i, _)| available[*i])
        .map(move |(i, &s)| (i, (s - max).exp()))
}

/// Log-probability of drawing `ranking` as the first `ranking.len()`
/// placements.
///
/// # Panics
///
/// If `ranking` repeats a document or names one outside `scores`.
pub fn log_ranking_probability(scores: &[f64], ranking: &[usize]) -> f64 {
    let n = scores.len();
    let mut available = vec![true; n];
    let mut log_p = 0.0;
    for &d in ranking {
        assert!(d < n, "document {d} outside the candidate set of {n}");
        assert!(available[d], "document {d} appears twice in the ranking");
        let max = max_available(scores, &available);
        let total: f64 = weights(scores, &available, max).map(|(_, w)| w).sum();
        log_p += scores[d] - max - total.ln();
        available[d] = false;
    }
    log_p
}

/// The ranking with the positions of `a` and `b` exchanged.
///
/// # Panics
///
/// If either document is not in the displayed list.
pub fn reverse_pair(ranking: &RankedList, a: usize, b: usize) -> RankedList {
    let pa = ranking
        .position_of(a)
        .unwrap_or_else(|| panic!("document {a} is not displayed"));
    let pb = ranking
        .position_of(b)
        .unwrap_or_else(|| panic!("document {b} is not displayed"));
    let mut swapped = ranking.clone();
    swapped.doc_indices.swap(pa, pb);
    swapped
}
