//! Cascade click model users.
//!
//! The simulated user scans the displayed list top to bottom. At each
//! document they click with a probability that depends on its relevance
//! grade, and after a click they stop scanning with another grade-dependent
//! probability. Probabilities are tabulated over five grade columns; datasets
//! with three grades are stretched onto the columns `{0, 2, 4}`.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const COLUMNS: usize = 5;

#[derive(Debug, Error)]
pub enum ClickModelError {
    #[error("unknown click model `{0}` (expected perfect, navigational or informational)")]
    UnknownName(String),
    #[error("click model probability {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("click model file must hold 10 probabilities, found {0}")]
    WrongLength(usize),
    #[error("cannot read click model file: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse click model file: {0}")]
    Json(#[from] serde_json::Error),
}

/// Boolean clicks aligned with a displayed ranking.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClickRealization {
    pub clicked: Vec<bool>,
}

impl ClickRealization {
    pub fn new(clicked: Vec<bool>) -> Self {
        ClickRealization { clicked }
    }

    pub fn none(len: usize) -> Self {
        ClickRealization {
            clicked: vec![false; len],
        }
    }

    pub fn len(&self) -> usize {
        self.clicked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clicked.is_empty()
    }

    pub fn count(&self) -> usize {
        self.clicked.iter().filter(|&&c| c).count()
    }

    pub fn last_click(&self) -> Option<usize> {
        self.clicked.iter().rposition(|&c| c)
    }
}

/// Click and stop probabilities per grade column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClickModel {
    pub name: String,
    pub click_prob: [f64; COLUMNS],
    pub stop_prob: [f64; COLUMNS],
}

impl ClickModel {
    pub fn new(
        name: &str,
        click_prob: [f64; COLUMNS],
        stop_prob: [f64; COLUMNS],
    ) -> Result<Self, ClickModelError> {
        for &p in click_prob.iter().chain(&stop_prob) {
            if !(0.0..=1.0).contains(&p) {
                return Err(ClickModelError::OutOfRange(p));
            }
        }
        Ok(ClickModel {
            name: name.to_string(),
            click_prob,
            stop_prob,
        })
    }

    /// Clicks every relevant document with grade-scaled probability, never stops.
    pub fn perfect() -> Self {
        ClickModel {
            name: "perfect".into(),
            click_prob: [0.0, 0.2, 0.4, 0.8, 1.0],
            stop_prob: [0.0; COLUMNS],
        }
    }

    pub fn navigational() -> Self {
        ClickModel {
            name: "navigational".into(),
            click_prob: [0.05, 0.3, 0.5, 0.7, 0.95],
            stop_prob: [0.2, 0.3, 0.5, 0.7, 0.9],
        }
    }

    pub fn informational() -> Self {
        ClickModel {
            name: "informational".into(),
            click_prob: [0.4, 0.6, 0.7, 0.8, 0.9],
            stop_prob: [0.1, 0.2, 0.3, 0.4, 0.5],
        }
    }

    pub fn by_name(name: &str) -> Result<Self, ClickModelError> {
        match name.to_ascii_lowercase().as_str() {
            "perfect" | "perf" => Ok(Self::perfect()),
            "navigational" | "nav" => Ok(Self::navigational()),
            "informational" | "inf" => Ok(Self::informational()),
            _ => Err(ClickModelError::UnknownName(name.to_string())),
        }
    }

    /// Reads a custom table from JSON: either a flat array of ten numbers
    /// (five click probabilities then five stop probabilities) or an object
    /// with `click_prob` and `stop_prob` arrays.
    pub fn from_json(name: &str, text: &str) -> Result<Self, ClickModelError> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Table {
            Flat(Vec<f64>),
            Split {
                click_prob: Vec<f64>,
                stop_prob: Vec<f64>,
            },
        }
        let values: Vec<f64> = match serde_json::from_str(text)? {
            Table::Flat(v) => v,
            Table::Split {
                mut click_prob,
                stop_prob,
            } => {
                click_prob.extend(stop_prob);
                click_prob
            }
        };
        if values.len() != 2 * COLUMNS {
            return Err(ClickModelError::WrongLength(values.len()));
        }
        let mut click = [0.0; COLUMNS];
        let mut stop = [0.0; COLUMNS];
        click.copy_from_slice(&values[..COLUMNS]);
        stop.copy_from_slice(&values[COLUMNS..]);
        Self::new(name, click, stop)
    }

    pub fn from_file(path: &Path) -> Result<Self, ClickModelError> {
        let text = std::fs::read_to_string(path)?;
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("custom");
        Self::from_json(name, &text)
    }

    pub fn click_probability(&self, grade: u8, max_grade: u8) -> f64 {
        self.click_prob[grade_to_column(grade, max_grade)]
    }

    pub fn stop_probability(&self, grade: u8, max_grade: u8) -> f64 {
        self.stop_prob[grade_to_column(grade, max_grade)]
    }

    /// Simulates one user scanning documents with the given grades, in
    /// displayed order.
    pub fn simulate<R: Rng + ?Sized>(
        &self,
        displayed_grades: &[u8],
        max_grade: u8,
        rng: &mut R,
    ) -> ClickRealization {
        let mut clicks = ClickRealization::none(displayed_grades.len());
        for (pos, &grade) in displayed_grades.iter().enumerate() {
            let column = grade_to_column(grade, max_grade);
            if rng.random::<f64>() < self.click_prob[column] {
                clicks.clicked[pos] = true;
                if rng.random::<f64>() < self.stop_prob[column] {
                    break;
                }
            }
        }
        clicks
    }

    /// Exact probability that [`simulate`](Self::simulate) yields `clicks`.
    pub fn click_vector_probability(
        &self,
        displayed_grades: &[u8],
        max_grade: u8,
        clicks: &ClickRealization,
    ) -> f64 {
        assert_eq!(displayed_grades.len(), clicks.len(), "clicks misaligned");
        let click_p = |pos: usize| self.click_probability(displayed_grades[pos], max_grade);
        let stop_p = |pos: usize| self.stop_probability(displayed_grades[pos], max_grade);
        let skip_rest = |from: usize| -> f64 {
            (from..displayed_grades.len())
                .map(|p| 1.0 - click_p(p))
                .product()
        };
        let Some(last) = clicks.last_click() else {
            return skip_rest(0);
        };
        let mut p = 1.0;
        for pos in 0..last {
            p *= if clicks.clicked[pos] {
                click_p(pos) * (1.0 - stop_p(pos))
            } else {
                1.0 - click_p(pos)
            };
        }
        p * click_p(last) * (stop_p(last) + (1.0 - stop_p(last)) * skip_rest(last + 1))
    }
}

/// Maps a relevance grade onto one of the five probability columns.
///
/// Five-grade datasets map to themselves; three-grade datasets are stretched
/// so that `0 -> 0`, `1 -> 2`, `2 -> 4`.
///
/// # Panics
///
/// If `max_grade` is not 2 or 4, or `grade > max_grade`.
pub fn grade_to_column(grade: u8, max_grade: u8) -> usize {
    assert!(
        grade <= max_grade,
        "grade {grade} exceeds maximum grade {max_grade}"
    );
    match max_grade {
        4 => grade as usize,
        2 => 2 * grade as usize,
        _ => panic!("unsupported maximum grade {max_grade}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn column_mapping() {
        assert_eq!(grade_to_column(3, 4), 3);
        assert_eq!(grade_to_column(1, 2), 2);
        assert_eq!(grade_to_column(2, 2), 4);
        assert_eq!(grade_to_column(0, 2), 0);
    }

    #[test]
    #[should_panic(expected = "exceeds")]
    fn column_mapping_rejects_large_grades() {
        grade_to_column(3, 2);
    }

    #[test]
    fn perfect_user_only_clicks_relevant() {
        let model = ClickModel::perfect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut first = 0;
        for _ in 0..2000 {
            let c = model.simulate(&[2, 0, 4], 4, &mut rng);
            assert!(!c.clicked[1]);
            assert!(c.clicked[2], "grade 4 is clicked with probability 1");
            first += usize::from(c.clicked[0]);
        }
        assert!((first as f64 / 2000.0 - 0.4).abs() < 0.04);
        for _ in 0..100 {
            assert_eq!(model.simulate(&[0, 0, 0, 0], 4, &mut rng).count(), 0);
        }
    }

    #[test]
    fn navigational_stop_after_top_click() {
        let model = ClickModel::navigational();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        // After a top click the user continues with 1 - 0.9, then clicks the
        // second grade-4 document with 0.95.
        let n = 100_000;
        let mut top = 0usize;
        let mut continued = 0usize;
        for _ in 0..n {
            let c = model.simulate(&[4, 4], 4, &mut rng);
            if c.clicked[0] {
                top += 1;
                continued += usize::from(c.clicked[1]);
            }
        }
        let rate = continued as f64 / top as f64;
        assert!((rate - 0.1 * 0.95).abs() < 0.005, "{rate}");
    }

    #[test]
    fn two_document_frequencies_match_closed_form() {
        let model = ClickModel::informational();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let grades = [2u8, 1];
        let n = 100_000;
        let mut counts = [0usize; 2];
        for _ in 0..n {
            let c = model.simulate(&grades, 2, &mut rng);
            counts[0] += usize::from(c.clicked[0]);
            counts[1] += usize::from(c.clicked[1]);
        }
        let (c1, s1) = (model.click_prob[4], model.stop_prob[4]);
        let c2 = model.click_prob[2];
        assert!((counts[0] as f64 / n as f64 - c1).abs() <= 0.01);
        assert!((counts[1] as f64 / n as f64 - c2 * (1.0 - c1 * s1)).abs() <= 0.01);
    }

    #[test]
    fn parses_custom_tables() {
        let flat = ClickModel::from_json("x", "[0,0.1,0.2,0.3,0.4,0,0,0,0,0.5]").unwrap();
        assert_eq!(flat.click_prob[4], 0.4);
        assert_eq!(flat.stop_prob[4], 0.5);
        let split = ClickModel::from_json(
            "y",
            r#"{"click_prob":[0,0.2,0.4,0.8,1],"stop_prob":[0,0,0,0,0]}"#,
        )
        .unwrap();
        assert_eq!(split.click_prob, ClickModel::perfect().click_prob);
        assert!(matches!(
            ClickModel::from_json("z", "[1,2]"),
            Err(ClickModelError::WrongLength(2))
        ));
        assert!(matches!(
            ClickModel::from_json("z", "[0,0,0,0,2,0,0,0,0,0]"),
            Err(ClickModelError::OutOfRange(_))
        ));
        assert!(ClickModel::by_name("nope").is_err());
    }

    fn all_vectors(len: usize) -> Vec<ClickRealization> {
        (0..1u32 << len)
            .map(|bits| ClickRealization::new((0..len).map(|i| bits >> i & 1 == 1).collect()))
            .collect()
    }

    #[test]
    fn click_vector_probabilities_sum_to_one() {
        for model in [
            ClickModel::perfect(),
            ClickModel::navigational(),
            ClickModel::informational(),
        ] {
            let grades = [0u8, 3, 1, 4, 2];
            let total: f64 = all_vectors(5)
                .iter()
                .map(|c| model.click_vector_probability(&grades, 4, c))
                .sum();
            assert!((total - 1.0).abs() < 1e-12, "{} {total}", model.name);
        }
    }

    #[test]
    fn exact_probabilities_match_simulation() {
        let model = ClickModel::navigational();
        let grades = [1u8, 2, 0];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 200_000;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..n {
            *counts
                .entry(model.simulate(&grades, 2, &mut rng))
                .or_insert(0usize) += 1;
        }
        for c in all_vectors(3) {
            let expected = model.click_vector_probability(&grades, 2, &c);
            let observed = *counts.get(&c).unwrap_or(&0) as f64 / n as f64;
            assert!((expected - observed).abs() < 0.005, "{c:?}");
        }
    }

    proptest! {
        #[test]
        fn nothing_clicked_after_stop(
            grades in prop::collection::vec(0u8..=4, 1..10),
            seed in any::<u64>(),
        ) {
            // With certain stops, only the first click can occur.
            let model = ClickModel::new("stop", [0.5; 5], [1.0; 5]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = model.simulate(&grades, 4, &mut rng);
            prop_assert!(c.count() <= 1);
        }

        #[test]
        fn perfect_clicks_imply_relevance(
            grades in prop::collection::vec(0u8..=2, 1..10),
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = ClickModel::perfect().simulate(&grades, 2, &mut rng);
            for (clicked, g) in c.clicked.iter().zip(&grades) {
                prop_assert!(!clicked || *g > 0);
            }
        }
    }
}
