//! The interface shared by every online ranker optimizer.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::click::{ClickModel, ClickRealization};
use crate::dataset::Query;
use crate::scorer::{Parameters, ScorerSpec};

/// What a user saw and did during one impression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Impression {
    /// Document indices into the query, in displayed order.
    pub displayed: Vec<usize>,
    pub clicks: ClickRealization,
}

/// A click model bound to the grade scale of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedUser {
    pub model: ClickModel,
    pub max_grade: u8,
}

impl SimulatedUser {
    pub fn new(model: ClickModel, max_grade: u8) -> Self {
        SimulatedUser { model, max_grade }
    }

    pub fn interact<R: rand::Rng + ?Sized>(
        &self,
        query: &Query,
        displayed: &[usize],
        rng: &mut R,
    ) -> ClickRealization {
        let grades: Vec<u8> = displayed
            .iter()
            .map(|&d| query.documents[d].relevance)
            .collect();
        self.model.simulate(&grades, self.max_grade, rng)
    }
}

/// An optimizer that owns a model and learns from one impression at a time.
pub trait OnlineLearner: Send {
    fn name(&self) -> &'static str;

    fn scorer(&self) -> &ScorerSpec;

    fn parameters(&self) -> &Parameters;

    /// Shows a list for `query` to `user` and updates the model from the
    /// resulting clicks.
    fn impression(
        &mut self,
        query: &Query,
        user: &SimulatedUser,
        rng: &mut dyn RngCore,
    ) -> Impression;
}

pub(crate) fn query_scores(spec: &ScorerSpec, params: &[f64], query: &Query) -> Vec<f64> {
    spec.score_all(
        params,
        query.documents.iter().map(|d| d.features.as_slice()),
    )
}
