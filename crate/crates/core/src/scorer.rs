//! Differentiable document scorers.
//!
//! Both architectures keep their weights in one flat [`Parameters`] vector so
//! the optimizers never need to know which model they are updating. The
//! neural layout is
//!
//! ```text
//! [ W (hidden x feature_dim, row-major) | b (hidden) | v (hidden) ]
//! score(d) = v . sigmoid(W d + b)
//! ```
//!
//! There is no output bias: a constant shift of every score changes no
//! ranking and no softmax.

use std::io::{Read, Write};
use std::ops::{Deref, DerefMut};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Flat model weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Parameters(pub Vec<f64>);

impl Parameters {
    pub fn zeros(len: usize) -> Self {
        Parameters(vec![0.0; len])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `self + step * direction`, elementwise.
    ///
    /// # Panics
    ///
    /// If the two vectors differ in length.
    pub fn apply_update(&self, direction: &Parameters, step: f64) -> Parameters {
        let mut out = self.clone();
        out.step_in_place(direction, step);
        out
    }

    pub fn step_in_place(&mut self, direction: &Parameters, step: f64) {
        assert_eq!(
            self.len(),
            direction.len(),
            "parameter and gradient lengths differ"
        );
        for (p, g) in self.0.iter_mut().zip(&direction.0) {
            *p += step * g;
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("f64 vectors always serialize")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// Little-endian `f64`s with no header.
    pub fn write_binary<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for v in &self.0 {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> std::io::Result<Self> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        if bytes.len() % 8 != 0 {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                "parameter file length is not a multiple of 8 bytes",
            ));
        }
        Ok(Parameters(
            bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ))
    }
}

impl Deref for Parameters {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Parameters {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Parameters {
    fn from(v: Vec<f64>) -> Self {
        Parameters(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum ScorerKind {
    Linear,
    Neural { hidden_units: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    Zeros,
    Xavier,
}

/// Architecture and initialization of a scorer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScorerSpec {
    #[serde(flatten)]
    pub kind: ScorerKind,
    pub feature_dim: usize,
    pub init: Init,
}

pub const DEFAULT_HIDDEN_UNITS: usize = 64;

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl ScorerSpec {
    /// Zero-initialized linear model.
    pub fn linear(feature_dim: usize) -> Self {
        ScorerSpec {
            kind: ScorerKind::Linear,
            feature_dim,
            init: Init::Zeros,
        }
    }

    /// Xavier-initialized sigmoid network with one hidden layer.
    pub fn neural(feature_dim: usize, hidden_units: usize) -> Self {
        ScorerSpec {
            kind: ScorerKind::Neural { hidden_units },
            feature_dim,
            init: Init::Xavier,
        }
    }

    pub fn param_len(&self) -> usize {
        match self.kind {
            ScorerKind::Linear => self.feature_dim,
            ScorerKind::Neural { hidden_units } => (self.feature_dim + 2) * hidden_units,
        }
    }

    fn check(&self, params: &[f64], features: &[f64]) {
        assert_eq!(params.len(), self.param_len(), "parameter length mismatch");
        assert_eq!(
            features.len(),
            self.feature_dim,
            "feature dimension mismatch"
        );
    }

    pub fn score(&self, params: &[f64], features: &[f64]) -> f64 {
        self.check(params, features);
        match self.kind {
            ScorerKind::Linear => dot(params, features),
            ScorerKind::Neural { hidden_units } => {
                let dim = self.feature_dim;
                let (weights, rest) = params.split_at(hidden_units * dim);
                let (bias, out) = rest.split_at(hidden_units);
                weights
                    .chunks_exact(dim)
                    .zip(bias)
                    .zip(out)
                    .map(|((row, b), v)| v * sigmoid(dot(row, features) + b))
                    .sum()
            }
        }
    }

    /// Scores every document of a query.
    pub fn score_all<'a, I>(&self, params: &[f64], docs: I) -> Vec<f64>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        docs.into_iter().map(|d| self.score(params, d)).collect()
    }

    /// `d score / d params`, aligned with the parameter layout.
    pub fn score_gradient(&self, params: &[f64], features: &[f64]) -> Parameters {
        let mut grad = Parameters::zeros(self.param_len());
        self.add_score_gradient(params, features, 1.0, &mut grad);
        grad
    }

    /// Adds `scale * d score / d params` into `acc` without allocating.
    pub fn add_score_gradient(
        &self,
        params: &[f64],
        features: &[f64],
        scale: f64,
        acc: &mut [f64],
    ) {
        self.check(params, features);
        assert_eq!(acc.len(), params.len(), "accumulator length mismatch");
        match self.kind {
            ScorerKind::Linear => {
                for (a, x) in acc.iter_mut().zip(features) {
                    *a += scale * x;
                }
            }
            ScorerKind::Neural { hidden_units } => {
                let dim = self.feature_dim;
                let (weights, rest) = params.split_at(hidden_units * dim);
                let (bias, out) = rest.split_at(hidden_units);
                let (acc_w, acc_rest) = acc.split_at_mut(hidden_units * dim);
                let (acc_b, acc_v) = acc_rest.split_at_mut(hidden_units);
                for j in 0..hidden_units {
                    let row = &weights[j * dim..(j + 1) * dim];
                    let h = sigmoid(dot(row, features) + bias[j]);
                    acc_v[j] += scale * h;
                    let delta = scale * out[j] * h * (1.0 - h);
                    acc_b[j] += delta;
                    for (a, x) in acc_w[j * dim..(j + 1) * dim].iter_mut().zip(features) {
                        *a += delta * x;
                    }
                }
            }
        }
    }

    /// Initial weights; deterministic in `seed`.
    ///
    /// Xavier draws each weight layer uniformly from
    /// `±sqrt(6 / (fan_in + fan_out))`; biases start at zero.
    pub fn initialize(&self, seed: u64) -> Parameters {
        let mut params = Parameters::zeros(self.param_len());
        if self.init == Init::Zeros {
            return params;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self.kind {
            ScorerKind::Linear => {
                let bound = xavier_bound(self.feature_dim, 1);
                params
                    .iter_mut()
                    .for_each(|w| *w = rng.random_range(-bound..=bound));
            }
            ScorerKind::Neural { hidden_units } => {
                let n_hidden = hidden_units * self.feature_dim;
                let hidden_bound = xavier_bound(self.feature_dim, hidden_units);
                for w in &mut params[..n_hidden] {
                    *w = rng.random_range(-hidden_bound..=hidden_bound);
                }
                let out_bound = xavier_bound(hidden_units, 1);
                for w in &mut params[n_hidden + hidden_units..] {
                    *w = rng.random_range(-out_bound..=out_bound);
                }
            }
        }
        params
    }
}

pub fn xavier_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
