//! Online learning to rank simulation.
//!
//! Learners show ranked lists to simulated users and update their models
//! from the clicks. The main learner is Pairwise Differentiable Gradient
//! Descent ([`pdgd`]); [`baselines`] holds the comparison methods and
//! [`click`] the simulated users. The [`harness`] repeats seeded runs across
//! dataset folds. [`verification`] checks by brute force that PDGD's
//! expected update ranks documents in the user's preference order.
//!
//! ```
//! use oltr::harness::{run_single, Algorithm, RunConfig};
//! use oltr::synthetic::{synthetic_dataset, SyntheticSpec};
//!
//! let data = synthetic_dataset(&SyntheticSpec::default(), 0);
//! let config = RunConfig {
//!     algorithm: Algorithm::Pdgd,
//!     click_model: "informational".into(),
//!     impressions: 500,
//!     ..RunConfig::default()
//! };
//! let run = run_single(&config, &data, 0, 7).unwrap();
//! assert_eq!(run.impressions.len(), 500);
//! assert!(run.final_offline > run.eval_points[0].offline_ndcg);
//! ```

pub mod baselines;
pub mod click;
pub mod dataset;
pub mod harness;
pub mod learner;
pub mod metrics;
pub mod pdgd;
pub mod plackett_luce;
pub mod scorer;
pub mod stats;
pub mod synthetic;
pub mod verification;
