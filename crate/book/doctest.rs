// mdbook cannot test listings that depend on a library crate, so every
// chapter is pulled in as a module doc and `cargo test --doc` runs them.
// One module per chapter keeps failures traceable to their file.

#[doc = include_str!("src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("src/datasets.md")]
pub mod datasets {}
#[doc = include_str!("src/plackett_luce.md")]
pub mod plackett_luce {}
#[doc = include_str!("src/click_models.md")]
pub mod click_models {}
#[doc = include_str!("src/pdgd.md")]
pub mod pdgd {}
#[doc = include_str!("src/unbiasedness.md")]
pub mod unbiasedness {}
#[doc = include_str!("src/baselines.md")]
pub mod baselines {}
#[doc = include_str!("src/metrics.md")]
pub mod metrics {}
#[doc = include_str!("src/experiments.md")]
pub mod experiments {}
#[doc = include_str!("../README.md")]
pub mod readme {}
