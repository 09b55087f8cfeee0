//! Hybrid Bayesian network structure learning (HPC skeleton discovery plus
//! constrained hill climbing) and multi-label classification built on it.
//!
//! Numeric code is generic over [`Real`]; the aliases below fix the scalar
//! to `f64`, and the `f32` module offers the single-precision variants.

pub mod bn;
pub mod citest;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod multilabel;
pub mod real;
pub mod score_search;
pub mod skeleton;
pub mod special;
pub mod synthetic;

pub use error::{Error, Result};
pub use real::Real;

pub use bn::{BayesianNetwork, Dag, Pdag};
pub use dataset::{CategoricalDataset, CsvOptions, RawTable};
pub use multilabel::{PowersetClassifier, Scenario};
pub use skeleton::Skeleton;

pub type TestConfig = citest::TestConfig<f64>;
pub type TestResult = citest::TestResult<f64>;
pub type CiTester<'a> = citest::CiTester<'a, f64>;
pub type HpcConfig = skeleton::HpcConfig<f64>;
pub type ScoreConfig = score_search::ScoreConfig<f64>;
pub type SearchResult = score_search::SearchResult<f64>;
pub type SkeletonMetrics = eval::SkeletonMetrics<f64>;
pub type HoldoutScores = eval::HoldoutScores<f64>;
pub type MlcConfig = multilabel::MlcConfig<f64>;
pub type ScenarioReport = multilabel::ScenarioReport<f64>;

pub mod f32 {
    //! Single-precision aliases.
    pub type TestConfig = crate::citest::TestConfig<f32>;
    pub type TestResult = crate::citest::TestResult<f32>;
    pub type CiTester<'a> = crate::citest::CiTester<'a, f32>;
    pub type HpcConfig = crate::skeleton::HpcConfig<f32>;
    pub type ScoreConfig = crate::score_search::ScoreConfig<f32>;
    pub type SearchResult = crate::score_search::SearchResult<f32>;
    pub type SkeletonMetrics = crate::eval::SkeletonMetrics<f32>;
    pub type HoldoutScores = crate::eval::HoldoutScores<f32>;
    pub type MlcConfig = crate::multilabel::MlcConfig<f32>;
    pub type ScenarioReport = crate::multilabel::ScenarioReport<f32>;
}
