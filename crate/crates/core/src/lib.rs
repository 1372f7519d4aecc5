//! Legislative bill analysis toolkit.
//!
//! The crate is organised as a batch pipeline:
//!
//! * [`corpus`] loads, validates and synthesises bill / legislator / constituency tables.
//! * [`llmfilter`] narrows a corpus to transportation bills through a staged
//!   completion-provider workflow (keyword, sentence and context selection).
//! * [`features`] expands bills into participation records and the 19-column feature matrix.
//! * [`models`] trains gradient-boosted trees, random forests and a small MLP, and runs the
//!   split / cross-validation / repeated-run evaluation protocol.
//! * [`attribution`] computes exact path-dependent TreeSHAP values and the downstream
//!   importance, correlation and dependence analyses.
//! * [`metrics`] holds the confusion matrix and precision / recall / F1.

pub mod attribution;
pub mod corpus;
pub mod features;
pub mod llmfilter;
pub mod matrix;
pub mod metrics;
pub mod models;
pub mod table;

pub use attribution::{DependenceSeries, ImportanceRanking, ShapCorrelationMatrix, ShapMatrix};
pub use corpus::{Bill, Constituency, Legislator};
pub use features::{LabeledMatrix, ParticipationRecord, FEATURE_NAMES, N_FEATURES};
pub use matrix::Matrix;
pub use metrics::{ConfusionMatrix, MetricsReport};
pub use models::{Model, TrainConfig, TreeEnsemble};
