//! Predictors and the evaluation protocol.
//!
//! Boosted trees, random forests and the MLP share [`TrainConfig`]; trained models are wrapped
//! in [`Model`] for prediction and serialization.

pub mod binning;
pub mod eval;
pub mod forest;
pub mod gbdt;
pub mod mlp;
pub mod tree;

use serde::{Deserialize, Serialize};

use crate::matrix::{Dataset, Matrix};
use crate::metrics::MetricsError;

pub use eval::{
    fold_assignments, kfold_grid_search, repeated_evaluate, split_train_test, CvResult, CvScore, RunAggregate,
    RunRecord, TrainTestSplit,
};
pub use forest::{gini, train_rf};
pub use gbdt::train_gbdt;
pub use mlp::{train_mlp, ColumnImputer, MlpModel};
pub use tree::{Node, Objective, Tree, TreeEnsemble};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ModelError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("label {value} at row {index} is not 0/1")]
    NonBinaryLabel { index: usize, value: u8 },
    #[error("training data is empty")]
    EmptyData,
    #[error("row width {found} does not match model width {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("missing value at row {row}, column {col} (not supported by this model)")]
    MissingValue { row: usize, col: usize },
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("model file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("degenerate split: {train} train rows, {test} test rows")]
    DegenerateSplit { train: usize, test: usize },
    #[error("fold {fold} has {size} rows")]
    FoldTooSmall { fold: usize, size: usize },
    #[error("configuration grid is empty")]
    EmptyGrid,
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Mlp,
    Rf,
    Gbdt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthPolicy {
    LevelWise,
    LeafWise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub kind: ModelKind,
    pub growth_policy: GrowthPolicy,
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: Option<usize>,
    pub num_leaves: Option<usize>,
    pub min_child_weight: f64,
    pub l2_regularization: f64,
    pub histogram_bins: usize,
    pub subsample: f64,
    pub colsample: f64,
    /// Forest only: draw a bootstrap sample per tree.
    pub bootstrap: bool,
    /// Forest only: features tried per split; `None` means `ceil(sqrt(p))`.
    pub max_features: Option<usize>,
    pub hidden_units: usize,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::gbdt_level_wise()
    }
}

impl TrainConfig {
    fn base(kind: ModelKind) -> Self {
        Self {
            kind,
            growth_policy: GrowthPolicy::LevelWise,
            n_estimators: 100,
            learning_rate: 0.1,
            max_depth: None,
            num_leaves: None,
            min_child_weight: 1.0,
            l2_regularization: 1.0,
            histogram_bins: 256,
            subsample: 1.0,
            colsample: 1.0,
            bootstrap: true,
            max_features: None,
            hidden_units: 16,
            batch_size: 32,
            max_epochs: 500,
            patience: 20,
            seed: 42,
        }
    }

    /// Depth-bounded boosting: 500 rounds, learning rate 0.15, depth 16.
    pub fn gbdt_level_wise() -> Self {
        Self { n_estimators: 500, learning_rate: 0.15, max_depth: Some(16), ..Self::base(ModelKind::Gbdt) }
    }

    /// Leaf-count-bounded boosting: 500 rounds, learning rate 0.12, 16 leaves.
    pub fn gbdt_leaf_wise() -> Self {
        Self {
            growth_policy: GrowthPolicy::LeafWise,
            n_estimators: 500,
            learning_rate: 0.12,
            num_leaves: Some(16),
            ..Self::base(ModelKind::Gbdt)
        }
    }

    /// 500 bootstrap trees of depth at most 8.
    pub fn rf() -> Self {
        Self { n_estimators: 500, learning_rate: 1.0, max_depth: Some(8), ..Self::base(ModelKind::Rf) }
    }

    /// 16 ReLU hidden units, Adam with step 1e-3, batch 32, up to 500 epochs, patience 20.
    pub fn mlp() -> Self {
        Self { learning_rate: 1e-3, ..Self::base(ModelKind::Mlp) }
    }

    /// Short identifier used in file names and reports.
    pub fn label(&self) -> &'static str {
        match (self.kind, self.growth_policy) {
            (ModelKind::Mlp, _) => "mlp",
            (ModelKind::Rf, _) => "rf",
            (ModelKind::Gbdt, GrowthPolicy::LeafWise) => "gbdt-leafwise",
            (ModelKind::Gbdt, GrowthPolicy::LevelWise) => "gbdt-levelwise",
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must lie in (0, 1]");
        }
        match self.kind {
            ModelKind::Gbdt => {
                if self.n_estimators == 0 {
                    return bad("n_estimators must be positive");
                }
                match self.growth_policy {
                    GrowthPolicy::LevelWise => {
                        if self.num_leaves.is_some() || self.max_depth.is_none_or(|d| d == 0) {
                            return bad("level_wise growth needs a positive max_depth and no num_leaves");
                        }
                    }
                    GrowthPolicy::LeafWise => {
                        if self.max_depth.is_some() || self.num_leaves.is_none_or(|l| l < 2) {
                            return bad("leaf_wise growth needs num_leaves >= 2 and no max_depth");
                        }
                    }
                }
                if self.histogram_bins < 2 {
                    return bad("histogram_bins must be at least 2");
                }
                if !(self.subsample > 0.0 && self.subsample <= 1.0) || !(self.colsample > 0.0 && self.colsample <= 1.0)
                {
                    return bad("subsample and colsample must lie in (0, 1]");
                }
                if self.l2_regularization.is_nan()
                    || self.l2_regularization < 0.0
                    || self.min_child_weight.is_nan()
                    || self.min_child_weight < 0.0
                {
                    return bad("l2_regularization and min_child_weight must be non-negative");
                }
            }
            ModelKind::Rf => {
                if self.n_estimators == 0 {
                    return bad("n_estimators must be positive");
                }
                if self.max_depth == Some(0) || self.max_features == Some(0) {
                    return bad("max_depth and max_features must be positive when set");
                }
            }
            ModelKind::Mlp => {
                if self.hidden_units == 0 || self.batch_size == 0 || self.max_epochs == 0 {
                    return bad("hidden_units, batch_size and max_epochs must be positive");
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn check_labels(y: &[u8]) -> Result<(), ModelError> {
    match y.iter().position(|&v| v > 1) {
        Some(index) => Err(ModelError::NonBinaryLabel { index, value: y[index] }),
        None => Ok(()),
    }
}

/// A trained predictor.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Trees(TreeEnsemble),
    /// The imputer fills missing inputs with training-split column means before the network.
    Mlp {
        imputer: ColumnImputer,
        net: MlpModel,
    },
}

const MLP_HEADER: &str = "legis-mlp";

impl Model {
    pub fn n_features(&self) -> usize {
        match self {
            Model::Trees(e) => e.n_features,
            Model::Mlp { net, .. } => net.n_inputs(),
        }
    }

    pub fn as_trees(&self) -> Option<&TreeEnsemble> {
        match self {
            Model::Trees(e) => Some(e),
            Model::Mlp { .. } => None,
        }
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>, ModelError> {
        match self {
            Model::Trees(e) => Ok(e.raw_outputs(x)?.into_iter().map(|r| e.link(r)).collect()),
            Model::Mlp { imputer, net } => net.predict_proba(&imputer.transform(x)?),
        }
    }

    pub fn classify(&self, x: &Matrix, threshold: f64) -> Result<Vec<u8>, ModelError> {
        Ok(self.predict_proba(x)?.into_iter().map(|p| u8::from(p >= threshold)).collect())
    }

    pub fn to_text(&self) -> String {
        match self {
            Model::Trees(e) => e.to_text(),
            Model::Mlp { imputer, net } => {
                let body = serde_json::json!({ "imputer": imputer, "net": net });
                format!("{MLP_HEADER}\nformat_version 1\n{body}\n")
            }
        }
    }

    pub fn from_text(text: &str) -> Result<Self, ModelError> {
        if !text.starts_with(MLP_HEADER) {
            return TreeEnsemble::from_text(text).map(Model::Trees);
        }
        let mut lines = text.lines();
        lines.next();
        if lines.next() != Some("format_version 1") {
            return Err(ModelError::Parse { line: 2, message: "expected format_version 1".into() });
        }
        #[derive(Deserialize)]
        struct Body {
            imputer: ColumnImputer,
            net: MlpModel,
        }
        let body: Body = serde_json::from_str(lines.next().unwrap_or(""))
            .map_err(|e| ModelError::Parse { line: 3, message: e.to_string() })?;
        Ok(Model::Mlp { imputer: body.imputer, net: body.net })
    }
}

/// Trains the model described by `config`.
pub fn train(data: &Dataset, config: &TrainConfig) -> Result<Model, ModelError> {
    match config.kind {
        ModelKind::Gbdt => train_gbdt(data, config).map(Model::Trees),
        ModelKind::Rf => train_rf(data, config).map(Model::Trees),
        ModelKind::Mlp => {
            let imputer = ColumnImputer::fit(&data.x);
            let filled = Dataset::new(imputer.transform(&data.x)?, data.y.clone());
            let net = train_mlp(&filled, config)?;
            Ok(Model::Mlp { imputer, net })
        }
    }
}
