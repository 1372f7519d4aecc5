//! Binary decision trees shared by the boosted and forest learners.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{ModelError, TrainConfig};
use crate::matrix::{is_missing, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        /// Rows with `value < threshold` go left.
        threshold: f64,
        /// Direction taken by missing values.
        default_left: bool,
        left: usize,
        right: usize,
        cover: f64,
    },
    Leaf {
        /// Raw score for boosting, positive-class frequency for forests.
        value: f64,
        cover: f64,
    },
}

impl Node {
    pub fn cover(&self) -> f64 {
        match *self {
            Node::Split { cover, .. } | Node::Leaf { cover, .. } => cover,
        }
    }
}

/// Whether a row value is routed to the left child.
#[inline]
pub fn goes_left(value: f64, threshold: f64, default_left: bool) -> bool {
    if is_missing(value) {
        default_left
    } else {
        value < threshold
    }
}

/// Arena-backed tree; the root is node 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(value: f64, cover: f64) -> Self {
        Self { nodes: vec![Node::Leaf { value, cover }] }
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }

    /// Index of the leaf reached by `row`.
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Split { feature, threshold, default_left, left, right, .. } => {
                    i = if goes_left(row[feature], threshold, default_left) { left } else { right };
                }
            }
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(row)] {
            Node::Leaf { value, .. } => value,
            Node::Split { .. } => unreachable!("leaf_index returns a leaf"),
        }
    }

    /// Cover-weighted mean leaf value.
    pub fn expected_value(&self) -> f64 {
        let root = self.root().cover();
        if root <= 0.0 {
            return 0.0;
        }
        self.nodes
            .iter()
            .map(|n| match *n {
                Node::Leaf { value, cover } => value * cover,
                Node::Split { .. } => 0.0,
            })
            .sum::<f64>()
            / root
    }

    /// Feature indices used by any split.
    pub fn used_features(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter_map(|n| match *n {
            Node::Split { feature, .. } => Some(feature),
            Node::Leaf { .. } => None,
        })
    }

    /// Recomputes internal covers bottom-up so every parent equals the sum of its children.
    pub(crate) fn sum_covers(&mut self) {
        fn go(nodes: &mut [Node], i: usize) -> f64 {
            match nodes[i] {
                Node::Leaf { cover, .. } => cover,
                Node::Split { left, right, .. } => {
                    let c = go(nodes, left) + go(nodes, right);
                    if let Node::Split { cover, .. } = &mut nodes[i] {
                        *cover = c;
                    }
                    c
                }
            }
        }
        go(&mut self.nodes, 0);
    }

    /// Checks child links and cover bookkeeping.
    pub fn validate(&self, n_features: usize) -> Result<(), ModelError> {
        if self.nodes.is_empty() {
            return Err(ModelError::InvalidModel("empty tree".into()));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if let Node::Split { feature, left, right, cover, .. } = *n {
                if feature >= n_features {
                    return Err(ModelError::InvalidModel(format!("node {i}: feature {feature} out of range")));
                }
                if left >= self.nodes.len() || right >= self.nodes.len() || left <= i || right <= i {
                    return Err(ModelError::InvalidModel(format!("node {i}: bad child links")));
                }
                if cover <= 0.0 {
                    return Err(ModelError::InvalidModel(format!("node {i}: internal node with zero cover")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    LogisticBoost,
    ClassificationForest,
}

impl Objective {
    pub fn as_str(self) -> &'static str {
        match self {
            Objective::LogisticBoost => "logistic_boost",
            Objective::ClassificationForest => "classification_forest",
        }
    }
}

/// Additive ensemble of trees.
///
/// For boosting the raw output is `base_score + Σ leaf` (leaf values already carry the
/// learning rate) and probabilities are `sigmoid(raw)`. For forests the raw output is the mean
/// positive-class frequency over trees and is itself the probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub trees: Vec<Tree>,
    pub base_score: f64,
    pub objective: Objective,
    pub learning_rate: f64,
    pub n_features: usize,
    /// Mean training loss before the first round and after each round (boosting only).
    #[serde(default)]
    pub train_loss: Vec<f64>,
    #[serde(default)]
    pub config: Option<TrainConfig>,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl TreeEnsemble {
    pub fn empty(objective: Objective, base_score: f64, n_features: usize) -> Self {
        Self {
            trees: Vec::new(),
            base_score,
            objective,
            learning_rate: 1.0,
            n_features,
            train_loss: Vec::new(),
            config: None,
        }
    }

    /// Multiplier applied to each tree's leaf values in the raw output.
    pub fn tree_scale(&self) -> f64 {
        match self.objective {
            Objective::LogisticBoost => 1.0,
            Objective::ClassificationForest => {
                if self.trees.is_empty() {
                    0.0
                } else {
                    1.0 / self.trees.len() as f64
                }
            }
        }
    }

    pub fn raw_output(&self, row: &[f64]) -> f64 {
        let scale = self.tree_scale();
        self.base_score + self.trees.iter().map(|t| t.predict(row)).sum::<f64>() * scale
    }

    pub fn link(&self, raw: f64) -> f64 {
        match self.objective {
            Objective::LogisticBoost => sigmoid(raw),
            Objective::ClassificationForest => raw,
        }
    }

    /// Expected raw output under the cover distribution.
    pub fn expected_value(&self) -> f64 {
        self.base_score + self.trees.iter().map(Tree::expected_value).sum::<f64>() * self.tree_scale()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.trees.iter().try_for_each(|t| t.validate(self.n_features))
    }

    pub fn raw_outputs(&self, x: &Matrix) -> Result<Vec<f64>, ModelError> {
        if x.n_cols() != self.n_features {
            return Err(ModelError::WidthMismatch { expected: self.n_features, found: x.n_cols() });
        }
        Ok(x.rows().map(|r| self.raw_output(r)).collect())
    }

    /// Self-describing text serialization with a preorder node list per tree.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("legis-tree-ensemble\n");
        s.push_str("format_version 1\n");
        let _ = writeln!(s, "objective {}", self.objective.as_str());
        let _ = writeln!(s, "n_features {}", self.n_features);
        let _ = writeln!(s, "base_score {}", self.base_score);
        let _ = writeln!(s, "learning_rate {}", self.learning_rate);
        if let Some(c) = &self.config {
            let _ = writeln!(s, "config {}", serde_json::to_string(c).expect("config serializes"));
        }
        let _ = writeln!(s, "trees {}", self.trees.len());
        for (t, tree) in self.trees.iter().enumerate() {
            let _ = writeln!(s, "tree {t} nodes {}", tree.nodes.len());
            write_preorder(tree, 0, &mut s);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, ModelError> {
        Parser::new(text).ensemble()
    }
}

fn write_preorder(tree: &Tree, i: usize, s: &mut String) {
    match tree.nodes[i] {
        Node::Leaf { value, cover } => {
            let _ = writeln!(s, "leaf {value} {cover}");
        }
        Node::Split { feature, threshold, default_left, left, right, cover } => {
            let dir = if default_left { "left" } else { "right" };
            let _ = writeln!(s, "split {feature} {threshold} {dir} {cover}");
            write_preorder(tree, left, s);
            write_preorder(tree, right, s);
        }
    }
}

struct Parser<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Self { lines: text.lines().enumerate().peekable() }
    }

    fn err(line: usize, message: impl Into<String>) -> ModelError {
        ModelError::Parse { line: line + 1, message: message.into() }
    }

    fn next(&mut self) -> Result<(usize, &'a str), ModelError> {
        self.lines.next().ok_or_else(|| Self::err(usize::MAX - 1, "unexpected end of input"))
    }

    fn keyed(&mut self, key: &str) -> Result<(usize, &'a str), ModelError> {
        let (n, line) = self.next()?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok((n, v.trim())),
            _ => Err(Self::err(n, format!("expected `{key}`"))),
        }
    }

    fn num<T: std::str::FromStr>(n: usize, v: &str) -> Result<T, ModelError> {
        v.parse().map_err(|_| Self::err(n, format!("bad number `{v}`")))
    }

    fn ensemble(mut self) -> Result<TreeEnsemble, ModelError> {
        let (n, magic) = self.next()?;
        if magic.trim() != "legis-tree-ensemble" {
            return Err(Self::err(n, "not a tree ensemble file"));
        }
        let (n, v) = self.keyed("format_version")?;
        if v != "1" {
            return Err(Self::err(n, format!("unsupported format version {v}")));
        }
        let (n, v) = self.keyed("objective")?;
        let objective = match v {
            "logistic_boost" => Objective::LogisticBoost,
            "classification_forest" => Objective::ClassificationForest,
            _ => return Err(Self::err(n, format!("unknown objective `{v}`"))),
        };
        let (n, v) = self.keyed("n_features")?;
        let n_features: usize = Self::num(n, v)?;
        let (n, v) = self.keyed("base_score")?;
        let base_score: f64 = Self::num(n, v)?;
        let (n, v) = self.keyed("learning_rate")?;
        let learning_rate: f64 = Self::num(n, v)?;
        let mut config = None;
        if matches!(self.lines.peek(), Some((_, l)) if l.starts_with("config ")) {
            let (n, v) = self.keyed("config")?;
            config = Some(serde_json::from_str(v).map_err(|e| Self::err(n, e.to_string()))?);
        }
        let (n, v) = self.keyed("trees")?;
        let n_trees: usize = Self::num(n, v)?;
        let mut trees = Vec::with_capacity(n_trees);
        for t in 0..n_trees {
            let (n, line) = self.next()?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                ["tree", idx, "nodes", count] if idx.parse::<usize>().ok() == Some(t) => {
                    let count: usize = Self::num(n, count)?;
                    let mut nodes = Vec::with_capacity(count);
                    self.node(&mut nodes)?;
                    if nodes.len() != count {
                        return Err(Self::err(n, format!("tree {t}: expected {count} nodes, read {}", nodes.len())));
                    }
                    trees.push(Tree { nodes });
                }
                _ => return Err(Self::err(n, format!("expected header for tree {t}"))),
            }
        }
        let e =
            TreeEnsemble { trees, base_score, objective, learning_rate, n_features, train_loss: Vec::new(), config };
        e.validate()?;
        Ok(e)
    }

    fn node(&mut self, nodes: &mut Vec<Node>) -> Result<usize, ModelError> {
        let (n, line) = self.next()?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        let id = nodes.len();
        match parts.as_slice() {
            ["leaf", value, cover] => {
                nodes.push(Node::Leaf { value: Self::num(n, value)?, cover: Self::num(n, cover)? });
            }
            ["split", feature, threshold, dir, cover] => {
                let default_left = match *dir {
                    "left" => true,
                    "right" => false,
                    _ => return Err(Self::err(n, format!("bad default direction `{dir}`"))),
                };
                nodes.push(Node::Split {
                    feature: Self::num(n, feature)?,
                    threshold: Self::num(n, threshold)?,
                    default_left,
                    left: 0,
                    right: 0,
                    cover: Self::num(n, cover)?,
                });
                let l = self.node(nodes)?;
                let r = self.node(nodes)?;
                if let Node::Split { left, right, .. } = &mut nodes[id] {
                    *left = l;
                    *right = r;
                }
            }
            _ => return Err(Self::err(n, format!("bad node line `{line}`"))),
        }
        Ok(id)
    }
}
