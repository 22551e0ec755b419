//! Float-domain forest representation shared by the trainer, the quantizer
//! and the CLI.
//!
//! The JSON interchange format is
//!
//! ```text
//! { "num_classes": M, "num_features": F, "max_depth": D,
//!   "trees": [ node, ... ] }
//! node := { "f": feature, "th": threshold, "l": node, "r": node }
//!       | { "leaf": [p0, ..., pM-1] }
//! ```
//!
//! An optional `"class_names"` array carries the label strings the class
//! ids were mapped from.

use serde::{Deserialize, Serialize};

use crate::error::{ArfError, Result};

/// Leaf probability vectors must sum to one within this tolerance.
pub const LEAF_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Split {
        #[serde(rename = "f")]
        feature: usize,
        #[serde(rename = "th")]
        threshold: f64,
        #[serde(rename = "l")]
        left: Box<TreeNode>,
        #[serde(rename = "r")]
        right: Box<TreeNode>,
    },
    Leaf {
        #[serde(rename = "leaf")]
        scores: Vec<f64>,
    },
}

impl TreeNode {
    pub fn leaf(scores: Vec<f64>) -> Self {
        TreeNode::Leaf { scores }
    }

    pub fn split(feature: usize, threshold: f64, left: TreeNode, right: TreeNode) -> Self {
        TreeNode::Split {
            feature,
            threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    /// Longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => 1 + left.node_count() + right.node_count(),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }

    /// Descends to the leaf reached by `x`: strictly greater goes right.
    pub fn leaf_for(&self, x: &[f64]) -> &[f64] {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { scores } => return scores,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] > *threshold {
                        right
                    } else {
                        left
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub num_classes: usize,
    pub num_features: usize,
    pub max_depth: usize,
    pub trees: Vec<TreeNode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_names: Option<Vec<String>>,
}

impl Forest {
    /// Builds a forest and checks its structural invariants.
    pub fn new(
        num_classes: usize,
        num_features: usize,
        max_depth: usize,
        trees: Vec<TreeNode>,
    ) -> Result<Self> {
        let forest = Self {
            num_classes,
            num_features,
            max_depth,
            trees,
            class_names: None,
        };
        forest.validate()?;
        Ok(forest)
    }

    pub fn num_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn node_count(&self) -> usize {
        self.trees.iter().map(TreeNode::node_count).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 1 {
            return Err(ArfError::InvalidForest(
                "num_classes must be positive".into(),
            ));
        }
        if self.trees.is_empty() {
            return Err(ArfError::InvalidForest("forest has no trees".into()));
        }
        if let Some(names) = &self.class_names {
            if names.len() != self.num_classes {
                return Err(ArfError::InvalidForest(format!(
                    "{} class names for {} classes",
                    names.len(),
                    self.num_classes
                )));
            }
        }
        for (k, tree) in self.trees.iter().enumerate() {
            let depth = tree.depth();
            if depth > self.max_depth {
                return Err(ArfError::InvalidForest(format!(
                    "tree {k} has depth {depth} > max_depth {}",
                    self.max_depth
                )));
            }
            self.validate_node(k, tree)?;
        }
        Ok(())
    }

    fn validate_node(&self, k: usize, node: &TreeNode) -> Result<()> {
        match node {
            TreeNode::Leaf { scores } => {
                if scores.len() != self.num_classes {
                    return Err(ArfError::InvalidForest(format!(
                        "tree {k}: leaf has {} scores for {} classes",
                        scores.len(),
                        self.num_classes
                    )));
                }
                if scores.iter().any(|&p| p < 0.0 || !p.is_finite()) {
                    return Err(ArfError::InvalidForest(format!(
                        "tree {k}: leaf scores {scores:?} are not non-negative"
                    )));
                }
                let sum: f64 = scores.iter().sum();
                if (sum - 1.0).abs() > LEAF_SUM_TOLERANCE {
                    return Err(ArfError::InvalidForest(format!(
                        "tree {k}: leaf scores sum to {sum}"
                    )));
                }
                Ok(())
            }
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if *feature >= self.num_features {
                    return Err(ArfError::InvalidForest(format!(
                        "tree {k}: feature {feature} out of range 0..{}",
                        self.num_features
                    )));
                }
                if !threshold.is_finite() {
                    return Err(ArfError::InvalidForest(format!(
                        "tree {k}: non-finite threshold"
                    )));
                }
                self.validate_node(k, left)?;
                self.validate_node(k, right)
            }
        }
    }

    /// Sum of the leaf probability vectors of all trees.
    pub fn predict_scores(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_classes];
        for tree in &self.trees {
            for (o, p) in out.iter_mut().zip(tree.leaf_for(x)) {
                *o += p;
            }
        }
        out
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.num_features {
            return Err(ArfError::DimensionMismatch {
                expected: self.num_features,
                got: x.len(),
            });
        }
        argmax_class(&self.predict_scores(x))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let forest: Forest = serde_json::from_str(s)?;
        forest.validate()?;
        Ok(forest)
    }
}

/// Index of the largest score; ties go to the lowest class index.
pub fn argmax_class<T: PartialOrd + Copy>(scores: &[T]) -> Result<usize> {
    let (first, rest) = scores.split_first().ok_or(ArfError::EmptyScores)?;
    let mut best = 0;
    let mut best_val = *first;
    for (j, &v) in rest.iter().enumerate() {
        if v > best_val {
            best = j + 1;
            best_val = v;
        }
    }
    Ok(best)
}
