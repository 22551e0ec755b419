//! 16-bit flat-array forest layout and the matching input quantization.
//!
//! A [`QuantizedForest`] is three arrays:
//!
//! * `nodes` (FOREST): `{fidx, th, right}` records. Trees are stored
//!   contiguously in pre-order, so the left child of internal node `i` is
//!   always `i + 1` and only the right child index is kept. Leaves carry
//!   `fidx == -1` and use `right` as a row index into `leaves`.
//! * `roots` (ROOT): index of each tree's first node.
//! * `leaves` (LEAVES): `n_leaves x M` fixed-point probabilities. Every row
//!   sums to exactly `leaf_one`.
//!
//! Inputs and thresholds share one affine map per feature: the calibration
//! range `[min, max]` is stretched onto `[-32767, 32767]`, rounded half away
//! from zero and saturated. Comparisons stay `x > th` goes right, so a
//! quantized tie goes left.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::engine;
use crate::error::{ArfError, Result};
use crate::forest::{argmax_class, Forest, TreeNode};

/// Fixed-point value of probability 1.0.
pub const DEFAULT_LEAF_ONE: i32 = 1 << 14;
/// Index fields are 16-bit.
pub const MAX_NODES: usize = 1 << 16;
/// Symmetric saturation bound for quantized features and thresholds.
pub const QMAX: i16 = i16::MAX;

/// Marker stored in `fidx` for leaf records.
pub const LEAF_FIDX: i16 = -1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QNode {
    pub fidx: i16,
    pub th: i16,
    pub right: u16,
}

impl QNode {
    pub fn is_leaf(&self) -> bool {
        self.fidx == LEAF_FIDX
    }
}

/// Affine map `q = round((x - offset) * scale)`, saturated to `±QMAX`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureScale {
    pub offset: f64,
    pub scale: f64,
}

impl FeatureScale {
    /// Maps `[min, max]` onto `[-QMAX, QMAX]`. A zero-width range gets
    /// `scale = 1, offset = min`.
    pub fn from_range(min: f64, max: f64) -> Self {
        if max > min {
            let half = (max - min) / 2.0;
            Self {
                offset: min + half,
                scale: f64::from(QMAX) / half,
            }
        } else {
            Self {
                offset: min,
                scale: 1.0,
            }
        }
    }

    pub fn quantize(&self, x: f64) -> i16 {
        let q = ((x - self.offset) * self.scale).round();
        q.clamp(-f64::from(QMAX), f64::from(QMAX)) as i16
    }

    pub fn dequantize(&self, q: i16) -> f64 {
        f64::from(q) / self.scale + self.offset
    }

    /// Width of one quantization step in feature units.
    pub fn step(&self) -> f64 {
        1.0 / self.scale
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedForest {
    pub(crate) nodes: Vec<QNode>,
    pub(crate) roots: Vec<u16>,
    /// Row-major `n_leaves x num_classes`.
    pub(crate) leaves: Vec<i16>,
    pub(crate) feature_scales: Vec<FeatureScale>,
    pub(crate) leaf_one: i32,
    pub(crate) num_classes: usize,
    pub(crate) num_features: usize,
    pub(crate) max_depth: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub(crate) class_names: Option<Vec<String>>,
}

/// An input vector in the forest's fixed-point feature domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedInput(pub(crate) Vec<i16>);

impl QuantizedInput {
    pub fn values(&self) -> &[i16] {
        &self.0
    }
}

pub fn quantize_forest(forest: &Forest, calibration: &Dataset) -> Result<QuantizedForest> {
    quantize_forest_with(forest, calibration, DEFAULT_LEAF_ONE)
}

pub fn quantize_forest_with(
    forest: &Forest,
    calibration: &Dataset,
    leaf_one: i32,
) -> Result<QuantizedForest> {
    forest.validate()?;
    if !(1..=i32::from(i16::MAX)).contains(&leaf_one) {
        return Err(ArfError::InvalidConfig(format!(
            "leaf_one {leaf_one} does not fit a positive int16"
        )));
    }
    if forest.num_features > i16::MAX as usize {
        return Err(ArfError::InvalidForest(format!(
            "{} features do not fit the int16 fidx field",
            forest.num_features
        )));
    }
    if calibration.n_features() != forest.num_features {
        return Err(ArfError::DimensionMismatch {
            expected: forest.num_features,
            got: calibration.n_features(),
        });
    }
    let count = forest.node_count();
    if count > MAX_NODES {
        return Err(ArfError::TooManyNodes {
            count,
            limit: MAX_NODES,
        });
    }
    let ranges = calibration
        .feature_ranges()
        .ok_or_else(|| ArfError::InvalidDataset("calibration set is empty".into()))?;
    let feature_scales: Vec<FeatureScale> = ranges
        .iter()
        .map(|&(lo, hi)| FeatureScale::from_range(lo, hi))
        .collect();

    let mut flat = Flattener {
        scales: &feature_scales,
        leaf_one,
        nodes: Vec::with_capacity(count),
        leaves: Vec::new(),
        num_classes: forest.num_classes,
    };
    let mut roots = Vec::with_capacity(forest.num_trees());
    for tree in &forest.trees {
        roots.push(flat.nodes.len() as u16);
        flat.push(tree);
    }
    let Flattener { nodes, leaves, .. } = flat;
    let qf = QuantizedForest {
        nodes,
        roots,
        leaves,
        feature_scales,
        leaf_one,
        num_classes: forest.num_classes,
        num_features: forest.num_features,
        max_depth: forest.max_depth,
        class_names: forest.class_names.clone(),
    };
    qf.validate()?;
    Ok(qf)
}

struct Flattener<'a> {
    scales: &'a [FeatureScale],
    leaf_one: i32,
    nodes: Vec<QNode>,
    leaves: Vec<i16>,
    num_classes: usize,
}

impl Flattener<'_> {
    fn push(&mut self, node: &TreeNode) {
        match node {
            TreeNode::Leaf { scores } => {
                let row = self.leaves.len() / self.num_classes;
                self.leaves.extend(quantize_leaf(scores, self.leaf_one));
                self.nodes.push(QNode {
                    fidx: LEAF_FIDX,
                    th: 0,
                    right: row as u16,
                });
            }
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                let idx = self.nodes.len();
                self.nodes.push(QNode {
                    fidx: *feature as i16,
                    th: self.scales[*feature].quantize(*threshold),
                    right: 0,
                });
                self.push(left);
                self.nodes[idx].right = self.nodes.len() as u16;
                self.push(right);
            }
        }
    }
}

/// Rounds a probability vector to fixed point and adds the rounding residual
/// to the largest entry so the row sums to exactly `leaf_one`.
pub fn quantize_leaf(probs: &[f64], leaf_one: i32) -> Vec<i16> {
    let mut row: Vec<i32> = probs
        .iter()
        .map(|&p| (p * f64::from(leaf_one)).round() as i32)
        .collect();
    let residual = leaf_one - row.iter().sum::<i32>();
    if let Ok(top) = argmax_class(probs) {
        row[top] += residual;
    }
    row.into_iter().map(|v| v as i16).collect()
}

impl QuantizedForest {
    pub fn num_trees(&self) -> usize {
        self.roots.len()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn leaf_one(&self) -> i32 {
        self.leaf_one
    }

    pub fn nodes(&self) -> &[QNode] {
        &self.nodes
    }

    pub fn roots(&self) -> &[u16] {
        &self.roots
    }

    pub fn leaves(&self) -> &[i16] {
        &self.leaves
    }

    pub fn num_leaves(&self) -> usize {
        self.leaves.len() / self.num_classes
    }

    pub fn leaf_row(&self, row: usize) -> Option<&[i16]> {
        let m = self.num_classes;
        self.leaves.get(row * m..(row + 1) * m)
    }

    pub fn feature_scales(&self) -> &[FeatureScale] {
        &self.feature_scales
    }

    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    /// Checks every layout invariant: contiguous pre-order trees, implicit
    /// left children, leaf markers pointing at valid rows, and rows summing
    /// to `leaf_one`.
    pub fn validate(&self) -> Result<()> {
        let m = self.num_classes;
        if m == 0 || self.roots.is_empty() {
            return Err(ArfError::Structural(
                "forest has no classes or no trees".into(),
            ));
        }
        if self.nodes.len() > MAX_NODES {
            return Err(ArfError::TooManyNodes {
                count: self.nodes.len(),
                limit: MAX_NODES,
            });
        }
        if self.feature_scales.len() != self.num_features {
            return Err(ArfError::Structural(format!(
                "{} feature scales for {} features",
                self.feature_scales.len(),
                self.num_features
            )));
        }
        if !(1..=i32::from(i16::MAX)).contains(&self.leaf_one) {
            return Err(ArfError::Structural(format!(
                "leaf_one {} out of range",
                self.leaf_one
            )));
        }
        if !self.leaves.len().is_multiple_of(m) {
            return Err(ArfError::Structural(
                "LEAVES is not a whole number of rows".into(),
            ));
        }
        for (r, row) in self.leaves.chunks(m).enumerate() {
            let sum: i32 = row.iter().map(|&v| i32::from(v)).sum();
            if sum != self.leaf_one || row.iter().any(|&v| v < 0) {
                return Err(ArfError::Structural(format!(
                    "LEAVES row {r} = {row:?} does not sum to {}",
                    self.leaf_one
                )));
            }
        }
        let mut expected_root = 0usize;
        for (k, &root) in self.roots.iter().enumerate() {
            if usize::from(root) != expected_root {
                return Err(ArfError::Structural(format!(
                    "tree {k} starts at {root}, expected {expected_root}"
                )));
            }
            expected_root = self.check_subtree(usize::from(root), 0)?;
        }
        if expected_root != self.nodes.len() {
            return Err(ArfError::Structural(format!(
                "{} trailing nodes after the last tree",
                self.nodes.len() - expected_root
            )));
        }
        Ok(())
    }

    /// Returns one past the last index of the subtree rooted at `i`.
    fn check_subtree(&self, i: usize, depth: usize) -> Result<usize> {
        if depth > self.max_depth {
            return Err(ArfError::Structural(format!(
                "node {i} lies deeper than max_depth {}",
                self.max_depth
            )));
        }
        let node = self
            .nodes
            .get(i)
            .ok_or_else(|| ArfError::Structural(format!("node index {i} out of bounds")))?;
        if node.is_leaf() {
            if usize::from(node.right) >= self.num_leaves() {
                return Err(ArfError::Structural(format!(
                    "leaf {i} points at LEAVES row {} of {}",
                    node.right,
                    self.num_leaves()
                )));
            }
            return Ok(i + 1);
        }
        if node.fidx < 0 || node.fidx as usize >= self.num_features {
            return Err(ArfError::Structural(format!(
                "node {i} has fidx {}",
                node.fidx
            )));
        }
        let left_end = self.check_subtree(i + 1, depth + 1)?;
        if usize::from(node.right) != left_end {
            return Err(ArfError::Structural(format!(
                "node {i}: right child {} does not follow the left subtree ending at {left_end}",
                node.right
            )));
        }
        self.check_subtree(left_end, depth + 1)
    }

    /// The first `n` trees as a forest of their own.
    pub fn prefix(&self, n: usize) -> Result<QuantizedForest> {
        if n == 0 || n > self.num_trees() {
            return Err(ArfError::InvalidConfig(format!(
                "prefix size {n} outside 1..={}",
                self.num_trees()
            )));
        }
        let end = self
            .roots
            .get(n)
            .map_or(self.nodes.len(), |&r| usize::from(r));
        let nodes = self.nodes[..end].to_vec();
        // Leaf rows are assigned in pre-order, so the prefix uses rows 0..k.
        let rows = nodes.iter().filter(|n| n.is_leaf()).count();
        Ok(QuantizedForest {
            nodes,
            roots: self.roots[..n].to_vec(),
            leaves: self.leaves[..rows * self.num_classes].to_vec(),
            ..self.clone()
        })
    }

    /// Maps thresholds and leaves back to the float domain.
    pub fn dequantize(&self) -> Result<Forest> {
        let trees = self
            .roots
            .iter()
            .map(|&r| self.rebuild(usize::from(r)))
            .collect::<Result<Vec<_>>>()?;
        let mut forest = Forest::new(self.num_classes, self.num_features, self.max_depth, trees)?;
        forest.class_names = self.class_names.clone();
        Ok(forest)
    }

    fn rebuild(&self, i: usize) -> Result<TreeNode> {
        let node = self
            .nodes
            .get(i)
            .ok_or_else(|| ArfError::Structural(format!("node index {i} out of bounds")))?;
        if node.is_leaf() {
            let row = self
                .leaf_row(usize::from(node.right))
                .ok_or_else(|| ArfError::Structural(format!("leaf {i} points past LEAVES")))?;
            let one = f64::from(self.leaf_one);
            return Ok(TreeNode::leaf(
                row.iter().map(|&v| f64::from(v) / one).collect(),
            ));
        }
        let f = node.fidx as usize;
        let scale = self
            .feature_scales
            .get(f)
            .ok_or_else(|| ArfError::Structural(format!("node {i} has fidx {}", node.fidx)))?;
        Ok(TreeNode::split(
            f,
            scale.dequantize(node.th),
            self.rebuild(i + 1)?,
            self.rebuild(usize::from(node.right))?,
        ))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let qf: QuantizedForest = serde_json::from_str(s)?;
        qf.validate()?;
        Ok(qf)
    }
}

/// Maps a real feature vector into the forest's int16 domain.
pub fn quantize_input(x: &[f64], qf: &QuantizedForest) -> Result<QuantizedInput> {
    if x.len() != qf.num_features {
        return Err(ArfError::DimensionMismatch {
            expected: qf.num_features,
            got: x.len(),
        });
    }
    Ok(QuantizedInput(
        x.iter()
            .zip(&qf.feature_scales)
            .map(|(&v, s)| s.quantize(v))
            .collect(),
    ))
}

/// Float vs fixed-point prediction agreement over a sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub samples: usize,
    pub disagreements: usize,
    /// Indices of samples whose predicted classes differ.
    pub disagreeing: Vec<usize>,
}

impl ConsistencyReport {
    pub fn disagreement_rate(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.disagreements as f64 / self.samples as f64
        }
    }
}

pub fn comparison_consistency_check(
    forest: &Forest,
    qf: &QuantizedForest,
    samples: &Dataset,
) -> Result<ConsistencyReport> {
    let mut disagreeing = Vec::new();
    for (i, x) in samples.rows().enumerate() {
        let float_class = forest.predict(x)?;
        let q = quantize_input(x, qf)?;
        let fixed_class = engine::full_infer(qf, &q)?.class;
        if float_class != fixed_class {
            disagreeing.push(i);
        }
    }
    Ok(ConsistencyReport {
        samples: samples.len(),
        disagreements: disagreeing.len(),
        disagreeing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn calib(rows: Vec<Vec<f64>>) -> Dataset {
        let n = rows.len();
        Dataset::from_rows(rows, vec![0; n], 2).unwrap()
    }

    #[test]
    fn quarter_leaf_is_exact() {
        let f = Forest::new(2, 1, 0, vec![TreeNode::leaf(vec![0.25, 0.75])]).unwrap();
        let qf = quantize_forest(&f, &calib(vec![vec![0.0], vec![1.0]])).unwrap();
        assert_eq!(qf.leaves(), &[4096, 12288]);
        assert_eq!(
            qf.nodes(),
            &[QNode {
                fidx: -1,
                th: 0,
                right: 0
            }]
        );
        assert_eq!(qf.roots(), &[0]);
    }

    #[test]
    fn three_node_tree_layout() {
        let tree = TreeNode::split(
            0,
            0.5,
            TreeNode::leaf(vec![1.0, 0.0]),
            TreeNode::leaf(vec![0.0, 1.0]),
        );
        let f = Forest::new(2, 1, 1, vec![tree]).unwrap();
        let qf = quantize_forest(&f, &calib(vec![vec![0.0], vec![1.0]])).unwrap();
        let n = qf.nodes();
        assert_eq!(n.len(), 3);
        assert_eq!(n[0].fidx, 0);
        assert_eq!(n[0].th, 0);
        assert_eq!(n[0].right, 2);
        assert!(n[1].is_leaf() && n[1].right == 0);
        assert!(n[2].is_leaf() && n[2].right == 1);
        assert_eq!(qf.leaf_row(0).unwrap(), &[16384, 0]);
        assert_eq!(qf.leaf_row(1).unwrap(), &[0, 16384]);
    }

    #[test]
    fn rounding_repair_targets_largest_entry() {
        // 1/3 each: 5461.33 -> 5461 x3 = 16383, residual +1 to entry 0
        assert_eq!(
            quantize_leaf(&[1.0 / 3.0; 3], 16384),
            vec![5462, 5461, 5461]
        );
        // 0.6/0.4: 9830.4 -> 9830, 6553.6 -> 6554, already 16384
        assert_eq!(quantize_leaf(&[0.6, 0.4], 16384), vec![9830, 6554]);
        // 7 x 1/7 = 2340.57 -> 2341 x7 = 16387, residual -3 to entry 0
        let row = quantize_leaf(&[1.0 / 7.0; 7], 16384);
        assert_eq!(row.iter().map(|&v| i32::from(v)).sum::<i32>(), 16384);
        assert_eq!(row[0], 2338);
    }

    #[test]
    fn input_endpoints_and_midpoint() {
        let f = Forest::new(2, 1, 0, vec![TreeNode::leaf(vec![0.5, 0.5])]).unwrap();
        let qf = quantize_forest(&f, &calib(vec![vec![-3.0], vec![5.0]])).unwrap();
        assert_eq!(quantize_input(&[-3.0], &qf).unwrap().values(), &[-32767]);
        assert_eq!(quantize_input(&[5.0], &qf).unwrap().values(), &[32767]);
        // By hand: offset 1, scale 32767/4; x = 1 -> 0, x = 3 -> 16383.5 -> 16384
        assert_eq!(quantize_input(&[1.0], &qf).unwrap().values(), &[0]);
        assert_eq!(quantize_input(&[3.0], &qf).unwrap().values(), &[16384]);
        // Out-of-range saturates.
        assert_eq!(quantize_input(&[100.0], &qf).unwrap().values(), &[32767]);
        assert_eq!(quantize_input(&[-100.0], &qf).unwrap().values(), &[-32767]);
        assert!(quantize_input(&[1.0, 2.0], &qf).is_err());
    }

    #[test]
    fn constant_feature_uses_unit_scale() {
        let s = FeatureScale::from_range(4.0, 4.0);
        assert_eq!(
            s,
            FeatureScale {
                offset: 4.0,
                scale: 1.0
            }
        );
        assert_eq!(s.quantize(4.0), 0);
        assert_eq!(s.quantize(6.4), 2);
    }

    #[test]
    fn threshold_round_trip_is_idempotent() {
        let tree = TreeNode::split(
            1,
            0.123_456,
            TreeNode::split(
                0,
                -7.7,
                TreeNode::leaf(vec![1.0, 0.0]),
                TreeNode::leaf(vec![0.5, 0.5]),
            ),
            TreeNode::leaf(vec![0.0, 1.0]),
        );
        let f = Forest::new(2, 2, 2, vec![tree]).unwrap();
        let cal = calib(vec![vec![-10.0, -1.0], vec![3.0, 1.0]]);
        let qf = quantize_forest(&f, &cal).unwrap();
        let back = quantize_forest(&qf.dequantize().unwrap(), &cal).unwrap();
        assert_eq!(back.nodes(), qf.nodes());
        assert_eq!(back.leaves(), qf.leaves());
    }

    #[test]
    fn node_limit_is_enforced() {
        // A complete depth-15 tree has 65535 nodes; two of them overflow.
        fn full(d: usize) -> TreeNode {
            if d == 0 {
                TreeNode::leaf(vec![1.0, 0.0])
            } else {
                TreeNode::split(0, 0.0, full(d - 1), full(d - 1))
            }
        }
        let f = Forest::new(2, 1, 15, vec![full(15), full(15)]).unwrap();
        let err = quantize_forest(&f, &calib(vec![vec![0.0], vec![1.0]])).unwrap_err();
        assert!(matches!(
            err,
            ArfError::TooManyNodes {
                count: 131070,
                limit: 65536
            }
        ));
        assert!(err.to_string().contains("65536"));
    }

    #[test]
    fn validate_rejects_corruption() {
        let tree = TreeNode::split(
            0,
            0.5,
            TreeNode::leaf(vec![1.0, 0.0]),
            TreeNode::leaf(vec![0.0, 1.0]),
        );
        let f = Forest::new(2, 1, 1, vec![tree.clone(), tree]).unwrap();
        let qf = quantize_forest(&f, &calib(vec![vec![0.0], vec![1.0]])).unwrap();
        assert_eq!(qf.roots(), &[0, 3]);

        let mut bad = qf.clone();
        bad.nodes[0].right = 1;
        assert!(bad.validate().is_err());
        let mut bad = qf.clone();
        bad.nodes[1].right = 9;
        assert!(bad.validate().is_err());
        let mut bad = qf.clone();
        bad.leaves[0] -= 1;
        assert!(bad.validate().is_err());
        let mut bad = qf.clone();
        bad.roots[1] = 2;
        assert!(bad.validate().is_err());

        let json = qf.to_json().unwrap();
        assert_eq!(QuantizedForest::from_json(&json).unwrap(), qf);
    }

    #[test]
    fn prefix_keeps_leading_trees() {
        let t = |p: f64| {
            TreeNode::split(
                0,
                0.5,
                TreeNode::leaf(vec![p, 1.0 - p]),
                TreeNode::leaf(vec![0.0, 1.0]),
            )
        };
        let f = Forest::new(2, 1, 1, vec![t(1.0), t(0.5), t(0.25)]).unwrap();
        let qf = quantize_forest(&f, &calib(vec![vec![0.0], vec![1.0]])).unwrap();
        let p = qf.prefix(2).unwrap();
        p.validate().unwrap();
        assert_eq!(p.num_trees(), 2);
        assert_eq!(p.num_leaves(), 4);
        assert_eq!(p.leaf_row(2).unwrap(), &[8192, 8192]);
        assert!(qf.prefix(0).is_err());
        assert!(qf.prefix(4).is_err());
    }
}
