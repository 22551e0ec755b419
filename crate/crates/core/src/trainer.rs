//! CART-style random forest training.
//!
//! Each tree is grown on a bootstrap sample (drawn with replacement, size
//! `n_samples`) and picks every split among a fresh uniform draw of
//! `features_per_split` features. Splits minimise weighted Gini impurity;
//! candidate thresholds are midpoints between consecutive distinct values.
//! Ties are resolved towards the lowest feature index, then the lowest
//! threshold. Impurity scores are compared exactly in integer arithmetic so
//! the tie-break does not depend on float rounding.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`): tree `k` uses the stream
//! `k` of the generator seeded with `seed`, so trees are independent of
//! training order and reproduce across platforms.

use std::cmp::Ordering;

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{ArfError, Result};
use crate::forest::{Forest, TreeNode};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub num_trees: usize,
    pub max_depth: usize,
    /// `None` means `floor(sqrt(n_features))`, at least 1.
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
    pub min_samples_leaf: usize,
}

impl TrainConfig {
    pub fn new(num_trees: usize, max_depth: usize) -> Self {
        Self {
            num_trees,
            max_depth,
            features_per_split: None,
            bootstrap: true,
            seed: 0,
            min_samples_leaf: 1,
        }
    }

    #[must_use]
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    #[must_use]
    pub fn with_features_per_split(mut self, k: usize) -> Self {
        self.features_per_split = Some(k);
        self
    }

    #[must_use]
    pub fn with_bootstrap(mut self, bootstrap: bool) -> Self {
        self.bootstrap = bootstrap;
        self
    }

    #[must_use]
    pub fn with_min_samples_leaf(mut self, n: usize) -> Self {
        self.min_samples_leaf = n;
        self
    }

    /// Checks the config against a feature count and resolves the
    /// per-split feature budget.
    pub fn resolve_features_per_split(&self, n_features: usize) -> Result<usize> {
        if self.num_trees == 0 {
            return Err(ArfError::InvalidConfig(
                "num_trees must be at least 1".into(),
            ));
        }
        if self.max_depth == 0 {
            return Err(ArfError::InvalidConfig(
                "max_depth must be at least 1".into(),
            ));
        }
        if self.min_samples_leaf == 0 {
            return Err(ArfError::InvalidConfig(
                "min_samples_leaf must be at least 1".into(),
            ));
        }
        let k = self
            .features_per_split
            .unwrap_or_else(|| ((n_features as f64).sqrt().floor() as usize).max(1));
        if k == 0 || k > n_features {
            return Err(ArfError::InvalidConfig(format!(
                "features_per_split {k} outside 1..={n_features}"
            )));
        }
        Ok(k)
    }
}

/// Trains `cfg.num_trees` trees; the result is identical whether or not
/// trees are grown in parallel.
pub fn train_forest(data: &Dataset, cfg: &TrainConfig) -> Result<Forest> {
    if data.is_empty() {
        return Err(ArfError::InvalidDataset(
            "cannot train on an empty dataset".into(),
        ));
    }
    let k = cfg.resolve_features_per_split(data.n_features())?;
    let grower = Grower {
        data,
        max_depth: cfg.max_depth,
        features_per_split: k,
        min_samples_leaf: cfg.min_samples_leaf,
    };
    let trees: Vec<TreeNode> = (0..cfg.num_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = tree_rng(cfg.seed, t);
            let n = data.len();
            let samples: Vec<usize> = if cfg.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grower.grow(samples, 0, &mut rng)
        })
        .collect();
    let mut forest = Forest::new(data.num_classes(), data.n_features(), cfg.max_depth, trees)?;
    forest.class_names = data.class_names().map(<[String]>::to_vec);
    Ok(forest)
}

fn tree_rng(seed: u64, tree_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree_index as u64);
    rng
}

struct Grower<'a> {
    data: &'a Dataset,
    max_depth: usize,
    features_per_split: usize,
    min_samples_leaf: usize,
}

/// A candidate split with its exact Gini score
/// `sum(cL^2)/nL + sum(cR^2)/nR = num / den`; larger is purer.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    num: u128,
    den: u128,
}

impl Candidate {
    fn cmp_score(&self, other: &Candidate) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

impl Grower<'_> {
    fn grow(&self, samples: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) -> TreeNode {
        let counts = self.class_counts(&samples);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if depth >= self.max_depth || pure || samples.len() < 2 * self.min_samples_leaf {
            return self.leaf(&counts, samples.len());
        }
        let n_features = self.data.n_features();
        let mut features: Vec<usize> = if self.features_per_split == n_features {
            (0..n_features).collect()
        } else {
            index::sample(rng, n_features, self.features_per_split).into_vec()
        };
        features.sort_unstable();

        let Some(best) = best_split(self.data, &samples, &features, self.min_samples_leaf) else {
            return self.leaf(&counts, samples.len());
        };
        let (left, right): (Vec<usize>, Vec<usize>) = samples
            .into_iter()
            .partition(|&i| self.data.row(i)[best.feature] <= best.threshold);
        let left = self.grow(left, depth + 1, rng);
        let right = self.grow(right, depth + 1, rng);
        TreeNode::split(best.feature, best.threshold, left, right)
    }

    fn class_counts(&self, samples: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.data.num_classes()];
        for &i in samples {
            counts[self.data.label(i)] += 1;
        }
        counts
    }

    fn leaf(&self, counts: &[usize], n: usize) -> TreeNode {
        TreeNode::leaf(counts.iter().map(|&c| c as f64 / n as f64).collect())
    }
}

/// Best Gini split over `features` for the (multi)set `samples`, or `None`
/// when no feature has two distinct values satisfying `min_samples_leaf`.
fn best_split(
    data: &Dataset,
    samples: &[usize],
    features: &[usize],
    min_samples_leaf: usize,
) -> Option<Candidate> {
    let m = data.num_classes();
    let n = samples.len();
    let mut total = vec![0u128; m];
    for &i in samples {
        total[data.label(i)] += 1;
    }
    let mut best: Option<Candidate> = None;
    let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(n);
    let mut left = vec![0u128; m];

    for &f in features {
        sorted.clear();
        sorted.extend(samples.iter().map(|&i| (data.row(i)[f], data.label(i))));
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        left.iter_mut().for_each(|c| *c = 0);
        // Sum of squared class counts on each side, maintained incrementally.
        let mut sq_left: u128 = 0;
        let mut sq_right: u128 = total.iter().map(|c| c * c).sum();
        for i in 0..n - 1 {
            let class = sorted[i].1;
            let cl = left[class];
            let cr = total[class] - cl;
            sq_left += 2 * cl + 1;
            sq_right -= 2 * cr - 1;
            left[class] += 1;

            let (lo, hi) = (sorted[i].0, sorted[i + 1].0);
            if lo == hi {
                continue;
            }
            let n_left = i + 1;
            let n_right = n - n_left;
            if n_left < min_samples_leaf || n_right < min_samples_leaf {
                continue;
            }
            let (nl, nr) = (n_left as u128, n_right as u128);
            let cand = Candidate {
                feature: f,
                threshold: midpoint(lo, hi),
                num: sq_left * nr + sq_right * nl,
                den: nl * nr,
            };
            if best.is_none_or(|b| cand.cmp_score(&b) == Ordering::Greater) {
                best = Some(cand);
            }
        }
    }
    best
}

/// Midpoint of `lo < hi` that still sends `lo` left and `hi` right.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid >= hi || !mid.is_finite() {
        lo
    } else {
        mid
    }
}

/// Stratified, seeded train/test partition.
///
/// The test set holds `round(n * test_fraction)` samples (clamped to leave
/// both sides non-empty), apportioned to classes by largest remainder so
/// each class contributes in proportion to its size. Both outputs keep the
/// original sample order.
pub fn train_test_split(
    data: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(ArfError::InvalidConfig(format!(
            "test_fraction {test_fraction} must lie strictly between 0 and 1"
        )));
    }
    let n = data.len();
    if n < 2 {
        return Err(ArfError::InvalidDataset(format!(
            "need at least 2 samples to split, got {n}"
        )));
    }
    let n_test = ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1);
    let counts = data.class_counts();

    // Largest-remainder apportionment of n_test across classes.
    let exact: Vec<f64> = counts
        .iter()
        .map(|&c| c as f64 * n_test as f64 / n as f64)
        .collect();
    let mut quota: Vec<usize> = exact.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut missing = n_test - quota.iter().sum::<usize>();
    for &c in order.iter().cycle() {
        if missing == 0 {
            break;
        }
        if quota[c] < counts[c] {
            quota[c] += 1;
            missing -= 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_test = vec![false; n];
    for (class, &q) in quota.iter().enumerate() {
        let mut members: Vec<usize> = (0..n).filter(|&i| data.label(i) == class).collect();
        members.shuffle(&mut rng);
        for &i in &members[..q] {
            is_test[i] = true;
        }
    }
    let (test_idx, train_idx): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| is_test[i]);
    Ok((data.subset(&train_idx), data.subset(&test_idx)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clusters() -> Dataset {
        let xs = [0.1, 0.3, 0.2, 0.4, 2.0, 2.5, 2.2, 2.8];
        let labels = vec![0, 0, 0, 0, 1, 1, 1, 1];
        Dataset::from_rows(xs.iter().map(|&x| vec![x]).collect(), labels, 2).unwrap()
    }

    #[test]
    fn single_sample_gives_one_hot_leaf() {
        let d = Dataset::from_rows(vec![vec![3.0, 1.0]], vec![1], 3).unwrap();
        let f = train_forest(&d, &TrainConfig::new(1, 1)).unwrap();
        assert_eq!(f.trees, vec![TreeNode::leaf(vec![0.0, 1.0, 0.0])]);
    }

    #[test]
    fn separable_clusters_split_between() {
        let d = clusters();
        let cfg = TrainConfig::new(1, 1).with_bootstrap(false);
        let f = train_forest(&d, &cfg).unwrap();
        match &f.trees[0] {
            TreeNode::Split {
                feature, threshold, ..
            } => {
                assert_eq!(*feature, 0);
                assert!((*threshold - 1.2).abs() < 1e-12);
            }
            other => panic!("expected a split, got {other:?}"),
        }
        for (x, &y) in d.rows().zip(d.labels()) {
            assert_eq!(f.predict(x).unwrap(), y);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let d = clusters();
        let cfg = TrainConfig::new(5, 3).with_seed(17);
        let a = train_forest(&d, &cfg).unwrap().to_json().unwrap();
        let b = train_forest(&d, &cfg).unwrap().to_json().unwrap();
        assert_eq!(a, b);
        let c = train_forest(&d, &cfg.clone().with_seed(18))
            .unwrap()
            .to_json()
            .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn config_errors() {
        let d = clusters();
        assert!(train_forest(&d, &TrainConfig::new(0, 2)).is_err());
        assert!(train_forest(&d, &TrainConfig::new(1, 0)).is_err());
        assert!(train_forest(&d, &TrainConfig::new(1, 2).with_features_per_split(2)).is_err());
        assert!(train_forest(&d, &TrainConfig::new(1, 2).with_min_samples_leaf(0)).is_err());
        let empty = Dataset::from_flat(vec![], 1, vec![], 2).unwrap();
        assert!(train_forest(&empty, &TrainConfig::new(1, 1)).is_err());
    }

    #[test]
    fn min_samples_leaf_is_respected() {
        let d = clusters();
        let cfg = TrainConfig::new(1, 4)
            .with_bootstrap(false)
            .with_min_samples_leaf(3);
        let f = train_forest(&d, &cfg).unwrap();
        fn check(node: &TreeNode, d: &Dataset, idx: Vec<usize>) {
            match node {
                TreeNode::Leaf { .. } => assert!(idx.len() >= 3, "leaf with {} samples", idx.len()),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let (l, r): (Vec<_>, Vec<_>) = idx
                        .into_iter()
                        .partition(|&i| d.row(i)[*feature] <= *threshold);
                    check(left, d, l);
                    check(right, d, r);
                }
            }
        }
        check(&f.trees[0], &d, (0..d.len()).collect());
    }

    #[test]
    fn leaf_scores_are_class_frequencies() {
        // Overlapping labels on one value: no split possible -> frequency leaf.
        let d = Dataset::from_rows(vec![vec![1.0]; 4], vec![0, 1, 1, 1], 2).unwrap();
        let f = train_forest(&d, &TrainConfig::new(1, 3).with_bootstrap(false)).unwrap();
        assert_eq!(f.trees[0], TreeNode::leaf(vec![0.25, 0.75]));
    }

    #[test]
    fn midpoint_never_reaches_upper_value() {
        let lo = 1.0_f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        let m = midpoint(lo, hi);
        assert!(lo <= m && m < hi);
        assert_eq!(midpoint(1.0, 2.0), 1.5);
    }

    #[test]
    fn split_sizes_and_union() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let d = Dataset::from_rows(rows, vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1], 2).unwrap();
        let (train, test) = train_test_split(&d, 0.3, 5).unwrap();
        assert_eq!((train.len(), test.len()), (7, 3));
        let mut all: Vec<f64> = train.rows().chain(test.rows()).map(|r| r[0]).collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..10).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn split_is_stratified_and_deterministic() {
        let rows: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64]).collect();
        let labels = (0..100).map(|i| i % 2).collect();
        let d = Dataset::from_rows(rows, labels, 2).unwrap();
        let (train, test) = train_test_split(&d, 0.2, 9).unwrap();
        assert_eq!(test.class_counts(), vec![10, 10]);
        assert_eq!(train.class_counts(), vec![40, 40]);
        let (train2, test2) = train_test_split(&d, 0.2, 9).unwrap();
        assert_eq!(train, train2);
        assert_eq!(test, test2);
        assert!(train_test_split(&d, 0.0, 1).is_err());
        assert!(train_test_split(&d, 1.0, 1).is_err());
    }
}
