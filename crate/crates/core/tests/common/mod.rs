#![allow(dead_code)]

use std::path::{Path, PathBuf};

use arf_core::forest::{Forest, TreeNode};
use arf_core::ingest::{ingest_csv, CsvOptions};
use arf_core::quantize::{quantize_forest, QuantizedForest};
use arf_core::Dataset;

/// Forest fixture name paired with its calibration CSV.
pub const FOREST_FIXTURES: [(&str, &str); 3] = [
    ("single_leaf", "single_leaf_cal.csv"),
    ("three_tree", "three_tree_cal.csv"),
    ("trained", "blobs80.csv"),
];

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn load_csv(path: &Path) -> Dataset {
    let opts = CsvOptions {
        has_header: true,
        ..CsvOptions::default()
    };
    ingest_csv(path, &opts).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn load_fixture(name: &str, cal: &str) -> (Forest, Dataset, QuantizedForest) {
    let dir = fixture_dir();
    let text = std::fs::read_to_string(dir.join(format!("{name}.json"))).unwrap();
    let forest = Forest::from_json(&text).unwrap();
    let cal = load_csv(&dir.join(cal));
    let qf = quantize_forest(&forest, &cal).unwrap();
    (forest, cal, qf)
}

/// Every CSV dataset in the fixture directory, sorted by file name.
pub fn corpus() -> Vec<(String, Dataset)> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(fixture_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                load_csv(&p),
            )
        })
        .collect()
}

/// Recursive float evaluation of a node, written independently of the
/// library's traversal.
pub fn oracle_leaf<'a>(node: &'a TreeNode, x: &[f64]) -> &'a [f64] {
    match node {
        TreeNode::Leaf { scores } => scores,
        TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            if x[*feature] <= *threshold {
                oracle_leaf(left, x)
            } else {
                oracle_leaf(right, x)
            }
        }
    }
}

/// Thresholds `(feature, threshold)` met along the oracle path of `x`.
pub fn oracle_path(node: &TreeNode, x: &[f64], out: &mut Vec<(usize, f64)>) {
    if let TreeNode::Split {
        feature,
        threshold,
        left,
        right,
    } = node
    {
        out.push((*feature, *threshold));
        if x[*feature] <= *threshold {
            oracle_path(left, x, out);
        } else {
            oracle_path(right, x, out);
        }
    }
}

pub fn oracle_predict(forest: &Forest, x: &[f64]) -> usize {
    let mut sums = vec![0.0; forest.num_classes];
    for t in &forest.trees {
        for (s, p) in sums.iter_mut().zip(oracle_leaf(t, x)) {
            *s += p;
        }
    }
    let mut best = 0;
    for c in 1..sums.len() {
        if sums[c] > sums[best] {
            best = c;
        }
    }
    best
}

/// The chosen root split: feature plus the two adjacent distinct values
/// it separates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSplit {
    pub feature: usize,
    pub lo: f64,
    pub hi: f64,
}

/// Exhaustive minimum weighted-Gini split over all features and all
/// thresholds between consecutive distinct values. Impurities are compared
/// exactly as rationals; ties keep the lowest feature, then the lowest
/// threshold.
pub fn exhaustive_min_gini(data: &Dataset) -> Option<OracleSplit> {
    let m = data.num_classes();
    let n = data.len();
    // Weighted impurity times n: (nL^2 - sum cL^2)/nL + (nR^2 - sum cR^2)/nR,
    // kept as (numerator, denominator).
    let mut best: Option<(OracleSplit, i128, i128)> = None;
    for f in 0..data.n_features() {
        let mut values: Vec<f64> = data.rows().map(|r| r[f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mut cl = vec![0i128; m];
            let mut cr = vec![0i128; m];
            for i in 0..n {
                if data.row(i)[f] <= lo {
                    cl[data.label(i)] += 1;
                } else {
                    cr[data.label(i)] += 1;
                }
            }
            let nl: i128 = cl.iter().sum();
            let nr: i128 = cr.iter().sum();
            let al = nl * nl - cl.iter().map(|c| c * c).sum::<i128>();
            let ar = nr * nr - cr.iter().map(|c| c * c).sum::<i128>();
            let num = al * nr + ar * nl;
            let den = nl * nr;
            let better = match &best {
                None => true,
                Some((_, bn, bd)) => num * bd < bn * den,
            };
            if better {
                best = Some((OracleSplit { feature: f, lo, hi }, num, den));
            }
        }
    }
    best.map(|(s, _, _)| s)
}
