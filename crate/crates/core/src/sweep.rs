//! Threshold sweeps, Pareto filtering and accuracy-drop tables.
//!
//! A sweep evaluates one policy kind over a threshold grid and a list of
//! batch sizes on a test set. Each grid point becomes a [`ParetoPoint`]
//! carrying accuracy, macro-averaged accuracy, average trees executed and the
//! cost model's average cycles and energy. Points keep grid order (thresholds
//! outer, batch sizes inner) regardless of how evaluation is scheduled.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{estimate, CostParams};
use crate::dataset::Dataset;
use crate::engine::{
    adaptive_infer, qwyc_infer, qwyc_order_trees, tree_infer, Inference, InferenceTrace,
};
use crate::error::{ArfError, Result};
use crate::forest::argmax_class;
use crate::policy::{PolicyConfig, PolicyKind};
use crate::quantize::{quantize_forest, quantize_input, QuantizedForest, QuantizedInput};
use crate::trainer::{train_forest, TrainConfig};

/// Default number of evenly spaced thresholds in `[0, N]`.
pub const DEFAULT_GRID_POINTS: usize = 64;
/// Side of the default QWYC `(eps_minus, eps_plus)` lattice.
pub const QWYC_LATTICE_SIDE: usize = 8;
/// Slack when comparing accuracies against a drop target.
const ACCURACY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    Alpha(f64),
    Eps { minus: f64, plus: f64 },
}

impl std::fmt::Display for Threshold {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Threshold::Alpha(a) => write!(f, "{a}"),
            Threshold::Eps { minus, plus } => write!(f, "{minus}/{plus}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub policy: PolicyKind,
    pub threshold: Threshold,
    pub batch: usize,
    pub accuracy: f64,
    pub macro_avg_accuracy: f64,
    pub avg_trees: f64,
    pub avg_cycles: f64,
    pub avg_energy_uj: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccuracyMetric {
    #[default]
    Accuracy,
    MacroAccuracy,
}

impl AccuracyMetric {
    fn of_point(self, p: &ParetoPoint) -> f64 {
        match self {
            AccuracyMetric::Accuracy => p.accuracy,
            AccuracyMetric::MacroAccuracy => p.macro_avg_accuracy,
        }
    }

    fn of_reduced(self, p: &ReducedPoint) -> f64 {
        match self {
            AccuracyMetric::Accuracy => p.accuracy,
            AccuracyMetric::MacroAccuracy => p.macro_avg_accuracy,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ThresholdGrid {
    Explicit(Vec<f64>),
    /// `count` evenly spaced values over `[0, N]`.
    Linspace(usize),
}

impl ThresholdGrid {
    pub fn values(&self, num_trees: usize) -> Vec<f64> {
        match self {
            ThresholdGrid::Explicit(v) => v.clone(),
            ThresholdGrid::Linspace(0) => Vec::new(),
            ThresholdGrid::Linspace(1) => vec![0.0],
            ThresholdGrid::Linspace(count) => {
                let n = num_trees as f64;
                (0..*count)
                    .map(|i| n * i as f64 / (*count - 1) as f64)
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub policy: PolicyKind,
    /// Alpha grid (AggMax / AggSm / LastSm).
    pub thresholds: ThresholdGrid,
    /// `(eps_minus, eps_plus)` pairs (QWYC).
    pub eps_grid: Vec<(f64, f64)>,
    /// Batch sizes (AggMax / AggSm); other policies run with B = 1.
    pub batches: Vec<usize>,
    pub drop_targets: Vec<f64>,
    pub metric: AccuracyMetric,
}

impl SweepSpec {
    /// Default grid for `policy`: 64 alphas over `[0, N]`, or the 8x8 QWYC
    /// lattice. Drop targets default to 0 and 0.5 %.
    pub fn new(policy: PolicyKind) -> Self {
        Self {
            policy,
            thresholds: ThresholdGrid::Linspace(DEFAULT_GRID_POINTS),
            eps_grid: default_qwyc_lattice(),
            batches: vec![1],
            drop_targets: vec![0.0, 0.005],
            metric: AccuracyMetric::Accuracy,
        }
    }

    #[must_use]
    pub fn with_batches(mut self, batches: Vec<usize>) -> Self {
        self.batches = batches;
        self
    }

    #[must_use]
    pub fn with_thresholds(mut self, grid: ThresholdGrid) -> Self {
        self.thresholds = grid;
        self
    }

    fn policies(&self, num_trees: usize) -> Result<Vec<PolicyConfig>> {
        if self.drop_targets.iter().any(|&d| d.is_nan() || d < 0.0) {
            return Err(ArfError::InvalidConfig("drop targets must be >= 0".into()));
        }
        let out: Vec<PolicyConfig> = match self.policy {
            PolicyKind::Qwyc => self
                .eps_grid
                .iter()
                .map(|&(lo, hi)| PolicyConfig::qwyc(lo, hi))
                .collect(),
            PolicyKind::LastSm => self
                .thresholds
                .values(num_trees)
                .into_iter()
                .map(PolicyConfig::last_sm)
                .collect(),
            kind => {
                if self.batches.is_empty() {
                    return Err(ArfError::InvalidConfig("batch list is empty".into()));
                }
                let mut v = Vec::new();
                for alpha in self.thresholds.values(num_trees) {
                    for &b in &self.batches {
                        v.push(PolicyConfig {
                            kind,
                            ..PolicyConfig::agg_sm(alpha, b)
                        });
                    }
                }
                v
            }
        };
        if out.is_empty() {
            return Err(ArfError::InvalidConfig("threshold grid is empty".into()));
        }
        Ok(out)
    }
}

/// Interior 8x8 lattice: `eps_minus` in `(0, 0.5)`, `eps_plus` in `(0.5, 1)`.
pub fn default_qwyc_lattice() -> Vec<(f64, f64)> {
    let side = QWYC_LATTICE_SIDE;
    let step = 0.5 / (side + 1) as f64;
    let mut out = Vec::with_capacity(side * side);
    for i in 1..=side {
        for j in 1..=side {
            out.push((step * i as f64, 0.5 + step * j as f64));
        }
    }
    out
}

/// Static-forest metrics for a prefix of `trees` trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedPoint {
    pub trees: usize,
    pub accuracy: f64,
    pub macro_avg_accuracy: f64,
    pub avg_cycles: f64,
    pub avg_energy_uj: f64,
}

/// Best operating points meeting one accuracy-drop target for one batch size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropRow {
    pub drop: f64,
    pub batch: usize,
    /// Fewest average trees among points within the drop.
    pub min_trees: Option<ParetoPoint>,
    /// Lowest average energy among points within the drop.
    pub min_energy: Option<ParetoPoint>,
    /// Smallest static prefix forest within the drop.
    pub reduced_rf_trees: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Full-forest (static) metrics on the same test set.
    pub baseline: ReducedPoint,
    pub points: Vec<ParetoPoint>,
    /// Indices into `points` of the non-dominated set, in grid order.
    pub pareto: Vec<usize>,
    pub drop_table: Vec<DropRow>,
    /// Static prefix forests of every size `1..=N`.
    pub reduced: Vec<ReducedPoint>,
}

impl SweepResult {
    pub fn pareto_points(&self) -> Vec<ParetoPoint> {
        self.pareto
            .iter()
            .map(|&i| self.points[i].clone())
            .collect()
    }
}

/// Unweighted mean of per-class recall over classes present in `labels`.
pub fn macro_average_accuracy(labels: &[usize], predictions: &[usize], num_classes: usize) -> f64 {
    let mut support = vec![0usize; num_classes];
    let mut hits = vec![0usize; num_classes];
    for (&y, &p) in labels.iter().zip(predictions) {
        support[y] += 1;
        if y == p {
            hits[y] += 1;
        }
    }
    let recalls: Vec<f64> = support
        .iter()
        .zip(&hits)
        .filter(|(&s, _)| s > 0)
        .map(|(&s, &h)| h as f64 / s as f64)
        .collect();
    if recalls.is_empty() {
        0.0
    } else {
        recalls.iter().sum::<f64>() / recalls.len() as f64
    }
}

fn accuracy(labels: &[usize], predictions: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let hits = labels
        .iter()
        .zip(predictions)
        .filter(|(a, b)| a == b)
        .count();
    hits as f64 / labels.len() as f64
}

/// Indices of points not dominated in (accuracy up, avg_trees down).
pub fn pareto_front(points: &[ParetoPoint]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    // Sort by trees ascending, accuracy descending; a point survives if its
    // accuracy beats everything cheaper.
    order.sort_by(|&a, &b| {
        points[a]
            .avg_trees
            .total_cmp(&points[b].avg_trees)
            .then(points[b].accuracy.total_cmp(&points[a].accuracy))
    });
    let mut keep = vec![false; points.len()];
    let mut best_acc = f64::NEG_INFINITY;
    let mut i = 0;
    while i < order.len() {
        // Group exact duplicates in (trees, accuracy); they share a fate.
        let head = &points[order[i]];
        let mut j = i;
        while j < order.len()
            && points[order[j]].avg_trees == head.avg_trees
            && points[order[j]].accuracy == head.accuracy
        {
            j += 1;
        }
        if head.accuracy > best_acc {
            for &k in &order[i..j] {
                keep[k] = true;
            }
            best_acc = head.accuracy;
        }
        // Remaining points at the same cost but lower accuracy are dominated.
        while j < order.len() && points[order[j]].avg_trees == head.avg_trees {
            j += 1;
        }
        i = j;
    }
    (0..points.len()).filter(|&k| keep[k]).collect()
}

struct Prepared {
    inputs: Vec<QuantizedInput>,
    labels: Vec<usize>,
}

fn prepare(qf: &QuantizedForest, test: &Dataset) -> Result<Prepared> {
    if test.n_features() != qf.num_features() {
        return Err(ArfError::DimensionMismatch {
            expected: qf.num_features(),
            got: test.n_features(),
        });
    }
    if test.num_classes() > qf.num_classes() {
        return Err(ArfError::InvalidDataset(format!(
            "test set has {} classes, forest has {}",
            test.num_classes(),
            qf.num_classes()
        )));
    }
    if test.is_empty() {
        return Err(ArfError::InvalidDataset("test set is empty".into()));
    }
    let inputs = test
        .rows()
        .map(|x| quantize_input(x, qf))
        .collect::<Result<Vec<_>>>()?;
    Ok(Prepared {
        inputs,
        labels: test.labels().to_vec(),
    })
}

fn summarize(
    qf: &QuantizedForest,
    prepared: &Prepared,
    params: &CostParams,
    results: &[Inference],
) -> Result<(f64, f64, f64, f64, f64)> {
    let preds: Vec<usize> = results.iter().map(|r| r.class).collect();
    let n = results.len() as f64;
    let mut trees = 0.0;
    let mut cycles = 0.0;
    let mut energy = 0.0;
    for r in results {
        let c = estimate(&r.trace, qf.num_classes(), params)?;
        trees += r.trace.trees_executed as f64;
        cycles += c.cycles;
        energy += c.energy_uj;
    }
    Ok((
        accuracy(&prepared.labels, &preds),
        macro_average_accuracy(&prepared.labels, &preds, qf.num_classes()),
        trees / n,
        cycles / n,
        energy / n,
    ))
}

/// Evaluates one policy over the whole test set.
pub fn evaluate_policy(
    qf: &QuantizedForest,
    test: &Dataset,
    calibration: Option<&Dataset>,
    policy: &PolicyConfig,
    params: &CostParams,
) -> Result<ParetoPoint> {
    let prepared = prepare(qf, test)?;
    evaluate_prepared(qf, &prepared, calibration, policy, params)
}

fn evaluate_prepared(
    qf: &QuantizedForest,
    prepared: &Prepared,
    calibration: Option<&Dataset>,
    policy: &PolicyConfig,
    params: &CostParams,
) -> Result<ParetoPoint> {
    policy.validate(qf)?;
    let results: Vec<Inference> = if policy.kind == PolicyKind::Qwyc {
        let order = match calibration {
            Some(cal) => qwyc_order_trees(qf, cal, policy.eps_minus, policy.eps_plus)?,
            None => (0..qf.num_trees()).collect(),
        };
        prepared
            .inputs
            .par_iter()
            .map(|x| qwyc_infer(qf, &order, x, policy.eps_minus, policy.eps_plus))
            .collect::<Result<_>>()?
    } else {
        prepared
            .inputs
            .par_iter()
            .map(|x| adaptive_infer(qf, x, policy))
            .collect::<Result<_>>()?
    };
    let (accuracy, macro_avg_accuracy, avg_trees, avg_cycles, avg_energy_uj) =
        summarize(qf, prepared, params, &results)?;
    Ok(ParetoPoint {
        policy: policy.kind,
        threshold: match policy.kind {
            PolicyKind::Qwyc => Threshold::Eps {
                minus: policy.eps_minus,
                plus: policy.eps_plus,
            },
            _ => Threshold::Alpha(policy.alpha),
        },
        batch: policy.batch,
        accuracy,
        macro_avg_accuracy,
        avg_trees,
        avg_cycles,
        avg_energy_uj,
    })
}

/// Static accuracy and cost of every prefix forest `1..=N`, in one pass per
/// input.
pub fn reduced_rf_curve(
    qf: &QuantizedForest,
    test: &Dataset,
    params: &CostParams,
) -> Result<Vec<ReducedPoint>> {
    let prepared = prepare(qf, test)?;
    reduced_curve_prepared(qf, &prepared, params)
}

fn reduced_curve_prepared(
    qf: &QuantizedForest,
    prepared: &Prepared,
    params: &CostParams,
) -> Result<Vec<ReducedPoint>> {
    let n = qf.num_trees();
    let m = qf.num_classes();
    // Per input: (prediction, cumulative nodes) after each prefix size.
    let per_input: Vec<Vec<(usize, usize)>> = prepared
        .inputs
        .par_iter()
        .map(|x| {
            let mut scores = vec![0i32; m];
            let mut nodes = 0;
            let mut out = Vec::with_capacity(n);
            for k in 0..n {
                let v = tree_infer(qf, k, x)?;
                nodes += v.nodes_visited;
                for (s, &r) in scores.iter_mut().zip(v.leaf_row) {
                    *s += i32::from(r);
                }
                out.push((argmax_class(&scores)?, nodes));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let count = prepared.inputs.len() as f64;
    (0..n)
        .map(|k| {
            let preds: Vec<usize> = per_input.iter().map(|v| v[k].0).collect();
            let mut cycles = 0.0;
            let mut energy = 0.0;
            for v in &per_input {
                let trace = InferenceTrace {
                    trees_executed: k + 1,
                    nodes_visited: v[k].1,
                    score_accumulations: (k + 1) * m,
                    predicted_class: v[k].0,
                    ..InferenceTrace::default()
                };
                let c = estimate(&trace, m, params)?;
                cycles += c.cycles;
                energy += c.energy_uj;
            }
            Ok(ReducedPoint {
                trees: k + 1,
                accuracy: accuracy(&prepared.labels, &preds),
                macro_avg_accuracy: macro_average_accuracy(&prepared.labels, &preds, m),
                avg_cycles: cycles / count,
                avg_energy_uj: energy / count,
            })
        })
        .collect()
}

/// Trains one forest with `cfg`, quantizes it on `train`, and reports static
/// prefix forests of the requested sizes.
pub fn reduced_rf_baseline(
    train: &Dataset,
    test: &Dataset,
    cfg: &TrainConfig,
    sizes: &[usize],
    params: &CostParams,
) -> Result<Vec<ReducedPoint>> {
    if let Some(&bad) = sizes.iter().find(|&&s| s == 0 || s > cfg.num_trees) {
        return Err(ArfError::InvalidConfig(format!(
            "size {bad} outside 1..={}",
            cfg.num_trees
        )));
    }
    let forest = train_forest(train, cfg)?;
    let qf = quantize_forest(&forest, train)?;
    let curve = reduced_rf_curve(&qf, test, params)?;
    Ok(sizes.iter().map(|&s| curve[s - 1].clone()).collect())
}

/// Runs the sweep. `calibration` orders trees for QWYC (training order when
/// absent) and is ignored by the other policies.
pub fn run_sweep(
    qf: &QuantizedForest,
    test: &Dataset,
    calibration: Option<&Dataset>,
    spec: &SweepSpec,
    params: &CostParams,
) -> Result<SweepResult> {
    params.validate()?;
    let policies = spec.policies(qf.num_trees())?;
    for p in &policies {
        p.validate(qf)?;
    }
    let prepared = prepare(qf, test)?;
    let reduced = reduced_curve_prepared(qf, &prepared, params)?;
    let baseline = reduced
        .last()
        .expect("forest has at least one tree")
        .clone();

    let points = policies
        .iter()
        .map(|p| evaluate_prepared(qf, &prepared, calibration, p, params))
        .collect::<Result<Vec<_>>>()?;
    let pareto = pareto_front(&points);

    let metric = spec.metric;
    let base = match metric {
        AccuracyMetric::Accuracy => baseline.accuracy,
        AccuracyMetric::MacroAccuracy => baseline.macro_avg_accuracy,
    };
    let mut batches: Vec<usize> = Vec::new();
    for p in &points {
        if !batches.contains(&p.batch) {
            batches.push(p.batch);
        }
    }
    let mut drop_table = Vec::new();
    for &drop in &spec.drop_targets {
        let floor = base - drop - ACCURACY_EPS;
        let reduced_rf_trees = reduced
            .iter()
            .find(|r| metric.of_reduced(r) >= floor)
            .map(|r| r.trees);
        for &batch in &batches {
            let ok: Vec<&ParetoPoint> = points
                .iter()
                .filter(|p| p.batch == batch && metric.of_point(p) >= floor)
                .collect();
            let min_by = |key: fn(&ParetoPoint) -> f64| {
                ok.iter()
                    .copied()
                    .reduce(|a, b| if key(b) < key(a) { b } else { a })
                    .cloned()
            };
            drop_table.push(DropRow {
                drop,
                batch,
                min_trees: min_by(|p| p.avg_trees),
                min_energy: min_by(|p| p.avg_energy_uj),
                reduced_rf_trees,
            });
        }
    }

    Ok(SweepResult {
        baseline,
        points,
        pareto,
        drop_table,
        reduced,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::calibrate_defaults;
    use crate::engine::full_infer;
    use crate::synth::two_blobs;

    fn point(acc: f64, trees: f64) -> ParetoPoint {
        ParetoPoint {
            policy: PolicyKind::AggSm,
            threshold: Threshold::Alpha(0.0),
            batch: 1,
            accuracy: acc,
            macro_avg_accuracy: acc,
            avg_trees: trees,
            avg_cycles: 0.0,
            avg_energy_uj: 0.0,
        }
    }

    fn dominated_oracle(points: &[ParetoPoint], i: usize) -> bool {
        points.iter().any(|q| {
            q.accuracy >= points[i].accuracy
                && q.avg_trees <= points[i].avg_trees
                && (q.accuracy > points[i].accuracy || q.avg_trees < points[i].avg_trees)
        })
    }

    #[test]
    fn pareto_matches_quadratic_oracle() {
        let pts = vec![
            point(0.9, 10.0),
            point(0.95, 12.0),
            point(0.9, 8.0),
            point(0.97, 12.0),
            point(0.97, 12.0),
            point(0.8, 1.0),
            point(0.8, 2.0),
            point(0.99, 40.0),
        ];
        let front = pareto_front(&pts);
        let oracle: Vec<usize> = (0..pts.len())
            .filter(|&i| !dominated_oracle(&pts, i))
            .collect();
        assert_eq!(front, oracle);
        assert_eq!(front, vec![2, 3, 4, 5, 7]);
    }

    #[test]
    fn macro_accuracy_is_mean_recall() {
        // Confusion (rows = truth): class 0: 3/4 right, class 1: 1/2, class 2: 2/2.
        let labels = [0, 0, 0, 0, 1, 1, 2, 2];
        let preds = [0, 0, 0, 1, 1, 2, 2, 2];
        let expected = (0.75 + 0.5 + 1.0) / 3.0;
        assert!((macro_average_accuracy(&labels, &preds, 3) - expected).abs() < 1e-15);
        assert!((accuracy(&labels, &preds) - 6.0 / 8.0).abs() < 1e-15);
        // Absent classes do not count.
        assert_eq!(macro_average_accuracy(&[0, 0], &[0, 1], 3), 0.5);
    }

    #[test]
    fn lattice_is_interior_and_ordered() {
        let l = default_qwyc_lattice();
        assert_eq!(l.len(), 64);
        assert!(l
            .iter()
            .all(|&(a, b)| 0.0 < a && a < 0.5 && 0.5 < b && b < 1.0));
    }

    #[test]
    fn linspace_grid() {
        let v = ThresholdGrid::Linspace(5).values(40);
        assert_eq!(v, vec![0.0, 10.0, 20.0, 30.0, 40.0]);
        assert_eq!(ThresholdGrid::Linspace(64).values(40).len(), 64);
    }

    fn desk() -> (QuantizedForest, Dataset, Dataset) {
        let train = two_blobs(4, 1.5, 100, 3).unwrap();
        let test = two_blobs(4, 1.5, 50, 4).unwrap();
        let f = train_forest(&train, &TrainConfig::new(8, 3).with_seed(1)).unwrap();
        (quantize_forest(&f, &train).unwrap(), train, test)
    }

    #[test]
    fn unreachable_threshold_gives_full_forest() {
        let (qf, train, test) = desk();
        let spec =
            SweepSpec::new(PolicyKind::AggSm).with_thresholds(ThresholdGrid::Explicit(vec![8.0]));
        let r = run_sweep(&qf, &test, Some(&train), &spec, &calibrate_defaults()).unwrap();
        assert_eq!(r.points.len(), 1);
        assert_eq!(r.points[0].avg_trees, 8.0);
        assert_eq!(r.points[0].accuracy, r.baseline.accuracy);
        assert_eq!(r.baseline.trees, 8);
    }

    #[test]
    fn zero_threshold_stops_at_first_batch() {
        let (qf, train, test) = desk();
        let spec = SweepSpec::new(PolicyKind::AggSm)
            .with_thresholds(ThresholdGrid::Explicit(vec![0.0]))
            .with_batches(vec![1, 2, 4]);
        let r = run_sweep(&qf, &test, Some(&train), &spec, &calibrate_defaults()).unwrap();
        // Ties keep running, so the average can only exceed B by tied inputs.
        let tied: Vec<f64> = [1usize, 2, 4]
            .iter()
            .map(|&b| {
                let pol = PolicyConfig::agg_sm(0.0, b);
                test.rows()
                    .filter(|x| {
                        let q = quantize_input(x, &qf).unwrap();
                        adaptive_infer(&qf, &q, &pol).unwrap().trace.trees_executed != b
                    })
                    .count() as f64
            })
            .collect();
        for (p, (&b, &t)) in r.points.iter().zip([1usize, 2, 4].iter().zip(&tied)) {
            assert_eq!(p.batch, b);
            if t == 0.0 {
                assert_eq!(p.avg_trees, b as f64);
            } else {
                assert!(p.avg_trees > b as f64);
            }
        }
    }

    #[test]
    fn reduced_curve_matches_prefix_forests() {
        let (qf, _, test) = desk();
        let params = calibrate_defaults();
        let curve = reduced_rf_curve(&qf, &test, &params).unwrap();
        assert_eq!(curve.len(), 8);
        for size in [1, 3, 8] {
            let prefix = qf.prefix(size).unwrap();
            let preds: Vec<usize> = test
                .rows()
                .map(|x| {
                    full_infer(&prefix, &quantize_input(x, &prefix).unwrap())
                        .unwrap()
                        .class
                })
                .collect();
            assert_eq!(curve[size - 1].accuracy, accuracy(test.labels(), &preds));
        }
    }

    #[test]
    fn reduced_baseline_full_size_equals_full_accuracy() {
        let train = two_blobs(4, 1.5, 100, 3).unwrap();
        let test = two_blobs(4, 1.5, 50, 4).unwrap();
        let cfg = TrainConfig::new(8, 3).with_seed(1);
        let params = calibrate_defaults();
        let pts = reduced_rf_baseline(&train, &test, &cfg, &[1, 8], &params).unwrap();
        let (qf, _, _) = desk();
        let full = evaluate_policy(
            &qf,
            &test,
            None,
            &PolicyConfig::agg_sm(f64::INFINITY, 1),
            &params,
        )
        .unwrap();
        assert_eq!(pts[1].accuracy, full.accuracy);
        assert_eq!(pts[0].trees, 1);
        assert!(reduced_rf_baseline(&train, &test, &cfg, &[9], &params).is_err());
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let (qf, train, _) = desk();
        let other = two_blobs(3, 1.0, 10, 0).unwrap();
        let spec = SweepSpec::new(PolicyKind::AggSm);
        assert!(run_sweep(&qf, &other, Some(&train), &spec, &calibrate_defaults()).is_err());
    }
}
