//! Integer-only inference over a [`QuantizedForest`].
//!
//! * [`tree_infer`] walks one tree: `x[fidx] > th` goes to `right`,
//!   otherwise to the implicit left child `i + 1`.
//! * [`full_infer`] accumulates every tree's leaf row into 32-bit scores.
//! * [`adaptive_infer`] runs trees in stored order, batch by batch, and
//!   evaluates the policy after each complete batch that does not end the
//!   forest. It stops at the first evaluation whose confidence is strictly
//!   above the threshold.
//! * [`qwyc_infer`] and [`qwyc_order_trees`] implement the binary
//!   running-mean baseline with a static tree order.
//!
//! Every call owns its scratch scores and trace, so one forest can be shared
//! by any number of concurrent callers.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{ArfError, Result};
use crate::forest::argmax_class;
use crate::policy::{self, PolicyConfig, PolicyKind};
use crate::quantize::{quantize_input, QuantizedForest, QuantizedInput};

/// Per-input work counters fed to the cost model.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferenceTrace {
    pub trees_executed: usize,
    pub nodes_visited: usize,
    /// Per-class additions into the score accumulator.
    pub score_accumulations: usize,
    pub policy_evaluations: usize,
    /// True iff fewer than `N` trees ran.
    pub stopped_early: bool,
    pub predicted_class: usize,
    /// Policy that produced the trace; `None` for static inference.
    pub policy: Option<PolicyKind>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inference {
    pub class: usize,
    /// Aggregated fixed-point scores at stop time.
    pub scores: Vec<i32>,
    pub trace: InferenceTrace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeVisit<'a> {
    pub leaf_row: &'a [i16],
    /// Row index into LEAVES.
    pub leaf_index: usize,
    pub nodes_visited: usize,
}

/// Walks tree `tree_idx` down to its leaf. Any index that escapes the
/// arrays, or a walk longer than the node count, is a structural error.
pub fn tree_infer<'a>(
    qf: &'a QuantizedForest,
    tree_idx: usize,
    x: &QuantizedInput,
) -> Result<TreeVisit<'a>> {
    let root = *qf.roots().get(tree_idx).ok_or_else(|| {
        ArfError::Structural(format!(
            "tree {tree_idx} out of range 0..{}",
            qf.num_trees()
        ))
    })?;
    let nodes = qf.nodes();
    let xs = x.values();
    let mut i = usize::from(root);
    let mut visited = 0usize;
    loop {
        let node = nodes
            .get(i)
            .ok_or_else(|| ArfError::Structural(format!("node index {i} out of bounds")))?;
        visited += 1;
        if node.is_leaf() {
            let leaf_index = usize::from(node.right);
            let leaf_row = qf.leaf_row(leaf_index).ok_or_else(|| {
                ArfError::Structural(format!(
                    "leaf {i} points at missing LEAVES row {leaf_index}"
                ))
            })?;
            return Ok(TreeVisit {
                leaf_row,
                leaf_index,
                nodes_visited: visited,
            });
        }
        if visited > nodes.len() {
            return Err(ArfError::Structural(format!(
                "tree {tree_idx} does not terminate"
            )));
        }
        let feature = *usize::try_from(node.fidx)
            .ok()
            .and_then(|f| xs.get(f))
            .ok_or_else(|| ArfError::Structural(format!("node {i} has fidx {}", node.fidx)))?;
        i = if feature > node.th {
            usize::from(node.right)
        } else {
            i + 1
        };
    }
}

fn check_input(qf: &QuantizedForest, x: &QuantizedInput) -> Result<()> {
    if x.values().len() != qf.num_features() {
        return Err(ArfError::DimensionMismatch {
            expected: qf.num_features(),
            got: x.values().len(),
        });
    }
    Ok(())
}

fn accumulate(scores: &mut [i32], row: &[i16]) {
    for (s, &v) in scores.iter_mut().zip(row) {
        *s += i32::from(v);
    }
}

/// Static inference: every tree, then argmax.
pub fn full_infer(qf: &QuantizedForest, x: &QuantizedInput) -> Result<Inference> {
    check_input(qf, x)?;
    let m = qf.num_classes();
    let mut scores = vec![0i32; m];
    let mut nodes_visited = 0;
    for k in 0..qf.num_trees() {
        let visit = tree_infer(qf, k, x)?;
        nodes_visited += visit.nodes_visited;
        accumulate(&mut scores, visit.leaf_row);
    }
    let class = argmax_class(&scores)?;
    Ok(Inference {
        class,
        trace: InferenceTrace {
            trees_executed: qf.num_trees(),
            nodes_visited,
            score_accumulations: qf.num_trees() * m,
            policy_evaluations: 0,
            stopped_early: false,
            predicted_class: class,
            policy: None,
        },
        scores,
    })
}

/// Early-stopping inference under `policy`. QWYC runs in stored tree order
/// here; use [`qwyc_infer`] for a calibrated order.
pub fn adaptive_infer(
    qf: &QuantizedForest,
    x: &QuantizedInput,
    policy: &PolicyConfig,
) -> Result<Inference> {
    policy.validate(qf)?;
    if policy.kind == PolicyKind::Qwyc {
        let order: Vec<usize> = (0..qf.num_trees()).collect();
        return qwyc_infer(qf, &order, x, policy.eps_minus, policy.eps_plus);
    }
    check_input(qf, x)?;
    let n = qf.num_trees();
    let m = qf.num_classes();
    let alpha = policy::alpha_fixed(policy.alpha, qf.leaf_one());
    let mut scores = vec![0i32; m];
    let mut trace = InferenceTrace {
        policy: Some(policy.kind),
        ..InferenceTrace::default()
    };

    let mut t = 0;
    while t < n {
        let end = (t + policy.batch).min(n);
        let mut last_row: &[i16] = &[];
        for k in t..end {
            let visit = tree_infer(qf, k, x)?;
            trace.nodes_visited += visit.nodes_visited;
            accumulate(&mut scores, visit.leaf_row);
            last_row = visit.leaf_row;
        }
        t = end;
        // The final batch always falls through to the argmax.
        if t == n {
            break;
        }
        trace.policy_evaluations += 1;
        let confidence = match policy.kind {
            PolicyKind::AggMax => policy::max_fixed(&scores),
            PolicyKind::AggSm => policy::margin_fixed(&scores),
            PolicyKind::LastSm => policy::margin_fixed(last_row),
            PolicyKind::Qwyc => unreachable!("handled above"),
        };
        if confidence > alpha {
            break;
        }
    }

    let class = argmax_class(&scores)?;
    trace.trees_executed = t;
    trace.score_accumulations = t * m;
    trace.stopped_early = t < n;
    trace.predicted_class = class;
    Ok(Inference {
        class,
        scores,
        trace,
    })
}

/// Decision of the running-mean rule after `t` trees with positive-class sum
/// `positive`: `Some(0)` below `eps_minus`, `Some(1)` above `eps_plus`.
fn qwyc_exit(
    positive: i64,
    t: usize,
    leaf_one: i32,
    eps_minus: f64,
    eps_plus: f64,
) -> Option<usize> {
    let mean = positive as f64 / (t as f64 * f64::from(leaf_one));
    if mean < eps_minus {
        Some(0)
    } else if mean > eps_plus {
        Some(1)
    } else {
        None
    }
}

fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(ArfError::InvalidPolicy(format!(
            "tree order has {} entries for {n} trees",
            order.len()
        )));
    }
    for &k in order {
        if k >= n || std::mem::replace(&mut seen[k], true) {
            return Err(ArfError::InvalidPolicy(format!(
                "tree order {order:?} is not a permutation of 0..{n}"
            )));
        }
    }
    Ok(())
}

/// Binary early stopping on the running mean positive-class probability,
/// visiting trees in `order`. The rule is checked after every tree but the
/// last; without an exit the result is the full argmax.
pub fn qwyc_infer(
    qf: &QuantizedForest,
    order: &[usize],
    x: &QuantizedInput,
    eps_minus: f64,
    eps_plus: f64,
) -> Result<Inference> {
    policy::check_qwyc_classes(qf.num_classes())?;
    policy::check_eps(eps_minus, eps_plus)?;
    check_permutation(order, qf.num_trees())?;
    check_input(qf, x)?;
    let n = qf.num_trees();
    let mut scores = vec![0i32; 2];
    let mut trace = InferenceTrace {
        policy: Some(PolicyKind::Qwyc),
        ..InferenceTrace::default()
    };
    let mut decided = None;
    for (pos, &k) in order.iter().enumerate() {
        let visit = tree_infer(qf, k, x)?;
        trace.nodes_visited += visit.nodes_visited;
        accumulate(&mut scores, visit.leaf_row);
        trace.trees_executed = pos + 1;
        if pos + 1 == n {
            break;
        }
        trace.policy_evaluations += 1;
        decided = qwyc_exit(
            i64::from(scores[1]),
            pos + 1,
            qf.leaf_one(),
            eps_minus,
            eps_plus,
        );
        if decided.is_some() {
            break;
        }
    }
    let class = match decided {
        Some(c) => c,
        None => argmax_class(&scores)?,
    };
    trace.score_accumulations = trace.trees_executed * 2;
    trace.stopped_early = trace.trees_executed < n;
    trace.predicted_class = class;
    Ok(Inference {
        class,
        scores,
        trace,
    })
}

/// Greedy static tree order for [`qwyc_infer`].
///
/// At each position, the unplaced tree that makes the most still-running
/// calibration inputs exit at that position is placed next (ties go to the
/// lowest tree index). Inputs that exit are dropped from later counts.
pub fn qwyc_order_trees(
    qf: &QuantizedForest,
    calibration: &Dataset,
    eps_minus: f64,
    eps_plus: f64,
) -> Result<Vec<usize>> {
    policy::check_qwyc_classes(qf.num_classes())?;
    policy::check_eps(eps_minus, eps_plus)?;
    let n = qf.num_trees();
    // positive[i * n + k]: positive-class leaf value of tree k on input i.
    let mut positive = Vec::with_capacity(calibration.len() * n);
    for x in calibration.rows() {
        let q = quantize_input(x, qf)?;
        for k in 0..n {
            positive.push(i64::from(tree_infer(qf, k, &q)?.leaf_row[1]));
        }
    }
    let mut running = vec![0i64; calibration.len()];
    let mut alive: Vec<usize> = (0..calibration.len()).collect();
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);

    for pos in 0..n {
        let t = pos + 1;
        let mut best: Option<(usize, usize)> = None;
        for k in (0..n).filter(|&k| !placed[k]) {
            let exits = if t == n {
                0
            } else {
                alive
                    .iter()
                    .filter(|&&i| {
                        qwyc_exit(
                            running[i] + positive[i * n + k],
                            t,
                            qf.leaf_one(),
                            eps_minus,
                            eps_plus,
                        )
                        .is_some()
                    })
                    .count()
            };
            if best.is_none_or(|(_, e)| exits > e) {
                best = Some((k, exits));
            }
        }
        let (k, _) = best.expect("an unplaced tree remains");
        placed[k] = true;
        order.push(k);
        for &i in &alive {
            running[i] += positive[i * n + k];
        }
        alive.retain(|&i| qwyc_exit(running[i], t, qf.leaf_one(), eps_minus, eps_plus).is_none());
    }
    Ok(order)
}
