//! Early-stopping policies and their confidence measures.
//!
//! Aggregated scores are running sums of leaf probability rows, so
//! thresholds are expressed in probability-sum units: `0 <= alpha <= N`.
//! The engine compares in fixed point against `round(alpha * leaf_one)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ArfError, Result};
use crate::quantize::QuantizedForest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    /// Largest aggregated score.
    AggMax,
    /// Margin between the two largest aggregated scores.
    AggSm,
    /// Margin of the most recent tree's leaf row only.
    LastSm,
    /// Binary running-mean probability bounds over a static tree order.
    Qwyc,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::AggMax => "agg-max",
            PolicyKind::AggSm => "agg-sm",
            PolicyKind::LastSm => "last-sm",
            PolicyKind::Qwyc => "qwyc",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = ArfError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "agg-max" => Ok(PolicyKind::AggMax),
            "agg-sm" => Ok(PolicyKind::AggSm),
            "last-sm" => Ok(PolicyKind::LastSm),
            "qwyc" => Ok(PolicyKind::Qwyc),
            other => Err(ArfError::InvalidPolicy(format!(
                "unknown policy `{other}` (expected agg-sm, agg-max, last-sm or qwyc)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    /// Stop threshold for AggMax / AggSm / LastSm.
    pub alpha: f64,
    /// QWYC lower bound on the running mean positive-class probability.
    pub eps_minus: f64,
    /// QWYC upper bound.
    pub eps_plus: f64,
    /// Trees per policy evaluation (AggMax / AggSm only).
    pub batch: usize,
}

impl PolicyConfig {
    pub fn agg_sm(alpha: f64, batch: usize) -> Self {
        Self {
            kind: PolicyKind::AggSm,
            alpha,
            eps_minus: 0.0,
            eps_plus: 1.0,
            batch,
        }
    }

    pub fn agg_max(alpha: f64, batch: usize) -> Self {
        Self {
            kind: PolicyKind::AggMax,
            ..Self::agg_sm(alpha, batch)
        }
    }

    pub fn last_sm(alpha: f64) -> Self {
        Self {
            kind: PolicyKind::LastSm,
            ..Self::agg_sm(alpha, 1)
        }
    }

    pub fn qwyc(eps_minus: f64, eps_plus: f64) -> Self {
        Self {
            kind: PolicyKind::Qwyc,
            alpha: 0.0,
            eps_minus,
            eps_plus,
            batch: 1,
        }
    }

    /// Checks the policy against the forest it will run on.
    pub fn validate(&self, qf: &QuantizedForest) -> Result<()> {
        let m = qf.num_classes();
        let n = qf.num_trees();
        match self.kind {
            PolicyKind::AggMax | PolicyKind::AggSm | PolicyKind::LastSm => {
                if self.alpha.is_nan() || self.alpha < 0.0 {
                    return Err(ArfError::InvalidPolicy(format!(
                        "alpha must be >= 0, got {}",
                        self.alpha
                    )));
                }
                if self.kind != PolicyKind::AggMax && m < 2 {
                    return Err(ArfError::UnsupportedClassCount {
                        operation: "score margin",
                        required: ">= 2",
                        got: m,
                    });
                }
                let batch_ok = if self.kind == PolicyKind::LastSm {
                    self.batch == 1
                } else {
                    (1..=n).contains(&self.batch)
                };
                if !batch_ok {
                    return Err(ArfError::InvalidPolicy(format!(
                        "batch {} invalid for {} on {n} trees",
                        self.batch, self.kind
                    )));
                }
            }
            PolicyKind::Qwyc => {
                check_qwyc_classes(m)?;
                check_eps(self.eps_minus, self.eps_plus)?;
            }
        }
        Ok(())
    }
}

pub(crate) fn check_qwyc_classes(m: usize) -> Result<()> {
    if m != 2 {
        return Err(ArfError::UnsupportedClassCount {
            operation: "QWYC",
            required: "exactly 2",
            got: m,
        });
    }
    Ok(())
}

pub(crate) fn check_eps(eps_minus: f64, eps_plus: f64) -> Result<()> {
    if !(0.0 <= eps_minus && eps_minus <= eps_plus && eps_plus <= 1.0) {
        return Err(ArfError::InvalidPolicy(format!(
            "need 0 <= eps_minus <= eps_plus <= 1, got ({eps_minus}, {eps_plus})"
        )));
    }
    Ok(())
}

/// Threshold in fixed point; `+inf` saturates so it is never exceeded.
pub(crate) fn alpha_fixed(alpha: f64, leaf_one: i32) -> i64 {
    (alpha * f64::from(leaf_one)).round() as i64
}

/// Largest entry, in fixed point.
pub(crate) fn max_fixed(scores: &[i32]) -> i64 {
    scores.iter().copied().max().map_or(0, i64::from)
}

/// Largest minus second-largest entry. Needs at least two entries.
pub(crate) fn margin_fixed<T: Copy + Into<i64>>(scores: &[T]) -> i64 {
    let mut first = i64::MIN;
    let mut second = i64::MIN;
    for &v in scores {
        let v: i64 = v.into();
        if v > first {
            second = first;
            first = v;
        } else if v > second {
            second = v;
        }
    }
    first - second
}

fn to_units(v: i64, leaf_one: i32) -> f64 {
    v as f64 / f64::from(leaf_one)
}

/// Aggregated max confidence in probability-sum units.
pub fn conf_agg_max(scores: &[i32], leaf_one: i32) -> f64 {
    to_units(max_fixed(scores), leaf_one)
}

/// Aggregated score margin in probability-sum units.
pub fn conf_agg_sm(scores: &[i32], leaf_one: i32) -> Result<f64> {
    if scores.len() < 2 {
        return Err(ArfError::UnsupportedClassCount {
            operation: "score margin",
            required: ">= 2",
            got: scores.len(),
        });
    }
    Ok(to_units(margin_fixed(scores), leaf_one))
}

/// Score margin of a single leaf row.
pub fn conf_last_sm(row: &[i16], leaf_one: i32) -> Result<f64> {
    if row.len() < 2 {
        return Err(ArfError::UnsupportedClassCount {
            operation: "score margin",
            required: ">= 2",
            got: row.len(),
        });
    }
    Ok(to_units(margin_fixed(row), leaf_one))
}

/// Float-domain score margin.
pub fn score_margin(scores: &[f64]) -> Result<f64> {
    if scores.len() < 2 {
        return Err(ArfError::UnsupportedClassCount {
            operation: "score margin",
            required: ">= 2",
            got: scores.len(),
        });
    }
    let mut first = f64::NEG_INFINITY;
    let mut second = f64::NEG_INFINITY;
    for &v in scores {
        if v > first {
            second = first;
            first = v;
        } else if v > second {
            second = v;
        }
    }
    Ok(first - second)
}
