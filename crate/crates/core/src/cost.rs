//! Linear cycle and energy model for single-core MCU inference.
//!
//! ```text
//! cycles = fixed
//!        + nodes_visited * cycles_per_node + trees_executed * cycles_tree_overhead
//!        + score_accumulations * cycles_per_class_accum
//!        + policy_evaluations * M * cycles_policy(kind)
//! energy_uj = cycles / (freq_mhz * 1e6) * power_mw * 1e3
//! ```
//!
//! Memory-hierarchy and pipeline effects are not modelled. The numbers are
//! meant for relative comparisons between policies and batch sizes.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::InferenceTrace;
use crate::error::{ArfError, Result};
use crate::policy::PolicyKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub cycles_per_node: f64,
    pub cycles_per_class_accum: f64,
    /// Per class scanned by the max-score check (also QWYC's bound compare).
    pub cycles_policy_max: f64,
    /// Per class scanned by a score-margin check.
    pub cycles_policy_sm: f64,
    pub cycles_tree_overhead: f64,
    pub cycles_fixed: f64,
    pub power_mw: f64,
    pub freq_mhz: f64,
    #[serde(default)]
    pub description: String,
}

/// Config-file keys, in file order.
pub const COST_KEYS: [&str; 8] = [
    "cycles_per_node",
    "cycles_per_class_accum",
    "cycles_policy_max",
    "cycles_policy_sm",
    "cycles_tree_overhead",
    "cycles_fixed",
    "power_mw",
    "freq_mhz",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CycleBreakdown {
    /// Node visits plus per-tree loop overhead.
    pub traversal: f64,
    pub accumulation: f64,
    pub policy: f64,
    pub fixed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub cycles: f64,
    pub energy_uj: f64,
    pub breakdown: CycleBreakdown,
}

impl CostParams {
    fn values(&self) -> [f64; 8] {
        [
            self.cycles_per_node,
            self.cycles_per_class_accum,
            self.cycles_policy_max,
            self.cycles_policy_sm,
            self.cycles_tree_overhead,
            self.cycles_fixed,
            self.power_mw,
            self.freq_mhz,
        ]
    }

    fn field_mut(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "cycles_per_node" => &mut self.cycles_per_node,
            "cycles_per_class_accum" => &mut self.cycles_per_class_accum,
            "cycles_policy_max" => &mut self.cycles_policy_max,
            "cycles_policy_sm" => &mut self.cycles_policy_sm,
            "cycles_tree_overhead" => &mut self.cycles_tree_overhead,
            "cycles_fixed" => &mut self.cycles_fixed,
            "power_mw" => &mut self.power_mw,
            "freq_mhz" => &mut self.freq_mhz,
            _ => return None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        for (key, v) in COST_KEYS.iter().zip(self.values()) {
            if !v.is_finite() || v < 0.0 {
                return Err(ArfError::InvalidConfig(format!(
                    "{key} must be finite and >= 0, got {v}"
                )));
            }
        }
        if self.freq_mhz <= 0.0 {
            return Err(ArfError::InvalidConfig("freq_mhz must be > 0".into()));
        }
        Ok(())
    }

    /// Per-class cost of one policy evaluation.
    pub fn policy_cycles_per_class(&self, kind: PolicyKind) -> f64 {
        match kind {
            PolicyKind::AggMax | PolicyKind::Qwyc => self.cycles_policy_max,
            PolicyKind::AggSm | PolicyKind::LastSm => self.cycles_policy_sm,
        }
    }

    pub fn energy_uj(&self, cycles: f64) -> f64 {
        cycles / (self.freq_mhz * 1e6) * self.power_mw * 1e3
    }

    /// Parses `key = value` lines. `#` starts a comment. Keys not present
    /// keep their [`calibrate_defaults`] value; unknown keys are errors.
    pub fn parse_config(text: &str) -> Result<Self> {
        let mut params = calibrate_defaults();
        params.description = "defaults overridden by config file".into();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ArfError::InvalidConfig(format!("line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim();
            let value: f64 = value.trim().parse().map_err(|_| {
                ArfError::InvalidConfig(format!(
                    "line {}: `{}` is not a number",
                    lineno + 1,
                    value.trim()
                ))
            })?;
            *params.field_mut(key).ok_or_else(|| {
                ArfError::InvalidConfig(format!("line {}: unknown key `{key}`", lineno + 1))
            })? = value;
        }
        params.validate()?;
        Ok(params)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse_config(&std::fs::read_to_string(path)?)
    }

    pub fn to_config(&self) -> String {
        let mut out = String::new();
        for line in self.description.lines() {
            let _ = writeln!(out, "# {line}");
        }
        for (key, v) in COST_KEYS.iter().zip(self.values()) {
            let _ = writeln!(out, "{key} = {v}");
        }
        out
    }
}

/// Shipped default parameters.
///
/// Clock frequency is 205 MHz, typical of a small 22 nm RISC-V microcontroller.
/// Per-operation cycle counts are estimates for an RV32IMC core running the
/// flat-array loop without FPU: a node visit is a load of the record, a
/// feature load, a compare and a branch; accumulation is a load/add/store per
/// class. Power is chosen so a 40-tree, depth-3, 2-class forest lands near
/// 0.05 uJ per inference. None of these are measured values.
pub fn calibrate_defaults() -> CostParams {
    CostParams {
        cycles_per_node: 8.0,
        cycles_per_class_accum: 3.0,
        cycles_policy_max: 3.0,
        cycles_policy_sm: 5.0,
        cycles_tree_overhead: 10.0,
        cycles_fixed: 50.0,
        power_mw: 5.0,
        freq_mhz: 205.0,
        description: "estimated RV32 defaults: 205 MHz clock, 5 mW; per-operation cycle \
                      counts are unmeasured estimates"
            .into(),
    }
}

/// Cycles and energy for one trace on an `num_classes`-class forest.
pub fn estimate(
    trace: &InferenceTrace,
    num_classes: usize,
    params: &CostParams,
) -> Result<CostReport> {
    params.validate()?;
    if trace.nodes_visited < trace.trees_executed {
        return Err(ArfError::InvalidConfig(format!(
            "trace visits {} nodes over {} trees",
            trace.nodes_visited, trace.trees_executed
        )));
    }
    let policy_per_class = trace
        .policy
        .map_or(0.0, |k| params.policy_cycles_per_class(k));
    let breakdown = CycleBreakdown {
        traversal: trace.nodes_visited as f64 * params.cycles_per_node
            + trace.trees_executed as f64 * params.cycles_tree_overhead,
        accumulation: trace.score_accumulations as f64 * params.cycles_per_class_accum,
        policy: trace.policy_evaluations as f64 * num_classes as f64 * policy_per_class,
        fixed: params.cycles_fixed,
    };
    let cycles = breakdown.traversal + breakdown.accumulation + breakdown.policy + breakdown.fixed;
    Ok(CostReport {
        cycles,
        energy_uj: params.energy_uj(cycles),
        breakdown,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_params() -> CostParams {
        CostParams {
            cycles_per_node: 1.0,
            cycles_per_class_accum: 1.0,
            cycles_policy_max: 1.0,
            cycles_policy_sm: 1.0,
            cycles_tree_overhead: 1.0,
            cycles_fixed: 1.0,
            power_mw: 1000.0,
            freq_mhz: 1.0,
            description: String::new(),
        }
    }

    fn trace(
        trees: usize,
        nodes: usize,
        evals: usize,
        policy: Option<PolicyKind>,
    ) -> InferenceTrace {
        InferenceTrace {
            trees_executed: trees,
            nodes_visited: nodes,
            score_accumulations: trees * 2,
            policy_evaluations: evals,
            stopped_early: false,
            predicted_class: 0,
            policy,
        }
    }

    #[test]
    fn zero_trace_costs_fixed_only() {
        let p = calibrate_defaults();
        let r = estimate(&InferenceTrace::default(), 2, &p).unwrap();
        assert_eq!(r.cycles, p.cycles_fixed);
        assert_eq!(
            r.breakdown.traversal + r.breakdown.accumulation + r.breakdown.policy,
            0.0
        );
    }

    #[test]
    fn unit_params_sum_counters() {
        let t = trace(3, 9, 2, Some(PolicyKind::AggSm));
        let r = estimate(&t, 2, &unit_params()).unwrap();
        // fixed 1 + nodes 9 + trees 3 + accum 6 + policy 2*2
        assert_eq!(r.cycles, 23.0);
        assert!((r.energy_uj - 23.0).abs() < 1e-9);
        let b = r.breakdown;
        assert_eq!(b.traversal + b.accumulation + b.policy + b.fixed, r.cycles);
    }

    #[test]
    fn energy_identity() {
        let p = calibrate_defaults();
        let r = estimate(&trace(40, 160, 0, None), 2, &p).unwrap();
        let expected = r.cycles / (p.freq_mhz * 1e6) * p.power_mw * 1e3;
        assert!((r.energy_uj - expected).abs() < 1e-15);
    }

    #[test]
    fn fewer_policy_evaluations_cost_less() {
        let p = calibrate_defaults();
        let b1 = estimate(&trace(8, 32, 8, Some(PolicyKind::AggSm)), 2, &p).unwrap();
        let b2 = estimate(&trace(8, 32, 4, Some(PolicyKind::AggSm)), 2, &p).unwrap();
        assert!(b1.breakdown.policy >= b2.breakdown.policy);
        assert!(b1.cycles > b2.cycles);
    }

    #[test]
    fn defaults_are_positive_and_at_205_mhz() {
        let p = calibrate_defaults();
        assert_eq!(p.freq_mhz, 205.0);
        assert!(p.values().iter().all(|&v| v > 0.0));
        assert!(!p.description.is_empty());
    }

    #[test]
    fn counters_are_monotone() {
        let p = calibrate_defaults();
        let base = trace(5, 15, 3, Some(PolicyKind::AggMax));
        let c0 = estimate(&base, 3, &p).unwrap().cycles;
        for bump in 0..4 {
            let mut t = base.clone();
            match bump {
                0 => t.trees_executed += 1,
                1 => t.nodes_visited += 1,
                2 => t.score_accumulations += 1,
                _ => t.policy_evaluations += 1,
            }
            assert!(estimate(&t, 3, &p).unwrap().cycles >= c0);
        }
    }

    #[test]
    fn config_round_trip_and_errors() {
        let p = calibrate_defaults();
        let parsed = CostParams::parse_config(&p.to_config()).unwrap();
        assert_eq!(parsed.values(), p.values());
        let partial =
            CostParams::parse_config("# comment\npower_mw = 2.5\n\nfreq_mhz=100 # trailing\n")
                .unwrap();
        assert_eq!(partial.power_mw, 2.5);
        assert_eq!(partial.freq_mhz, 100.0);
        assert_eq!(partial.cycles_per_node, p.cycles_per_node);
        assert!(CostParams::parse_config("bogus = 1").is_err());
        assert!(CostParams::parse_config("power_mw 1").is_err());
        assert!(CostParams::parse_config("power_mw = abc").is_err());
        assert!(CostParams::parse_config("power_mw = -1").is_err());
        assert!(CostParams::parse_config("freq_mhz = 0").is_err());
    }

    #[test]
    fn malformed_trace_is_rejected() {
        let t = trace(4, 2, 0, None);
        assert!(estimate(&t, 2, &calibrate_defaults()).is_err());
    }
}
