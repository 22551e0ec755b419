//! Random forest classifiers with runtime-tunable early stopping.
//!
//! The pipeline is: [`trainer`] grows a float [`forest::Forest`],
//! [`quantize`] flattens it into 16-bit FOREST / ROOT / LEAVES arrays,
//! [`engine`] runs static or adaptive inference on those arrays and records
//! per-input work counters, [`cost`] turns counters into cycles and energy,
//! and [`sweep`] explores accuracy vs cost across stopping thresholds.
//! [`codegen`] emits the quantized arrays as C for microcontroller builds.

pub mod codegen;
pub mod cost;
pub mod dataset;
pub mod engine;
pub mod error;
pub mod forest;
pub mod ingest;
pub mod policy;
pub mod quantize;
pub mod report;
pub mod sweep;
pub mod synth;
pub mod trainer;

pub use codegen::export_c;
pub use cost::{calibrate_defaults, estimate, CostParams, CostReport};
pub use dataset::Dataset;
pub use engine::{
    adaptive_infer, full_infer, qwyc_infer, qwyc_order_trees, tree_infer, Inference, InferenceTrace,
};
pub use error::{ArfError, Result};
pub use forest::{argmax_class, Forest, TreeNode};
pub use ingest::{ingest_csv, CsvOptions, LabelColumn};
pub use policy::{conf_agg_max, conf_agg_sm, conf_last_sm, PolicyConfig, PolicyKind};
pub use quantize::{
    comparison_consistency_check, quantize_forest, quantize_input, QuantizedForest, QuantizedInput,
};
pub use report::Format;
pub use sweep::{run_sweep, ParetoPoint, SweepResult, SweepSpec};
pub use trainer::{train_forest, train_test_split, TrainConfig};
