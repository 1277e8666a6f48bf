//! Metrics, datasets, synthetic repositories and the ablation harness.

pub mod dataset;
pub mod harness;
pub mod metrics;
pub mod synth;

pub use dataset::{load_dataset, read_dataset, save_dataset, write_dataset, EvalRecord};
pub use harness::{
    ablation_strategies, run_ablation, run_eval, summary_table, write_report, EvalReport,
    RecordMetrics, Strategy,
};
pub use metrics::{chrf, context_recall, DEFAULT_CHRF_BETA, DEFAULT_CHRF_ORDER};
pub use synth::{generate_synthetic_repo, synthesize, SynthConfig, SyntheticRepo};
