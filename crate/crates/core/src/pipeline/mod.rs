//! Batch commands over files on disk: extraction, labeling, statistics,
//! ROC curves, fixation alignment and the comparison report.

pub mod commands;
pub mod config;
pub mod io;
pub mod manifest;
pub mod report;

pub use commands::{
    cmd_extract, cmd_fixations, cmd_label, cmd_metrics, cmd_roc, load_sentences, CommandOutcome,
    FixationReport, MetricsReport, PipelineError, RocSummary, TaskAggregate,
};
pub use config::{ConfigError, PipelineConfig, ProviderKind};
pub use manifest::{RunManifest, SentenceStatus};
pub use report::cmd_report;
