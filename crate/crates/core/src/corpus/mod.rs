//! Manifest-driven corpus pipeline: validation, statistics, stage runner
//! with a hash ledger, and the report bundle.

pub mod config;
pub mod ledger;
pub mod manifest;
pub mod report;
pub mod stages;
pub mod stats;

pub use config::{ClassifyConfig, ExplainConfig, ExplainMode, PairingConfig, PipelineConfig};
pub use ledger::{RunLedger, Stage};
pub use manifest::{load_manifest, Manifest, ManifestHeader};
pub use report::{read_index, write_report, ReportIndex, REPORT_SOURCES};
pub use stages::{run_stages, RunOptions, StageOutcome, TrainSettings};
pub use stats::{corpus_stats, write_stats, CorpusStats};
