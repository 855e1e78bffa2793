//! End-to-end orchestration: preprocessing, per-fragment segmentation,
//! region matching and output writing.

pub mod config;
pub mod preprocess;
pub mod report;
pub mod run;

pub use config::{ConfigOverrides, PipelineConfig, Preset};
pub use preprocess::preprocess;
pub use report::{FragmentCounts, MatchSummary, MetricsReport, PipelineReport};
pub use run::{assemble, run_pipeline, segment_fragment, Assembly, FragmentSegmentation};
