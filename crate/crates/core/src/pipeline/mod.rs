//! Orchestration of whole runs: configuration, per-month stages, report
//! files and the temporal follow-ups that read them.

mod config;
mod output;
mod reports;
mod run;
mod synth;

pub use config::{
    config_hash, ConsensusConfig, DriftConfig, InputConfig, RunConfig, SamplingConfig, SearchConfig, StabilityConfig,
    StrategyConfig,
};
pub use output::{bar_chart_svg, fmt_f64, heatmap_svg, OutputDir};
pub use reports::{load_partitions, partition_path, run_drift, run_stability, DriftSummary, MonthPartition, StabilitySummary};
pub use run::{
    load_months, run_pipeline, MetricScore, MonthFailure, MonthInput, MonthReport, MonthRun, PipelineSummary, Stage,
    CORRELATION_CUTOFF,
};
pub use synth::{write_synthetic, SynthFiles, SynthRequest};
