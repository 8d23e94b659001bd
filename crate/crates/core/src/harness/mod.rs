//! Multi-method experiments: CHESHIRE against PageRank / out-degree
//! allocations and uncontrolled dynamics at a matched budget, with metrics
//! and CSV/SVG reports.

mod config;
mod metrics;
mod report;
mod run;

pub use config::{CalibrationSettings, ControlTemplate, ExperimentConfig, Method, ModelSource};
pub use metrics::{milestone_time, MethodCurve, MethodSummary, MetricsTable, METRIC_POINTS};
pub use report::{export_report, read_metrics_csv, render_svg, ReportFiles};
pub use run::{run_experiment, ExperimentOutcome, RunSummary};
