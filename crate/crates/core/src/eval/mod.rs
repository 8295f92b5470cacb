//! Regression metrics, station reports and the signed-rank comparison.

mod metrics;
mod report;
mod wilcoxon;

pub use metrics::{mae, mse, r2, rmse, MetricsReport};
pub use report::{
    improvement_scatter, station_report, text_summary, write_scatter, write_station_reports, ImprovementScatter,
    ScatterPoint, StationReport,
};
pub use wilcoxon::{doubled_midranks, wilcoxon_signed_rank, WilcoxonMethod, WilcoxonResult, EXACT_MAX_N};
