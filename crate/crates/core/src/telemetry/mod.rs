//! Traces, metrics, checkpoints and charts.

mod analyze;
mod chart;
mod checkpoint;
mod format;
mod metrics;
mod run;
mod trace;

pub use analyze::{summarize, verify, GenerationSummary, CHECKED_COLUMNS};
pub use chart::{render_chart, render_svg, BarSeries, ChartData};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, MAGIC, VERSION};
pub use format::{format_sig, sig6};
pub use metrics::{metrics_header, write_metrics, zeta_column, MetricsRow, MetricsTable, MetricsWriter, FIXED_COLUMNS};
pub use run::{
    average_zeta, checkpoint_path, traces_path, write_zeta_csv, zeta_chart, zeta_path, RunDirectory,
};
pub use trace::{read_traces, TraceRecord, TraceRecorder, TraceWriter};
