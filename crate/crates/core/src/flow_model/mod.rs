//! Flow records and their aggregation into tumbling monitoring windows.

mod io;
mod record;
mod window;

pub use io::{
    read_trace, read_windows, sniff_kind, write_trace, write_windows, CsvKind, LoadedWindows,
    TRACE_HEADER, TRUTH_COLUMN, WINDOWS_HEADER,
};
pub use record::{FlowId, FlowRecord};
pub use window::{
    aggregate_measure, window_partition, window_partition_span, MeasureKind, WindowStats,
    WindowingConfig,
};

#[derive(Debug, thiserror::Error)]
pub enum FlowModelError {
    #[error("record {offset} rejected: {reason}")]
    RejectedRecord { offset: usize, reason: String },
    #[error("line {line} rejected: {reason}")]
    RejectedLine { line: u64, reason: String },
    #[error("bad header: expected `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("measure index {index} out of range for {len} measures")]
    MeasureIndex { index: usize, len: usize },
    #[error("unknown measure `{0}`")]
    UnknownMeasure(String),
    #[error("invalid windowing config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
