//! Station ingest, offset extraction, cleaning, scaling and windowing.

mod offsets;
mod scaler;
mod station;
mod windows;

pub use offsets::{chronological_split, clean_series, extract_offsets, OffsetSeries};
pub use scaler::ScalerParams;
pub use station::{
    format_timestamp, parse_timestamp, read_storm_csv, series_from_records, write_storm_csv, Manifest, StationRecord,
    StationSeries, StormEntry,
};
pub use windows::{make_windows, segment_windows, window_count, WindowedDataset, WindowedSample};

/// Gaps up to this many hours are interpolated; longer ones split the series.
pub const DEFAULT_MAX_GAP: usize = 2;
