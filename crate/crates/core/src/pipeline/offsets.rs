//! Offset series (modeled minus observed), gap cleaning and chronological splits.

use chrono::{DateTime, Duration, Utc};

use crate::error::{Error, Result};
use crate::pipeline::StationSeries;

/// Hourly offsets for one station in one storm.
///
/// `values[t]` is meaningful only where `gap_mask[t]` is false; masked
/// entries hold NaN. `start_hour` locates `values[0]` on the station's
/// original hourly timeline.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetSeries {
    pub station_id: String,
    pub storm_id: String,
    pub t0: DateTime<Utc>,
    pub start_hour: usize,
    pub values: Vec<f64>,
    pub gap_mask: Vec<bool>,
}

impl OffsetSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn has_gaps(&self) -> bool {
        self.gap_mask.iter().any(|&g| g)
    }

    /// Values present in the series, skipping masked hours.
    pub fn valid_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().zip(&self.gap_mask).filter(|(_, &g)| !g).map(|(&v, _)| v)
    }

    /// Sub-series covering `range` (indices into `values`).
    pub fn slice(&self, range: std::ops::Range<usize>) -> OffsetSeries {
        OffsetSeries {
            station_id: self.station_id.clone(),
            storm_id: self.storm_id.clone(),
            t0: self.t0 + Duration::hours(range.start as i64),
            start_hour: self.start_hour + range.start,
            values: self.values[range.clone()].to_vec(),
            gap_mask: self.gap_mask[range].to_vec(),
        }
    }
}

/// `offset = modeled - observed` at every hour where both levels exist.
pub fn extract_offsets(series: &StationSeries) -> Result<OffsetSeries> {
    if series.observed.len() != series.modeled.len() {
        return Err(Error::shape("station series", series.observed.len(), series.modeled.len()));
    }
    let mut values = Vec::with_capacity(series.len());
    let mut gap_mask = Vec::with_capacity(series.len());
    for (obs, model) in series.observed.iter().zip(&series.modeled) {
        match (obs, model) {
            (Some(o), Some(m)) => {
                values.push(m - o);
                gap_mask.push(false);
            }
            _ => {
                values.push(f64::NAN);
                gap_mask.push(true);
            }
        }
    }
    if gap_mask.iter().all(|&g| g) {
        return Err(Error::Data(format!(
            "station {} in storm {} has no hour with both observed and modeled levels",
            series.station_id, series.storm_id
        )));
    }
    Ok(OffsetSeries {
        station_id: series.station_id.clone(),
        storm_id: series.storm_id.clone(),
        t0: series.start,
        start_hour: 0,
        values,
        gap_mask,
    })
}

/// Fill gaps of at most `max_gap` hours by linear interpolation and split the
/// series at longer gaps. Leading and trailing gaps are dropped. Every
/// returned segment is gap-free.
pub fn clean_series(offsets: &OffsetSeries, max_gap: usize) -> Vec<OffsetSeries> {
    let n = offsets.len();
    let mut segments = Vec::new();
    let mut i = 0;
    while i < n {
        // skip to the next valid hour
        while i < n && offsets.gap_mask[i] {
            i += 1;
        }
        if i == n {
            break;
        }
        let start = i;
        let mut values = vec![offsets.values[i]];
        let mut last_valid = i;
        i += 1;
        while i < n {
            if !offsets.gap_mask[i] {
                let gap = i - last_valid - 1;
                if gap > 0 {
                    let (a, b) = (offsets.values[last_valid], offsets.values[i]);
                    for k in 1..=gap {
                        let frac = k as f64 / (gap + 1) as f64;
                        values.push(a + (b - a) * frac);
                    }
                }
                values.push(offsets.values[i]);
                last_valid = i;
                i += 1;
            } else {
                let mut j = i;
                while j < n && offsets.gap_mask[j] {
                    j += 1;
                }
                if j == n || j - i > max_gap {
                    i = j;
                    break;
                }
                i = j;
            }
        }
        let len = values.len();
        let mut seg = offsets.slice(start..start + len);
        seg.values = values;
        seg.gap_mask = vec![false; len];
        segments.push(seg);
    }
    segments
}

/// Earliest `floor(fraction * T)` hours for training, the rest for testing.
pub fn chronological_split(offsets: &OffsetSeries, train_fraction: f64) -> Result<(OffsetSeries, OffsetSeries)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!("train fraction {train_fraction} must lie in (0, 1)")));
    }
    let cut = (train_fraction * offsets.len() as f64).floor() as usize;
    Ok((offsets.slice(0..cut), offsets.slice(cut..offsets.len())))
}
