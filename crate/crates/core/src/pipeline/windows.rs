//! Sliding-window sample construction and the pooled training dataset.

use crate::error::{Error, Result};
use crate::pipeline::{OffsetSeries, ScalerParams};
use crate::scalar::Scalar;

/// One (input window, prediction window) pair with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedSample<T> {
    pub input: Vec<T>,
    pub target: Vec<T>,
    pub station_id: String,
    pub storm_id: String,
    /// Hour of the first input value on the station's original timeline.
    pub t_index: usize,
}

/// Number of windows a gap-free series of length `len` yields at stride 1.
pub fn window_count(len: usize, w_in: usize, w_out: usize) -> usize {
    (len + 1).saturating_sub(w_in + w_out)
}

/// Slide over a gap-free, already scaled series. `input = v[t..t+w_in]`,
/// `target = v[t+w_in..t+w_in+w_out]` for every `t` on the stride grid.
pub fn make_windows<T: Scalar>(
    values: &[T],
    station_id: &str,
    storm_id: &str,
    start_hour: usize,
    w_in: usize,
    w_out: usize,
    stride: usize,
) -> Result<Vec<WindowedSample<T>>> {
    if w_in == 0 || w_out == 0 || stride == 0 {
        return Err(Error::Config("window lengths and stride must be positive".into()));
    }
    let span = w_in + w_out;
    if values.len() < span {
        return Ok(Vec::new());
    }
    Ok((0..=values.len() - span)
        .step_by(stride)
        .map(|t| WindowedSample {
            input: values[t..t + w_in].to_vec(),
            target: values[t + w_in..t + span].to_vec(),
            station_id: station_id.to_string(),
            storm_id: storm_id.to_string(),
            t_index: start_hour + t,
        })
        .collect())
}

/// Scale a gap-free segment and cut it into windows.
pub fn segment_windows<T: Scalar>(
    segment: &OffsetSeries,
    scaler: &ScalerParams<T>,
    w_in: usize,
    w_out: usize,
) -> Result<Vec<WindowedSample<T>>> {
    if segment.has_gaps() {
        return Err(Error::Data(format!(
            "segment of station {} starting at hour {} still has gaps; clean it first",
            segment.station_id, segment.start_hour
        )));
    }
    let scaled: Vec<T> = segment.values.iter().map(|&v| scaler.scale(T::lit(v))).collect();
    make_windows(&scaled, &segment.station_id, &segment.storm_id, segment.start_hour, w_in, w_out, 1)
}

/// Pooled windowed samples from every station, with the scaler used to build them.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset<T> {
    pub samples: Vec<WindowedSample<T>>,
    pub scaler: ScalerParams<T>,
    pub w_in: usize,
    pub w_out: usize,
}

impl<T: Scalar> WindowedDataset<T> {
    /// Fit a single scaler on every training segment, then window each one.
    pub fn from_training_segments(segments: &[OffsetSeries], w_in: usize, w_out: usize) -> Result<Self> {
        let scaler = ScalerParams::fit(segments.iter().flat_map(|s| s.valid_values()).map(T::lit))?;
        Self::with_scaler(segments, scaler, w_in, w_out)
    }

    /// Window segments with an already fitted scaler (test data).
    pub fn with_scaler(segments: &[OffsetSeries], scaler: ScalerParams<T>, w_in: usize, w_out: usize) -> Result<Self> {
        let mut samples = Vec::new();
        for seg in segments {
            samples.extend(segment_windows(seg, &scaler, w_in, w_out)?);
        }
        samples.sort_by(|a, b| {
            (a.storm_id.as_str(), a.station_id.as_str(), a.t_index).cmp(&(b.storm_id.as_str(), b.station_id.as_str(), b.t_index))
        });
        Ok(Self { samples, scaler, w_in, w_out })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Keep the first `n` samples; used for dataset-size experiments.
    pub fn truncated(&self, n: usize) -> Self {
        Self { samples: self.samples[..n.min(self.samples.len())].to_vec(), ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64).collect()
    }

    #[test]
    fn count_examples() {
        assert_eq!(make_windows(&ramp(10), "s", "x", 0, 3, 2, 1).unwrap().len(), 6);
        assert_eq!(make_windows(&ramp(5), "s", "x", 0, 3, 2, 1).unwrap().len(), 1);
        assert_eq!(make_windows(&ramp(4), "s", "x", 0, 3, 2, 1).unwrap().len(), 0);
        assert_eq!(window_count(10, 3, 2), 6);
        assert_eq!(window_count(4, 3, 2), 0);
    }

    #[test]
    fn windows_are_adjacent_slices() {
        let w = make_windows(&ramp(8), "s", "x", 100, 3, 2, 1).unwrap();
        assert_eq!(w[2].input, vec![2.0, 3.0, 4.0]);
        assert_eq!(w[2].target, vec![5.0, 6.0]);
        assert_eq!(w[2].t_index, 102);
    }

    #[test]
    fn zero_lengths_rejected() {
        assert!(make_windows(&ramp(8), "s", "x", 0, 0, 2, 1).is_err());
        assert!(make_windows(&ramp(8), "s", "x", 0, 2, 0, 1).is_err());
    }

    #[test]
    fn exhaustive_count_law() {
        for len in 0..=60 {
            let v = ramp(len);
            for w_in in 1..=8 {
                for w_out in 1..=6 {
                    let n = make_windows(&v, "s", "x", 0, w_in, w_out, 1).unwrap().len();
                    assert_eq!(n, (len as i64 - w_in as i64 - w_out as i64 + 1).max(0) as usize);
                }
            }
        }
    }
}
