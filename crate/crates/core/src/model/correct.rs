//! Bias correction of modeled water levels with predicted offsets.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TrainedModel;
use crate::pipeline::{clean_series, extract_offsets, format_timestamp, ScalerParams, StationSeries};
use crate::scalar::Scalar;

/// `corrected[t] = modeled[t] - unscale(predicted[t])`, all levels in feet.
pub fn apply_bias_correction<T: Scalar>(modeled: &[f64], predicted: &[T], scaler: &ScalerParams<T>) -> Result<Vec<f64>> {
    if modeled.len() != predicted.len() {
        return Err(Error::shape("bias correction alignment", modeled.len(), predicted.len()));
    }
    Ok(modeled.iter().zip(predicted).map(|(&m, &p)| m - scaler.unscale(p).as_f64()).collect())
}

/// How rolling predictions from successive origins are turned into one level per hour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmissionPolicy {
    /// Origins every `w_out` hours; each hour comes from exactly one prediction.
    #[default]
    NonOverlapping,
    /// Origins every hour; overlapping predictions for an hour are averaged.
    OverlapAverage,
}

impl std::str::FromStr for EmissionPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "non-overlapping" => Ok(Self::NonOverlapping),
            "overlap-average" => Ok(Self::OverlapAverage),
            other => Err(Error::Config(format!("unknown emission policy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectedRow {
    pub station_id: String,
    /// Hour index on the station's timeline.
    pub hour: usize,
    pub timestamp: String,
    pub observed: Option<f64>,
    pub modeled: f64,
    /// Predicted offset in feet.
    pub predicted_offset: f64,
    pub corrected: f64,
}

/// Rolling correction of one station. Predictions only use offsets from hours
/// before their origin; hours without a modeled level are skipped.
pub fn correct_station<T: Scalar>(
    model: &TrainedModel<T>,
    series: &StationSeries,
    policy: EmissionPolicy,
    max_gap: usize,
) -> Result<Vec<CorrectedRow>> {
    let (w_in, w_out) = (model.config.w_in, model.config.w_out);
    let offsets = extract_offsets(series)?;
    let mut rows = Vec::new();
    for seg in clean_series(&offsets, max_gap) {
        if seg.len() < w_in + w_out {
            continue;
        }
        let scaled: Vec<T> = seg.values.iter().map(|&v| model.scaler.scale(T::lit(v))).collect();
        let stride = match policy {
            EmissionPolicy::NonOverlapping => w_out,
            EmissionPolicy::OverlapAverage => 1,
        };
        let origins: Vec<usize> = (w_in..=seg.len() - w_out).step_by(stride).collect();
        let mut inputs = Vec::with_capacity(origins.len() * w_in);
        for &o in &origins {
            inputs.extend_from_slice(&scaled[o - w_in..o]);
        }
        let preds = model.predict_many(&inputs)?;

        // Sum and count of predicted offsets (feet) per segment hour.
        let mut sum = vec![0.0; seg.len()];
        let mut count = vec![0usize; seg.len()];
        for (k, &o) in origins.iter().enumerate() {
            for lead in 0..w_out {
                sum[o + lead] += model.scaler.unscale(preds[k * w_out + lead]).as_f64();
                count[o + lead] += 1;
            }
        }
        for i in 0..seg.len() {
            if count[i] == 0 {
                continue;
            }
            let hour = seg.start_hour + i;
            let Some(modeled) = series.modeled[hour] else { continue };
            let offset = sum[i] / count[i] as f64;
            rows.push(CorrectedRow {
                station_id: series.station_id.clone(),
                hour,
                timestamp: format_timestamp(series.timestamp(hour)),
                observed: series.observed[hour],
                modeled,
                predicted_offset: offset,
                corrected: modeled - offset,
            });
        }
    }
    Ok(rows)
}

/// Correct every station of a storm. Fails when no station has a contiguous
/// stretch of at least `w_in + w_out` hours.
pub fn correct_storm<T: Scalar>(
    model: &TrainedModel<T>,
    stations: &[StationSeries],
    policy: EmissionPolicy,
    max_gap: usize,
) -> Result<Vec<CorrectedRow>> {
    let mut rows = Vec::new();
    for s in stations {
        rows.extend(correct_station(model, s, policy, max_gap)?);
    }
    if rows.is_empty() {
        return Err(Error::Data(format!(
            "storm is shorter than w_in + w_out = {} hours at every station",
            model.config.w_in + model.config.w_out
        )));
    }
    Ok(rows)
}

#[derive(Serialize)]
struct CsvRow<'a> {
    station_id: &'a str,
    timestamp: &'a str,
    observed_ft: Option<f64>,
    modeled_ft: f64,
    predicted_offset_ft: f64,
    corrected_ft: f64,
}

/// `station_id,timestamp,observed_ft,modeled_ft,predicted_offset_ft,corrected_ft`
pub fn write_corrected_csv<W: Write>(out: W, rows: &[CorrectedRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(CsvRow {
            station_id: &r.station_id,
            timestamp: &r.timestamp,
            observed_ft: r.observed,
            modeled_ft: r.modeled,
            predicted_offset_ft: r.predicted_offset,
            corrected_ft: r.corrected,
        })?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))?;
    Ok(())
}
