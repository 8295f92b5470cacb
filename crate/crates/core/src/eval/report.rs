//! Before/after bias-correction reports per station, and CSV emitters.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::MetricsReport;

/// Water-level skill of the raw model and of the corrected model at one station.
#[derive(Debug, Clone, PartialEq)]
pub struct StationReport {
    pub station_id: String,
    pub w_out: usize,
    pub without_ml: MetricsReport,
    pub with_ml: MetricsReport,
}

impl StationReport {
    pub fn improved(&self) -> bool {
        self.with_ml.r2 > self.without_ml.r2
    }
}

/// Compare modeled and corrected levels against observations (all in feet).
pub fn station_report(station_id: &str, w_out: usize, observed: &[f64], modeled: &[f64], corrected: &[f64]) -> Result<StationReport> {
    if observed.len() != modeled.len() || observed.len() != corrected.len() {
        return Err(Error::shape("station report series", observed.len(), modeled.len().max(corrected.len())));
    }
    Ok(StationReport {
        station_id: station_id.to_string(),
        w_out,
        without_ml: MetricsReport::compute("without_ml", observed, modeled)?,
        with_ml: MetricsReport::compute("with_ml", observed, corrected)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterPoint {
    pub station_id: String,
    pub r2_without: f64,
    pub r2_with: f64,
}

/// Per-station R² pairs and the share of stations strictly above the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct ImprovementScatter {
    pub points: Vec<ScatterPoint>,
    pub fraction_improved: f64,
}

pub fn improvement_scatter(reports: &[StationReport]) -> ImprovementScatter {
    let points: Vec<ScatterPoint> = reports
        .iter()
        .map(|r| ScatterPoint { station_id: r.station_id.clone(), r2_without: r.without_ml.r2, r2_with: r.with_ml.r2 })
        .collect();
    let improved = points.iter().filter(|p| p.r2_with > p.r2_without).count();
    let fraction_improved = if points.is_empty() { 0.0 } else { improved as f64 / points.len() as f64 };
    ImprovementScatter { points, fraction_improved }
}

#[derive(Serialize)]
struct StationRow<'a> {
    station_id: &'a str,
    w_out: usize,
    n: usize,
    r2_without: f64,
    r2_with: f64,
    mse_without: f64,
    mse_with: f64,
    rmse_without: f64,
    rmse_with: f64,
    mae_without: f64,
    mae_with: f64,
    improved: bool,
}

/// `station_id,w_out,n,r2_without,r2_with,mse_without,mse_with,rmse_without,rmse_with,mae_without,mae_with,improved`
pub fn write_station_reports<W: Write>(out: W, reports: &[StationReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        w.serialize(StationRow {
            station_id: &r.station_id,
            w_out: r.w_out,
            n: r.with_ml.n,
            r2_without: r.without_ml.r2,
            r2_with: r.with_ml.r2,
            mse_without: r.without_ml.mse,
            mse_with: r.with_ml.mse,
            rmse_without: r.without_ml.rmse,
            rmse_with: r.with_ml.rmse,
            mae_without: r.without_ml.mae,
            mae_with: r.with_ml.mae,
            improved: r.improved(),
        })?;
    }
    w.flush().map_err(|e| Error::io("<station report>", e))?;
    Ok(())
}

/// `station_id,r2_without,r2_with`
pub fn write_scatter<W: Write>(out: W, scatter: &ImprovementScatter) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in &scatter.points {
        w.serialize(p)?;
    }
    w.flush().map_err(|e| Error::io("<scatter>", e))?;
    Ok(())
}

/// Plain-text table in the `R² without / with` layout.
pub fn text_summary(reports: &[StationReport]) -> String {
    let mut s = String::from("station                  w_out   R2 (without / with)   improved\n");
    for r in reports {
        s.push_str(&format!(
            "{:<24} {:>5}   {:.3} / {:.3}         {}\n",
            r.station_id,
            r.w_out,
            r.without_ml.r2,
            r.with_ml.r2,
            if r.improved() { "yes" } else { "no" }
        ));
    }
    let scatter = improvement_scatter(reports);
    s.push_str(&format!("fraction of stations improved: {:.3}\n", scatter.fraction_improved));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const OBS: [f64; 5] = [1.0, 2.5, 4.0, 3.0, 1.5];
    const MODEL: [f64; 5] = [1.3, 2.9, 4.6, 3.2, 1.4];

    #[test]
    fn perfect_correction() {
        let r = station_report("A", 1, &OBS, &MODEL, &OBS).unwrap();
        assert_eq!(r.with_ml.r2, 1.0);
        assert!(r.improved());
    }

    #[test]
    fn null_correction_matches_raw_model() {
        let r = station_report("A", 1, &OBS, &MODEL, &MODEL).unwrap();
        assert_eq!(r.with_ml.r2, r.without_ml.r2);
        assert_eq!(r.with_ml.mse, r.without_ml.mse);
        assert!(!r.improved());
        let sc = improvement_scatter(&[r]);
        assert_eq!(sc.fraction_improved, 0.0);
    }

    #[test]
    fn all_perfect_fraction_one() {
        let reports: Vec<_> = (0..3).map(|i| station_report(&format!("S{i}"), 1, &OBS, &MODEL, &OBS).unwrap()).collect();
        assert_eq!(improvement_scatter(&reports).fraction_improved, 1.0);
    }

    #[test]
    fn misaligned_is_error() {
        assert!(station_report("A", 1, &OBS, &MODEL[..4], &OBS).is_err());
    }

    #[test]
    fn csv_layout() {
        let r = station_report("Springmaid Pier", 1, &OBS, &MODEL, &OBS).unwrap();
        let mut buf = Vec::new();
        write_station_reports(&mut buf, &[r.clone()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "station_id,w_out,n,r2_without,r2_with,mse_without,mse_with,rmse_without,rmse_with,mae_without,mae_with,improved\n"
        ));
        let mut buf = Vec::new();
        write_scatter(&mut buf, &improvement_scatter(&[r.clone()])).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("station_id,r2_without,r2_with\n"));
        assert!(text_summary(&[r]).contains(" / 1.000"));
    }
}
