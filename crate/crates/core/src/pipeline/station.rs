//! Station water-level series and the per-storm CSV / manifest formats.
//!
//! Storm CSV header: `station_id,timestamp,observed_ft,modeled_ft`, UTC ISO-8601
//! timestamps, missing levels as empty fields. Rows of one station must be in
//! strictly increasing time order and lie on whole-hour steps; skipped hours
//! become missing values.
//!
//! Manifest CSV header: `storm_id,name,year,category,csv_path`, where
//! `csv_path` is relative to the manifest's directory unless absolute.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationRecord {
    pub station_id: String,
    pub timestamp: String,
    pub observed_ft: Option<f64>,
    pub modeled_ft: Option<f64>,
}

/// Hourly observed and modeled levels (feet) for one station in one storm.
#[derive(Debug, Clone, PartialEq)]
pub struct StationSeries {
    pub station_id: String,
    pub storm_id: String,
    pub start: DateTime<Utc>,
    pub observed: Vec<Option<f64>>,
    pub modeled: Vec<Option<f64>>,
}

impl StationSeries {
    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    pub fn timestamp(&self, hour: usize) -> DateTime<Utc> {
        self.start + Duration::hours(hour as i64)
    }

    /// Build from complete (non-missing) level arrays.
    pub fn from_levels(station_id: &str, storm_id: &str, start: DateTime<Utc>, observed: &[f64], modeled: &[f64]) -> Result<Self> {
        if observed.len() != modeled.len() {
            return Err(Error::shape("station levels", observed.len(), modeled.len()));
        }
        Ok(Self {
            station_id: station_id.to_string(),
            storm_id: storm_id.to_string(),
            start,
            observed: observed.iter().map(|&v| Some(v)).collect(),
            modeled: modeled.iter().map(|&v| Some(v)).collect(),
        })
    }
}

pub fn format_timestamp(t: DateTime<Utc>) -> String {
    t.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

pub fn parse_timestamp(s: &str) -> Result<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(t.and_utc());
        }
    }
    Err(Error::Data(format!("unparseable timestamp '{s}'")))
}

fn finite_or_missing(v: Option<f64>, what: &str, station: &str) -> Result<Option<f64>> {
    match v {
        Some(x) if !x.is_finite() => Err(Error::Data(format!("non-finite {what} at station {station}"))),
        other => Ok(other),
    }
}

/// Group flat records into hourly station series, ordered by station id.
pub fn series_from_records(storm_id: &str, records: impl IntoIterator<Item = StationRecord>) -> Result<Vec<StationSeries>> {
    let mut by_station: BTreeMap<String, Vec<(DateTime<Utc>, Option<f64>, Option<f64>)>> = BTreeMap::new();
    for r in records {
        let t = parse_timestamp(&r.timestamp)?;
        let obs = finite_or_missing(r.observed_ft, "observed level", &r.station_id)?;
        let model = finite_or_missing(r.modeled_ft, "modeled level", &r.station_id)?;
        by_station.entry(r.station_id).or_default().push((t, obs, model));
    }
    let mut out = Vec::with_capacity(by_station.len());
    for (station_id, rows) in by_station {
        let start = rows[0].0;
        let mut observed = Vec::new();
        let mut modeled = Vec::new();
        let mut prev: Option<DateTime<Utc>> = None;
        for (t, obs, model) in rows {
            if let Some(p) = prev {
                if t <= p {
                    return Err(Error::Data(format!("station {station_id}: timestamps not strictly increasing at {}", format_timestamp(t))));
                }
            }
            prev = Some(t);
            let secs = (t - start).num_seconds();
            if secs % 3600 != 0 {
                return Err(Error::Data(format!("station {station_id}: {} is not on the hourly grid", format_timestamp(t))));
            }
            let hour = (secs / 3600) as usize;
            while observed.len() < hour {
                observed.push(None);
                modeled.push(None);
            }
            observed.push(obs);
            modeled.push(model);
        }
        out.push(StationSeries { station_id, storm_id: storm_id.to_string(), start, observed, modeled });
    }
    Ok(out)
}

pub fn read_storm_csv(path: &Path, storm_id: &str) -> Result<Vec<StationSeries>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.kind() {
        csv::ErrorKind::Io(_) => Error::Data(format!("{}: {e}", path.display())),
        _ => Error::Csv(e),
    })?;
    let headers = reader.headers()?.clone();
    let expected = ["station_id", "timestamp", "observed_ft", "modeled_ft"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Data(format!("{}: expected header {}", path.display(), expected.join(","))));
    }
    let records = reader.deserialize().collect::<std::result::Result<Vec<StationRecord>, _>>()?;
    if records.is_empty() {
        return Err(Error::Data(format!("{}: no rows", path.display())));
    }
    series_from_records(storm_id, records)
}

pub fn write_storm_csv(path: &Path, series: &[StationSeries]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for s in series {
        for h in 0..s.len() {
            w.serialize(StationRecord {
                station_id: s.station_id.clone(),
                timestamp: format_timestamp(s.timestamp(h)),
                observed_ft: s.observed[h],
                modeled_ft: s.modeled[h],
            })?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// One manifest row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StormEntry {
    pub storm_id: String,
    pub name: String,
    pub year: i32,
    pub category: String,
    pub csv_path: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub root: PathBuf,
    pub storms: Vec<StormEntry>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let storms = reader.deserialize().collect::<std::result::Result<Vec<StormEntry>, _>>()?;
        let mut seen = std::collections::HashSet::new();
        for s in &storms {
            if !seen.insert(&s.storm_id) {
                return Err(Error::Data(format!("duplicate storm_id '{}' in manifest", s.storm_id)));
            }
        }
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { root, storms })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for s in &self.storms {
            w.serialize(s)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn entry(&self, storm_id: &str) -> Result<&StormEntry> {
        self.storms
            .iter()
            .find(|s| s.storm_id == storm_id)
            .ok_or_else(|| Error::Data(format!("storm '{storm_id}' not in manifest")))
    }

    pub fn csv_path(&self, storm_id: &str) -> Result<PathBuf> {
        let e = self.entry(storm_id)?;
        Ok(if e.csv_path.is_absolute() { e.csv_path.clone() } else { self.root.join(&e.csv_path) })
    }

    pub fn load_storm(&self, storm_id: &str) -> Result<Vec<StationSeries>> {
        read_storm_csv(&self.csv_path(storm_id)?, storm_id)
    }
}
