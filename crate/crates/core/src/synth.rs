//! Synthetic storms: tidal signal plus a Gaussian surge pulse, observed by
//! gauges, and a "modeled" series carrying a gain bias plus AR(1) noise.

use std::f64::consts::PI;
use std::path::Path;

use chrono::{DateTime, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::{parse_timestamp, write_storm_csv, Manifest, StationSeries, StormEntry};

pub const MIN_DURATION_HOURS: usize = 48;

fn default_period() -> f64 {
    12.42
}
fn default_obs_noise() -> f64 {
    0.02
}
fn default_start() -> String {
    "2020-09-01T00:00:00Z".into()
}
fn default_category() -> String {
    "synthetic".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticStormSpec {
    pub storm_id: String,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub year: i32,
    #[serde(default = "default_category")]
    pub category: String,
    /// First timestamp, UTC ISO-8601.
    #[serde(default = "default_start")]
    pub start: String,
    pub n_stations: usize,
    pub duration_hours: usize,
    pub tide_amplitude_ft: f64,
    #[serde(default = "default_period")]
    pub tide_period_hours: f64,
    pub surge_peak_ft: f64,
    pub surge_center_hour: f64,
    pub surge_width_hours: f64,
    pub bias_gain: f64,
    /// AR(1) coefficient of the bias noise.
    pub bias_ar_coeff: f64,
    pub bias_noise_std_ft: f64,
    /// Measurement noise on the observed level.
    #[serde(default = "default_obs_noise")]
    pub obs_noise_std_ft: f64,
    pub seed: u64,
}

impl SyntheticStormSpec {
    /// A storm with the shape used by the bundled examples; callers override fields as needed.
    pub fn standard(storm_id: &str, seed: u64) -> Self {
        Self {
            storm_id: storm_id.to_string(),
            name: storm_id.to_string(),
            year: 2020,
            category: default_category(),
            start: default_start(),
            n_stations: 20,
            duration_hours: 150,
            tide_amplitude_ft: 1.5,
            tide_period_hours: default_period(),
            surge_peak_ft: 4.0,
            surge_center_hour: 90.0,
            surge_width_hours: 10.0,
            bias_gain: 0.1,
            bias_ar_coeff: 0.95,
            bias_noise_std_ft: 0.05,
            obs_noise_std_ft: default_obs_noise(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("storm '{}': {msg}", self.storm_id)));
        if self.storm_id.is_empty() {
            return Err(Error::Config("storm_id must not be empty".into()));
        }
        if self.duration_hours < MIN_DURATION_HOURS {
            return bad(format!("duration too short ({} h, minimum {MIN_DURATION_HOURS} h)", self.duration_hours));
        }
        if self.n_stations == 0 {
            return bad("n_stations must be positive".into());
        }
        if !(0.0..1.0).contains(&self.bias_ar_coeff) {
            return bad(format!("bias_ar_coeff {} must lie in [0, 1)", self.bias_ar_coeff));
        }
        if !(self.tide_period_hours > 0.0) || !(self.surge_width_hours > 0.0) {
            return bad("tide period and surge width must be positive".into());
        }
        if !(self.bias_noise_std_ft >= 0.0) || !(self.obs_noise_std_ft >= 0.0) {
            return bad("noise standard deviations must be non-negative".into());
        }
        let finite = [self.tide_amplitude_ft, self.surge_peak_ft, self.surge_center_hour, self.bias_gain];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("amplitudes, center and gain must be finite".into());
        }
        parse_timestamp(&self.start)?;
        Ok(())
    }

    fn start_time(&self) -> Result<DateTime<Utc>> {
        parse_timestamp(&self.start)
    }
}

/// Spec file: a TOML document with one `[[storm]]` table per storm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticCorpusSpec {
    pub storm: Vec<SyntheticStormSpec>,
}

impl SyntheticCorpusSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text)?;
        for s in &spec.storm {
            s.validate()?;
        }
        Ok(spec)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }
}

pub fn station_id(index: usize) -> String {
    format!("ST{index:03}")
}

/// Observed and modeled levels for one station. The station's tide phase,
/// amplitude factors and noise are drawn from a stream keyed by `(seed, index)`.
pub fn generate_station_series(spec: &SyntheticStormSpec, station_index: usize) -> Result<StationSeries> {
    spec.validate()?;
    if station_index >= spec.n_stations {
        return Err(Error::Config(format!("station index {station_index} out of range for {} stations", spec.n_stations)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(station_index as u64 + 1);
    let phase = rng.random_range(0.0..2.0 * PI);
    let tide_scale = rng.random_range(0.8..1.2);
    let surge_scale = rng.random_range(0.7..1.3);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");

    let n = spec.duration_hours;
    let mut observed = Vec::with_capacity(n);
    let mut modeled = Vec::with_capacity(n);
    let rho = spec.bias_ar_coeff;
    let mut e = 0.0;
    for t in 0..n {
        let tf = t as f64;
        let tide = spec.tide_amplitude_ft * tide_scale * (2.0 * PI * tf / spec.tide_period_hours + phase).sin();
        let z = (tf - spec.surge_center_hour) / spec.surge_width_hours;
        let surge = spec.surge_peak_ft * surge_scale * (-0.5 * z * z).exp();
        let obs = tide + surge + spec.obs_noise_std_ft * std_normal.sample(&mut rng);
        let eta = spec.bias_noise_std_ft * std_normal.sample(&mut rng);
        // start the AR(1) process in its stationary distribution
        e = if t == 0 { eta / (1.0 - rho * rho).sqrt() } else { rho * e + eta };
        let bias = spec.bias_gain * obs + e;
        observed.push(obs);
        modeled.push(obs + bias);
    }
    StationSeries::from_levels(&station_id(station_index), &spec.storm_id, spec.start_time()?, &observed, &modeled)
}

pub fn generate_storm(spec: &SyntheticStormSpec) -> Result<Vec<StationSeries>> {
    (0..spec.n_stations).into_par_iter().map(|i| generate_station_series(spec, i)).collect()
}

/// Write one `<storm_id>.csv` per storm plus `manifest.csv` into `out_dir`.
/// Storm ids and seeds must be distinct so every storm draws its own bias process.
pub fn generate_scenario_corpus(specs: &[SyntheticStormSpec], out_dir: &Path) -> Result<Manifest> {
    if specs.len() < 2 {
        return Err(Error::Config("a corpus needs at least two storms (one for training, one held out)".into()));
    }
    let mut ids = std::collections::HashSet::new();
    let mut seeds = std::collections::HashSet::new();
    for s in specs {
        s.validate()?;
        if !ids.insert(&s.storm_id) {
            return Err(Error::Config(format!("duplicate storm_id '{}'", s.storm_id)));
        }
        if !seeds.insert(s.seed) {
            return Err(Error::Config(format!("storm '{}' reuses seed {}; seeds must be disjoint", s.storm_id, s.seed)));
        }
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut storms = Vec::with_capacity(specs.len());
    for s in specs {
        let file = format!("{}.csv", s.storm_id);
        write_storm_csv(&out_dir.join(&file), &generate_storm(s)?)?;
        storms.push(StormEntry {
            storm_id: s.storm_id.clone(),
            name: if s.name.is_empty() { s.storm_id.clone() } else { s.name.clone() },
            year: s.year,
            category: s.category.clone(),
            csv_path: file.into(),
        });
    }
    let manifest = Manifest { root: out_dir.to_path_buf(), storms };
    manifest.write(&out_dir.join("manifest.csv"))?;
    Ok(manifest)
}
