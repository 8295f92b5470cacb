//! Scenario configuration, leak-free data assembly and held-out evaluation.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{improvement_scatter, station_report, ImprovementScatter, MetricsReport, StationReport};
use crate::model::{correct_station, train, EmissionPolicy, TrainedModel, TrainingConfig};
use crate::nn::{defaults, NetworkConfig};
use crate::pipeline::{
    chronological_split, clean_series, extract_offsets, Manifest, OffsetSeries, StationSeries, WindowedDataset,
    DEFAULT_MAX_GAP,
};
use crate::scalar::Scalar;

/// Layer widths; the windows come from the scenario's sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    #[serde(default = "defaults::conv_filters")]
    pub conv_filters: usize,
    #[serde(default = "defaults::conv_kernel")]
    pub conv_kernel: usize,
    #[serde(default = "defaults::lstm1_units")]
    pub lstm1_units: usize,
    #[serde(default = "defaults::lstm2_units")]
    pub lstm2_units: usize,
    #[serde(default = "defaults::dense_units")]
    pub dense_units: usize,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            conv_filters: defaults::conv_filters(),
            conv_kernel: defaults::conv_kernel(),
            lstm1_units: defaults::lstm1_units(),
            lstm2_units: defaults::lstm2_units(),
            dense_units: defaults::dense_units(),
        }
    }
}

impl Architecture {
    pub fn network(&self, w_in: usize, w_out: usize) -> NetworkConfig {
        let mut cfg = NetworkConfig::standard(w_in, w_out).with_widths(
            self.conv_filters,
            self.lstm1_units,
            self.lstm2_units,
            self.dense_units,
        );
        cfg.conv_kernel = self.conv_kernel;
        cfg
    }
}

fn default_max_gap() -> usize {
    DEFAULT_MAX_GAP
}

/// A named choice of training storms and one held-out test storm, plus the
/// window sweep. With `train_fraction` set, training instead uses the
/// chronologically earliest part of the test storm and `train_storms` must be empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub train_storms: Vec<String>,
    pub test_storm: String,
    #[serde(default)]
    pub train_fraction: Option<f64>,
    pub w_out: Vec<usize>,
    pub w_in: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub training: TrainingConfig,
    #[serde(default)]
    pub network: Architecture,
    #[serde(default = "default_max_gap")]
    pub max_gap: usize,
    #[serde(default)]
    pub emission: EmissionPolicy,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.train_storms.iter().any(|s| s == &self.test_storm) {
            return Err(Error::Leakage(format!("test storm '{}' is also listed for training", self.test_storm)));
        }
        match self.train_fraction {
            Some(f) => {
                if !(f > 0.0 && f < 1.0) {
                    return Err(Error::Config(format!("train_fraction {f} must lie in (0, 1)")));
                }
                if !self.train_storms.is_empty() {
                    return Err(Error::Config("train_fraction splits the test storm; train_storms must then be empty".into()));
                }
            }
            None if self.train_storms.is_empty() => {
                return Err(Error::Config("scenario lists no training storms".into()));
            }
            None => {}
        }
        let mut seen = std::collections::HashSet::new();
        if !self.train_storms.iter().all(|s| seen.insert(s)) {
            return Err(Error::Config("duplicate training storm".into()));
        }
        if self.w_out.is_empty() || self.w_in.is_empty() {
            return Err(Error::Config("w_out and w_in lists must be non-empty".into()));
        }
        for &w_out in &self.w_out {
            for &w_in in &self.w_in {
                self.network.network(w_in, w_out).validate()?;
            }
        }
        self.training.validate()
    }

    pub fn training_config(&self) -> TrainingConfig {
        TrainingConfig { seed: self.seed, ..self.training }
    }
}

/// Cleaned training segments and raw held-out station series. Test rows never
/// enter `train_segments`, which is all the scaler and the optimizer see.
#[derive(Debug, Clone)]
pub struct ScenarioData {
    pub train_segments: Vec<OffsetSeries>,
    pub test_series: Vec<StationSeries>,
    /// Hourly offsets available for training (the cleaned segment lengths).
    pub train_hours: usize,
}

impl ScenarioData {
    pub fn load(cfg: &ScenarioConfig, manifest: &Manifest) -> Result<Self> {
        cfg.validate()?;
        let test = manifest.load_storm(&cfg.test_storm)?;
        let train = cfg.train_storms.iter().map(|s| manifest.load_storm(s)).collect::<Result<Vec<_>>>()?;
        Self::assemble(cfg, train, test)
    }

    pub fn assemble(cfg: &ScenarioConfig, train_storms: Vec<Vec<StationSeries>>, test: Vec<StationSeries>) -> Result<Self> {
        if train_storms.iter().flatten().any(|s| s.storm_id == cfg.test_storm) {
            return Err(Error::Leakage(format!("test storm '{}' rows found in training data", cfg.test_storm)));
        }
        let mut train_segments = Vec::new();
        let mut test_series = Vec::new();
        match cfg.train_fraction {
            Some(fraction) => {
                for s in test {
                    let (head, _) = chronological_split(&extract_offsets(&s)?, fraction)?;
                    train_segments.extend(clean_series(&head, cfg.max_gap));
                    let cut = head.len();
                    test_series.push(StationSeries {
                        station_id: s.station_id.clone(),
                        storm_id: s.storm_id.clone(),
                        start: s.timestamp(cut),
                        observed: s.observed[cut..].to_vec(),
                        modeled: s.modeled[cut..].to_vec(),
                    });
                }
            }
            None => {
                for s in train_storms.iter().flatten() {
                    train_segments.extend(clean_series(&extract_offsets(s)?, cfg.max_gap));
                }
                test_series = test;
            }
        }
        let train_hours = train_segments.iter().map(OffsetSeries::len).sum();
        Ok(Self { train_segments, test_series, train_hours })
    }

    pub fn training_dataset<T: Scalar>(&self, w_in: usize, w_out: usize) -> Result<WindowedDataset<T>> {
        let ds = WindowedDataset::from_training_segments(&self.train_segments, w_in, w_out)?;
        if ds.is_empty() {
            return Err(Error::Empty("training windows (segments shorter than w_in + w_out)"));
        }
        Ok(ds)
    }
}

/// Held-out skill of one model.
#[derive(Debug, Clone)]
pub struct Evaluation {
    /// Offset-space metrics over every test window and lead, in feet.
    pub offsets: MetricsReport,
    pub stations: Vec<StationReport>,
    pub scatter: ImprovementScatter,
    /// Stations without enough corrected hours for a report, with the reason.
    pub skipped: Vec<(String, String)>,
}

/// Offset-space metrics of `model` over every stride-1 window of the test series.
pub fn offset_metrics<T: Scalar>(model: &TrainedModel<T>, test: &[StationSeries], max_gap: usize) -> Result<MetricsReport> {
    let (w_in, w_out) = (model.config.w_in, model.config.w_out);
    let mut segments = Vec::new();
    for s in test {
        segments.extend(clean_series(&extract_offsets(s)?, max_gap));
    }
    let ds = WindowedDataset::with_scaler(&segments, model.scaler, w_in, w_out)?;
    if ds.is_empty() {
        return Err(Error::Data(format!("test storm is shorter than w_in + w_out = {} hours at every station", w_in + w_out)));
    }
    let inputs: Vec<T> = ds.samples.iter().flat_map(|s| s.input.iter().copied()).collect();
    let preds = model.predict_many(&inputs)?;
    let truth: Vec<f64> = ds.samples.iter().flat_map(|s| s.target.iter()).map(|&v| model.scaler.unscale(v).as_f64()).collect();
    let pred_ft: Vec<f64> = preds.iter().map(|&v| model.scaler.unscale(v).as_f64()).collect();
    MetricsReport::compute(format!("offsets_wout{w_out}"), &truth, &pred_ft)
}

pub fn evaluate_model<T: Scalar>(
    model: &TrainedModel<T>,
    test: &[StationSeries],
    policy: EmissionPolicy,
    max_gap: usize,
) -> Result<Evaluation> {
    let offsets = offset_metrics(model, test, max_gap)?;
    let mut stations = Vec::new();
    let mut skipped = Vec::new();
    for s in test {
        let rows = correct_station(model, s, policy, max_gap)?;
        let rows: Vec<_> = rows.into_iter().filter(|r| r.observed.is_some()).collect();
        let observed: Vec<f64> = rows.iter().map(|r| r.observed.unwrap()).collect();
        let modeled: Vec<f64> = rows.iter().map(|r| r.modeled).collect();
        let corrected: Vec<f64> = rows.iter().map(|r| r.corrected).collect();
        match station_report(&s.station_id, model.config.w_out, &observed, &modeled, &corrected) {
            Ok(r) => stations.push(r),
            Err(e) => skipped.push((s.station_id.clone(), e.to_string())),
        }
    }
    let scatter = improvement_scatter(&stations);
    Ok(Evaluation { offsets, stations, scatter, skipped })
}

/// A trained and evaluated model for one `(w_in, w_out)` pair.
#[derive(Debug, Clone)]
pub struct Experiment<T> {
    pub model: TrainedModel<T>,
    pub evaluation: Evaluation,
    pub train_samples: usize,
    pub train_seconds: f64,
}

pub fn run_experiment<T: Scalar>(
    cfg: &ScenarioConfig,
    data: &ScenarioData,
    w_in: usize,
    w_out: usize,
) -> Result<Experiment<T>> {
    let dataset = data.training_dataset::<T>(w_in, w_out)?;
    let started = Instant::now();
    let model = train(&dataset, cfg.network.network(w_in, w_out), &cfg.training_config())?;
    let train_seconds = started.elapsed().as_secs_f64();
    let evaluation = evaluate_model(&model, &data.test_series, cfg.emission, cfg.max_gap)?;
    Ok(Experiment { model, evaluation, train_samples: dataset.len(), train_seconds })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
name = "six-different"
train_storms = ["a", "b"]
test_storm = "c"
w_out = [1, 3]
w_in = [5, 10]
seed = 7
"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = ScenarioConfig::from_toml(BASE).unwrap();
        assert_eq!(cfg.training.epochs, 200);
        assert_eq!(cfg.training.batch_size, 32);
        assert_eq!(cfg.network.lstm2_units, 256);
        assert_eq!(cfg.max_gap, 2);
        assert_eq!(cfg.emission, EmissionPolicy::NonOverlapping);
        assert_eq!(cfg.training_config().seed, 7);
    }

    #[test]
    fn test_storm_in_training_is_leakage() {
        let text = BASE.replace(r#"["a", "b"]"#, r#"["a", "c"]"#);
        assert!(matches!(ScenarioConfig::from_toml(&text), Err(Error::Leakage(_))));
    }

    #[test]
    fn fraction_mode_requires_no_train_storms() {
        let text = format!("{BASE}train_fraction = 0.75\n");
        assert!(ScenarioConfig::from_toml(&text).is_err());
        let text = text.replace(r#"["a", "b"]"#, "[]");
        assert!(ScenarioConfig::from_toml(&text).is_ok());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ScenarioConfig::from_toml(&format!("{BASE}epoch = 3\n")).is_err());
    }
}
