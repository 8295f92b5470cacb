use surgecorr_core::model::{
    correct_station, evaluate_model, offset_metrics, train, EmissionPolicy, ScenarioConfig, ScenarioData, TrainingConfig,
};
use surgecorr_core::nn::NetworkConfig;
use surgecorr_core::pipeline::{extract_offsets, window_count, Manifest, ScalerParams};
use surgecorr_core::synth::{generate_scenario_corpus, generate_storm, SyntheticStormSpec};
use surgecorr_core::Error;

fn spec(id: &str, seed: u64) -> SyntheticStormSpec {
    SyntheticStormSpec { n_stations: 3, duration_hours: 60, surge_center_hour: 35.0, ..SyntheticStormSpec::standard(id, seed) }
}

fn scenario(train: &[&str], test: &str) -> ScenarioConfig {
    let text = format!(
        "name = \"t\"\ntrain_storms = {:?}\ntest_storm = \"{test}\"\nw_out = [1]\nw_in = [6]\nseed = 1\n[training]\nepochs = 2\n[network]\nconv_filters = 2\nlstm1_units = 3\nlstm2_units = 3\ndense_units = 2\n",
        train
    );
    ScenarioConfig::from_toml(&text).unwrap()
}

#[test]
fn corpus_is_byte_identical_on_rerun() {
    let specs = [spec("a", 1), spec("b", 2), spec("c", 3)];
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    generate_scenario_corpus(&specs, d1.path()).unwrap();
    generate_scenario_corpus(&specs, d2.path()).unwrap();
    for f in ["a.csv", "b.csv", "c.csv", "manifest.csv"] {
        assert_eq!(std::fs::read(d1.path().join(f)).unwrap(), std::fs::read(d2.path().join(f)).unwrap(), "{f}");
    }
    let m = Manifest::read(&d1.path().join("manifest.csv")).unwrap();
    assert_eq!(m.load_storm("b").unwrap(), generate_storm(&specs[1]).unwrap());
}

#[test]
fn scaler_is_fitted_on_training_storms_only() {
    let mut test = spec("t", 9);
    test.surge_peak_ft = 12.0; // extends the offset range beyond the training storms
    let dir = tempfile::tempdir().unwrap();
    let m = generate_scenario_corpus(&[spec("a", 1), spec("b", 2), test], dir.path()).unwrap();
    let cfg = scenario(&["a", "b"], "t");
    let data = ScenarioData::load(&cfg, &m).unwrap();
    let ds = data.training_dataset::<f64>(6, 1).unwrap();
    let train_only =
        ScalerParams::fit(["a", "b"].iter().flat_map(|s| m.load_storm(s).unwrap()).flat_map(|s| extract_offsets(&s).unwrap().values))
            .unwrap();
    let with_test = ScalerParams::fit(
        ["a", "b", "t"].iter().flat_map(|s| m.load_storm(s).unwrap()).flat_map(|s| extract_offsets(&s).unwrap().values),
    )
    .unwrap();
    assert_eq!(ds.scaler, train_only);
    assert_ne!(ds.scaler, with_test);
    assert!(ds.samples.iter().all(|s| s.storm_id != "t"));
    assert_eq!(data.train_hours, 2 * 3 * 60);
}

#[test]
fn leakage_is_refused() {
    let text = "name = \"x\"\ntrain_storms = [\"a\", \"t\"]\ntest_storm = \"t\"\nw_out = [1]\nw_in = [6]\n";
    assert!(matches!(ScenarioConfig::from_toml(text), Err(Error::Leakage(_))));
    let cfg = scenario(&["a"], "t");
    let leaked = vec![generate_storm(&spec("t", 3)).unwrap()];
    assert!(matches!(ScenarioData::assemble(&cfg, leaked, vec![]), Err(Error::Leakage(_))));
}

#[test]
fn chronological_mode_splits_the_test_storm() {
    let text = "name = \"x\"\ntest_storm = \"a\"\ntrain_fraction = 0.75\nw_out = [1]\nw_in = [6]\n";
    let cfg = ScenarioConfig::from_toml(text).unwrap();
    let storm = generate_storm(&spec("a", 1)).unwrap();
    let data = ScenarioData::assemble(&cfg, vec![], storm.clone()).unwrap();
    assert_eq!(data.train_hours, 3 * 45);
    assert!(data.test_series.iter().all(|s| s.len() == 15));
    assert_eq!(data.test_series[0].observed[..], storm[0].observed[45..]);
    assert_eq!(data.test_series[0].start, storm[0].timestamp(45));
}

fn trained(w_in: usize, w_out: usize, null_bias: bool) -> (surgecorr_core::Model, Vec<surgecorr_core::pipeline::StationSeries>) {
    let mut a = spec("a", 1);
    let mut t = spec("t", 2);
    if null_bias {
        for s in [&mut a, &mut t] {
            s.bias_gain = 0.0;
            s.bias_ar_coeff = 0.0;
            s.bias_noise_std_ft = 0.0;
        }
    }
    let cfg = scenario(&["a"], "t");
    let data = ScenarioData::assemble(&cfg, vec![generate_storm(&a).unwrap()], generate_storm(&t).unwrap()).unwrap();
    let ds = data.training_dataset::<f64>(w_in, w_out).unwrap();
    let net = NetworkConfig::standard(w_in, w_out).with_widths(2, 3, 3, 2);
    let model = train(&ds, net, &TrainingConfig { epochs: 2, ..TrainingConfig::default() }).unwrap();
    (model, data.test_series)
}

#[test]
fn correction_row_counts() {
    let (w_in, t) = (6, 60);
    for w_out in [1, 3, 4] {
        let (model, test) = trained(w_in, w_out, false);
        let rows = correct_station(&model, &test[0], EmissionPolicy::NonOverlapping, 2).unwrap();
        assert_eq!(rows.len(), (t - w_in) / w_out * w_out, "w_out={w_out}");
        if w_out == 1 {
            assert_eq!(rows.len(), window_count(t, w_in, w_out));
        }
        let rows = correct_station(&model, &test[0], EmissionPolicy::OverlapAverage, 2).unwrap();
        assert_eq!(rows.len(), t - w_in);
        assert_eq!(rows[0].hour, w_in);
    }
}

#[test]
fn null_bias_storm_is_left_unchanged() {
    let (model, test) = trained(6, 1, true);
    assert!(model.scaler.is_degenerate());
    for row in correct_station(&model, &test[0], EmissionPolicy::NonOverlapping, 2).unwrap() {
        assert_eq!(row.corrected, row.modeled);
        assert_eq!(Some(row.corrected), row.observed);
    }
}

#[test]
fn evaluation_shapes() {
    let (model, test) = trained(6, 3, false);
    let ev = evaluate_model(&model, &test, EmissionPolicy::NonOverlapping, 2).unwrap();
    assert_eq!(ev.stations.len(), 3);
    assert_eq!(ev.offsets.n, 3 * window_count(60, 6, 3) * 3);
    assert_eq!(ev.scatter.points.len(), 3);
    assert!(ev.offsets.mae <= ev.offsets.rmse);
}

#[test]
fn too_short_test_storm_is_error() {
    let (model, mut test) = trained(6, 3, false);
    for s in &mut test {
        s.observed.truncate(8);
        s.modeled.truncate(8);
    }
    assert!(offset_metrics(&model, &test, 2).is_err());
    assert!(surgecorr_core::model::correct_storm(&model, &test, EmissionPolicy::NonOverlapping, 2).is_err());
}

#[test]
fn shipped_configs_parse_and_agree() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let corpus = surgecorr_core::synth::SyntheticCorpusSpec::read(&dir.join("synthetic.toml")).unwrap();
    let ids: Vec<&str> = corpus.storm.iter().map(|s| s.storm_id.as_str()).collect();
    let six = ScenarioConfig::read(&dir.join("six-different.toml")).unwrap();
    let one = ScenarioConfig::read(&dir.join("one-storm.toml")).unwrap();
    for s in [&six, &one] {
        assert!(ids.contains(&s.test_storm.as_str()));
        assert!(s.train_storms.iter().all(|t| ids.contains(&t.as_str())));
    }
    // compare-scenarios needs identical w_in grids
    assert_eq!(six.w_in, one.w_in);
}
