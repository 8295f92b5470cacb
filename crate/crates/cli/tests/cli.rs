use std::path::Path;
use std::process::{Command, Output};

fn surgecorr(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_surgecorr")).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = surgecorr(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn fails(dir: &Path, args: &[&str]) -> String {
    let out = surgecorr(dir, args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "diagnostic should be one line: {err}");
    err
}

fn storm(id: &str, seed: u64, hours: usize) -> String {
    format!(
        "[[storm]]\nstorm_id = \"{id}\"\nn_stations = 3\nduration_hours = {hours}\ntide_amplitude_ft = 1.2\n\
         surge_peak_ft = 2.5\nsurge_center_hour = 30.0\nsurge_width_hours = 6.0\nbias_gain = 0.1\n\
         bias_ar_coeff = 0.9\nbias_noise_std_ft = 0.05\nseed = {seed}\n\n"
    )
}

fn scenario(name: &str, train: &str, w_in: &str) -> String {
    format!(
        "name = \"{name}\"\ntrain_storms = {train}\ntest_storm = \"c\"\nw_out = [1, 2]\nw_in = {w_in}\nseed = 4\n\
         [training]\nepochs = 2\n[network]\nconv_filters = 2\nlstm1_units = 3\nlstm2_units = 3\ndense_units = 2\n"
    )
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let spec = [storm("a", 1, 60), storm("b", 2, 60), storm("c", 3, 60)].concat();
    std::fs::write(dir.path().join("spec.toml"), spec).unwrap();
    ok(dir.path(), &["--out-dir", "data", "gen-synthetic", "--spec", "spec.toml"]);
    dir
}

#[test]
fn gen_synthetic_writes_corpus_and_is_idempotent() {
    let dir = setup();
    let p = dir.path();
    for f in ["a.csv", "b.csv", "c.csv", "manifest.csv"] {
        assert!(p.join("data").join(f).exists(), "{f}");
    }
    let before = std::fs::read(p.join("data/b.csv")).unwrap();
    ok(p, &["--out-dir", "data", "gen-synthetic", "--spec", "spec.toml"]);
    assert_eq!(std::fs::read(p.join("data/b.csv")).unwrap(), before);
    let header = std::fs::read_to_string(p.join("data/a.csv")).unwrap();
    assert!(header.starts_with("station_id,timestamp,observed_ft,modeled_ft\n"));
}

#[test]
fn short_duration_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("spec.toml"), [storm("a", 1, 10), storm("b", 2, 60)].concat()).unwrap();
    let err = fails(dir.path(), &["gen-synthetic", "--spec", "spec.toml"]);
    assert!(err.contains("duration too short"), "{err}");
}

#[test]
fn train_correct_evaluate_compare() {
    let dir = setup();
    let p = dir.path();
    std::fs::write(p.join("s1.toml"), scenario("s1", "[\"a\", \"b\"]", "[4, 6]")).unwrap();
    std::fs::write(p.join("s2.toml"), scenario("s2", "[\"a\"]", "[4, 6]")).unwrap();
    std::fs::write(p.join("s3.toml"), scenario("s3", "[\"b\"]", "[4, 8]")).unwrap();
    let out = ok(p, &["--data-dir", "data", "--out-dir", "out", "train", "--scenario", "s1.toml"]);
    assert!(out.contains("360 training hours"), "{out}");
    ok(p, &["--data-dir", "data", "--out-dir", "out", "train", "--scenario", "s2.toml"]);
    ok(p, &["--data-dir", "data", "--out-dir", "out", "train", "--scenario", "s3.toml", "--precision", "f32"]);
    for f in ["s1_wout1.sgcw", "s1_wout2.sgcw", "s1_sweep.csv"] {
        assert!(p.join("out").join(f).exists(), "{f}");
    }
    let records = std::fs::read_to_string(p.join("out/runs.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 3);
    assert!(records.lines().next().unwrap().contains("\"train_hours\":360"));

    ok(p, &["--data-dir", "data", "correct", "--model", "out/s1_wout2.sgcw", "--storm", "c", "--out", "corr.csv"]);
    let corr = std::fs::read_to_string(p.join("corr.csv")).unwrap();
    let mut lines = corr.lines();
    assert_eq!(lines.next().unwrap(), "station_id,timestamp,observed_ft,modeled_ft,predicted_offset_ft,corrected_ft");
    assert!(lines.count() > 0);

    ok(p, &["correct", "--model", "out/s1_wout1.sgcw", "--storm-csv", "data/c.csv", "--out", "avg.csv", "--policy", "overlap-average"]);

    let summary = ok(p, &["--data-dir", "data", "evaluate", "--model", "out/s1_wout1.sgcw", "--storm", "c", "--out-report", "rep"]);
    assert!(summary.contains("fraction of stations improved"), "{summary}");
    let offsets = std::fs::read_to_string(p.join("rep/offsets.csv")).unwrap();
    assert!(offsets.starts_with("w_in,w_out,n,r2,mse,rmse,mae\n"));
    assert!(std::fs::read_to_string(p.join("rep/stations.csv")).unwrap().starts_with("station_id,w_out,n,r2_without,r2_with"));
    assert!(std::fs::read_to_string(p.join("rep/scatter.csv")).unwrap().starts_with("station_id,r2_without,r2_with"));

    // s3 has a different w_in grid
    let err = fails(p, &["compare-scenarios", "--records", "out/runs.jsonl", "--out", "cmp.csv"]);
    assert!(err.contains("grids differ"), "{err}");

    // s1 and s2 share a grid; compare them from separate record files
    let recs: Vec<&str> = records.lines().collect();
    std::fs::write(p.join("r1.jsonl"), format!("{}\n", recs[0])).unwrap();
    std::fs::write(p.join("r2.jsonl"), format!("{}\n", recs[1])).unwrap();
    ok(p, &["compare-scenarios", "--records", "r1.jsonl", "r2.jsonl", "--out", "cmp.csv", "--boxplot", "box.csv"]);
    let cmp = std::fs::read_to_string(p.join("cmp.csv")).unwrap();
    assert!(cmp.starts_with("scenario_a,scenario_b,w_out,n,n_effective,statistic,p_value,method,significant\n"), "{cmp}");
    assert_eq!(cmp.lines().count(), 3);
    let boxplot = std::fs::read_to_string(p.join("box.csv")).unwrap();
    assert_eq!(boxplot.lines().count(), 1 + 2 * 2 * 2);
}

#[test]
fn self_comparison_is_degenerate() {
    let dir = setup();
    let p = dir.path();
    std::fs::write(p.join("s1.toml"), scenario("s1", "[\"a\"]", "[4, 6]")).unwrap();
    ok(p, &["--data-dir", "data", "--out-dir", "out", "train", "--scenario", "s1.toml"]);
    let rec = std::fs::read_to_string(p.join("out/runs.jsonl")).unwrap();
    std::fs::write(p.join("twin.jsonl"), rec.replace("\"scenario\":\"s1\"", "\"scenario\":\"twin\"")).unwrap();
    let out = ok(p, &["compare-scenarios", "--records", "out/runs.jsonl", "twin.jsonl", "--out", "cmp.csv"]);
    assert!(out.contains("degenerate"), "{out}");
}

#[test]
fn leakage_and_missing_inputs_fail() {
    let dir = setup();
    let p = dir.path();
    std::fs::write(p.join("leak.toml"), scenario("leak", "[\"a\", \"c\"]", "[4]")).unwrap();
    let err = fails(p, &["--data-dir", "data", "train", "--scenario", "leak.toml"]);
    assert!(err.contains("leakage"), "{err}");
    let err = fails(p, &["--data-dir", "data", "evaluate", "--model", "missing.sgcw", "--storm", "c", "--out-report", "r"]);
    assert!(err.contains("missing.sgcw"), "{err}");
    fails(p, &["--data-dir", "data", "correct", "--model", "missing.sgcw", "--storm", "zzz", "--out", "x.csv"]);
}

#[test]
fn seed_flag_overrides_scenario_seed() {
    let dir = setup();
    let p = dir.path();
    std::fs::write(p.join("s.toml"), scenario("s", "[\"a\"]", "[4]")).unwrap();
    ok(p, &["--data-dir", "data", "--out-dir", "x", "train", "--scenario", "s.toml"]);
    ok(p, &["--data-dir", "data", "--out-dir", "y", "--seed", "99", "train", "--scenario", "s.toml"]);
    assert_ne!(std::fs::read(p.join("x/s_wout1.sgcw")).unwrap(), std::fs::read(p.join("y/s_wout1.sgcw")).unwrap());
    assert!(std::fs::read_to_string(p.join("y/runs.jsonl")).unwrap().contains("\"seed\":99"));
}
