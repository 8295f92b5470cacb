use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use surgecorr_core::eval::{text_summary, write_scatter, write_station_reports};
use surgecorr_core::model::{
    correct_storm, evaluate_model, grid_search_input_window, run_experiment, write_corrected_csv, EmissionPolicy,
    ScenarioConfig, ScenarioData,
};
use surgecorr_core::persist::{load_model, save_model};
use surgecorr_core::pipeline::{read_storm_csv, Manifest, StationSeries, DEFAULT_MAX_GAP};
use surgecorr_core::scalar::Scalar;
use surgecorr_core::synth::{generate_scenario_corpus, SyntheticCorpusSpec};

mod compare;
mod record;

use record::{RunRecord, SelectedModel, SweepEntry};

#[derive(Parser)]
#[command(name = "surgecorr", version, about = "Storm-surge bias correction with a Conv1D + LSTM offset model")]
struct Cli {
    /// Override the seed from the scenario or spec file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory holding manifest.csv and the storm CSVs.
    #[arg(long, global = true, default_value = ".")]
    data_dir: PathBuf,
    /// Directory for generated files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Precision {
    F64,
    F32,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    NonOverlapping,
    OverlapAverage,
}

impl From<Policy> for EmissionPolicy {
    fn from(p: Policy) -> Self {
        match p {
            Policy::NonOverlapping => EmissionPolicy::NonOverlapping,
            Policy::OverlapAverage => EmissionPolicy::OverlapAverage,
        }
    }
}

/// Storm selection shared by `correct` and `evaluate`.
#[derive(clap::Args)]
#[group(required = true, multiple = false)]
struct StormArg {
    /// Storm id resolved through <data-dir>/manifest.csv.
    #[arg(long)]
    storm: Option<String>,
    /// Storm CSV read directly; the file stem is used as storm id.
    #[arg(long)]
    storm_csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic corpus (storm CSVs + manifest.csv) into --out-dir.
    GenSynthetic {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Sweep w_in for every w_out of a scenario, keep the best model per w_out
    /// and append a run record to <out-dir>/runs.jsonl.
    Train {
        #[arg(long)]
        scenario: PathBuf,
        /// Weight file; with several w_out values `_wout<N>` is inserted before the extension.
        #[arg(long)]
        out_model: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "f64")]
        precision: Precision,
    },
    /// Rolling bias correction of a storm with a trained model.
    Correct {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        storm: StormArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "non-overlapping")]
        policy: Policy,
        #[arg(long, default_value_t = DEFAULT_MAX_GAP)]
        max_gap: usize,
    },
    /// Offset-space metrics, per-station reports and improvement scatter for a held-out storm.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        storm: StormArg,
        /// Report directory (created if missing).
        #[arg(long)]
        out_report: PathBuf,
        #[arg(long, value_enum, default_value = "non-overlapping")]
        policy: Policy,
        #[arg(long, default_value_t = DEFAULT_MAX_GAP)]
        max_gap: usize,
    },
    /// Pairwise Wilcoxon tests between scenarios' R²-vs-w_in sweeps.
    CompareScenarios {
        /// Run record files; the latest record of each scenario is used.
        #[arg(long, num_args = 1.., required = true)]
        records: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Long-format sweep table for box plots.
        #[arg(long)]
        boxplot: Option<PathBuf>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring thread pool")?;
    }
    match &cli.command {
        Command::GenSynthetic { spec } => gen_synthetic(&cli, spec),
        Command::Train { scenario, out_model, precision } => match precision {
            Precision::F64 => train::<f64>(&cli, scenario, out_model.as_deref(), "f64"),
            Precision::F32 => train::<f32>(&cli, scenario, out_model.as_deref(), "f32"),
        },
        Command::Correct { model, storm, out, policy, max_gap } => correct(&cli, model, storm, out, (*policy).into(), *max_gap),
        Command::Evaluate { model, storm, out_report, policy, max_gap } => {
            evaluate(&cli, model, storm, out_report, (*policy).into(), *max_gap)
        }
        Command::CompareScenarios { records, out, boxplot, alpha } => compare_scenarios(records, out, boxplot.as_deref(), *alpha),
    }
}

fn gen_synthetic(cli: &Cli, spec_path: &Path) -> Result<()> {
    let mut spec = SyntheticCorpusSpec::read(spec_path).with_context(|| format!("spec {}", spec_path.display()))?;
    if let Some(seed) = cli.seed {
        // keep per-storm seeds disjoint while shifting the whole corpus
        for s in &mut spec.storm {
            s.seed = s.seed.wrapping_add(seed);
        }
    }
    let manifest = generate_scenario_corpus(&spec.storm, &cli.out_dir)?;
    println!("wrote {} storms to {}", manifest.storms.len(), cli.out_dir.display());
    Ok(())
}

fn manifest(cli: &Cli) -> Result<Manifest> {
    let path = cli.data_dir.join("manifest.csv");
    Ok(Manifest::read(&path)?)
}

fn model_path(cli: &Cli, cfg: &ScenarioConfig, out_model: Option<&Path>, w_out: usize) -> PathBuf {
    let base = out_model.map(Path::to_path_buf).unwrap_or_else(|| cli.out_dir.join(format!("{}.sgcw", cfg.name)));
    if cfg.w_out.len() == 1 {
        return base;
    }
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}_wout{w_out}.{}", ext.to_string_lossy()),
        None => format!("{stem}_wout{w_out}"),
    };
    base.with_file_name(name)
}

fn train<T: Scalar>(cli: &Cli, scenario: &Path, out_model: Option<&Path>, precision: &str) -> Result<()> {
    let started = Instant::now();
    let mut cfg = ScenarioConfig::read(scenario).with_context(|| format!("scenario {}", scenario.display()))?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let manifest = manifest(cli)?;
    let data = ScenarioData::load(&cfg, &manifest)?;
    let mut inputs = Vec::new();
    for storm in cfg.train_storms.iter().chain(std::iter::once(&cfg.test_storm)) {
        inputs.push(manifest.csv_path(storm)?);
    }
    let config_hash = record::config_hash(&serde_json::to_string(&cfg)?, &inputs)?;
    std::fs::create_dir_all(&cli.out_dir).with_context(|| format!("creating {}", cli.out_dir.display()))?;
    println!("scenario '{}': {} training hours, {} test stations", cfg.name, data.train_hours, data.test_series.len());

    let mut sweep = Vec::new();
    let mut selected = Vec::new();
    let mut outputs = Vec::new();
    for &w_out in &cfg.w_out {
        let grid = grid_search_input_window(&cfg.w_in, |w_in| {
            let e = run_experiment::<T>(&cfg, &data, w_in, w_out)?;
            Ok((e.evaluation.offsets.r2, e))
        })
        .with_context(|| format!("w_out={w_out}"))?;
        for row in &grid.rows {
            let m = row.outcome.as_ref().map(|e| &e.evaluation.offsets);
            println!(
                "  w_out={w_out:>2} w_in={:>3}  R²={}  {:.1}s",
                row.w_in,
                row.r2.map_or_else(|| "failed".to_string(), |r| format!("{r:.4}")),
                row.seconds
            );
            sweep.push(SweepEntry {
                w_in: row.w_in,
                w_out,
                r2: row.r2,
                mse: m.map(|m| m.mse),
                rmse: m.map(|m| m.rmse),
                mae: m.map(|m| m.mae),
                train_samples: row.outcome.as_ref().map_or(0, |e| e.train_samples),
                seconds: row.seconds,
                error: row.error.clone(),
            });
        }
        let best = grid.best();
        let exp = best.outcome.as_ref().expect("selected candidate succeeded");
        let path = model_path(cli, &cfg, out_model, w_out);
        save_model(&exp.model, &path)?;
        println!("  selected w_in={} for w_out={w_out} -> {}", best.w_in, path.display());
        selected.push(SelectedModel {
            w_out,
            w_in: best.w_in,
            r2: exp.evaluation.offsets.r2,
            fraction_improved: exp.evaluation.scatter.fraction_improved,
            path: path.clone(),
        });
        outputs.push(path);
    }

    let sweep_path = cli.out_dir.join(format!("{}_sweep.csv", cfg.name));
    let mut w = csv::Writer::from_path(&sweep_path).with_context(|| format!("writing {}", sweep_path.display()))?;
    for e in &sweep {
        w.serialize(e)?;
    }
    w.flush()?;
    outputs.push(sweep_path);

    let rec = RunRecord {
        scenario: cfg.name.clone(),
        config_hash,
        seed: cfg.seed,
        precision: precision.to_string(),
        train_hours: data.train_hours,
        sweep,
        selected,
        seconds: started.elapsed().as_secs_f64(),
        outputs,
    };
    let rec_path = cli.out_dir.join("runs.jsonl");
    record::append(&rec_path, &rec)?;
    println!("appended run record {} to {}", &rec.config_hash[..12], rec_path.display());
    Ok(())
}

fn load_storm(cli: &Cli, arg: &StormArg) -> Result<Vec<StationSeries>> {
    match (&arg.storm, &arg.storm_csv) {
        (Some(id), _) => Ok(manifest(cli)?.load_storm(id)?),
        (None, Some(path)) => {
            let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok(read_storm_csv(path, &id)?)
        }
        (None, None) => bail!("give --storm or --storm-csv"),
    }
}

fn correct(cli: &Cli, model: &Path, storm: &StormArg, out: &Path, policy: EmissionPolicy, max_gap: usize) -> Result<()> {
    let model = load_model::<f64>(model)?;
    let stations = load_storm(cli, storm)?;
    let rows = correct_storm(&model, &stations, policy, max_gap)?;
    let f = std::fs::File::create(out).with_context(|| format!("creating {}", out.display()))?;
    write_corrected_csv(std::io::BufWriter::new(f), &rows)?;
    println!("wrote {} corrected rows to {}", rows.len(), out.display());
    Ok(())
}

fn evaluate(cli: &Cli, model: &Path, storm: &StormArg, out_dir: &Path, policy: EmissionPolicy, max_gap: usize) -> Result<()> {
    let model = load_model::<f64>(model)?;
    let stations = load_storm(cli, storm)?;
    let ev = evaluate_model(&model, &stations, policy, max_gap)?;
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;

    let mut w = csv::Writer::from_path(out_dir.join("offsets.csv"))?;
    w.write_record(["w_in", "w_out", "n", "r2", "mse", "rmse", "mae"])?;
    let o = &ev.offsets;
    w.write_record([
        model.config.w_in.to_string(),
        model.config.w_out.to_string(),
        o.n.to_string(),
        o.r2.to_string(),
        o.mse.to_string(),
        o.rmse.to_string(),
        o.mae.to_string(),
    ])?;
    w.flush()?;
    write_station_reports(std::fs::File::create(out_dir.join("stations.csv"))?, &ev.stations)?;
    write_scatter(std::fs::File::create(out_dir.join("scatter.csv"))?, &ev.scatter)?;

    let mut summary = format!(
        "offsets (w_in={}, w_out={}): R² {:.4}  MSE {:.5}  RMSE {:.4}  MAE {:.4}  (n={})\n",
        model.config.w_in, model.config.w_out, o.r2, o.mse, o.rmse, o.mae, o.n
    );
    summary.push_str(&text_summary(&ev.stations));
    for (station, reason) in &ev.skipped {
        summary.push_str(&format!("skipped {station}: {reason}\n"));
    }
    std::fs::write(out_dir.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}

fn compare_scenarios(records: &[PathBuf], out: &Path, boxplot: Option<&Path>, alpha: f64) -> Result<()> {
    let mut all = Vec::new();
    for p in records {
        all.extend(record::read_all(p)?);
    }
    let recs = compare::latest_per_scenario(all);
    let rows = compare::compare(&recs, alpha)?;
    compare::write_comparison(std::fs::File::create(out).with_context(|| format!("creating {}", out.display()))?, &rows)?;
    if let Some(path) = boxplot {
        compare::write_boxplot(std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?, &recs)?;
    }
    for r in &rows {
        println!(
            "{} vs {}  w_out={:>2}  statistic={}  p={}  {}",
            r.scenario_a,
            r.scenario_b,
            r.w_out,
            r.statistic.map_or("-".into(), |s| s.to_string()),
            r.p_value.map_or("-".into(), |p| format!("{p:.4}")),
            r.method
        );
    }
    Ok(())
}
