use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use qforecast::data::{build_dataset, lorenz_generate, surrogate_generate, write_csv, LorenzParams, SurrogateParams};
use qforecast::models::{predict, Checkpoint};
use qforecast::train::{aggregate, train_run, Regime, RunRecord, Summary, FINAL_EPOCHS};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ConfigFile;
use crate::{Classify, DataSource, Failure, OrExit, EXIT_CONFIG, EXIT_DATA, EXIT_RUN};

pub const MANIFEST_VERSION: u32 = 1;

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).or_exit(EXIT_RUN)?;
    fs::write(path, text + "\n").map_err(|e| Failure::new(EXIT_DATA, anyhow!("writing {}: {e}", path.display())))
}

fn create_dir(path: &Path) -> Result<(), Failure> {
    fs::create_dir_all(path).map_err(|e| Failure::new(EXIT_DATA, anyhow!("creating {}: {e}", path.display())))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, Failure> {
    csv::Writer::from_path(path).map_err(|e| Failure::new(EXIT_DATA, anyhow!("writing {}: {e}", path.display())))
}

pub fn generate_data(
    source: DataSource,
    out: &Path,
    points: Option<usize>,
    dt: Option<f64>,
    channels: Option<usize>,
    seed: u64,
) -> Result<(), Failure> {
    let series = match source {
        DataSource::Lorenz => {
            if channels.is_some_and(|c| c != 3) {
                return Err(Failure::new(EXIT_CONFIG, anyhow!("the Lorenz system has exactly 3 channels")));
            }
            let mut p = LorenzParams::default();
            p.n_points = points.unwrap_or(p.n_points);
            p.dt = dt.unwrap_or(p.dt);
            lorenz_generate(&p).classify("generating Lorenz trajectory")?
        }
        DataSource::Surrogate => {
            if dt.is_some() {
                return Err(Failure::new(EXIT_CONFIG, anyhow!("--dt only applies to --source lorenz")));
            }
            let mut p = SurrogateParams {
                seed,
                ..Default::default()
            };
            p.n_points = points.unwrap_or(p.n_points);
            p.channels = channels.unwrap_or(p.channels);
            surrogate_generate(&p).classify("generating surrogate series")?
        }
    };
    write_csv(out, &series).classify("writing series")?;
    log::info!("wrote {} rows × {} channels to {}", series.len(), series.channels(), out.display());
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    manifest_version: u32,
    tool: &'static str,
    version: &'static str,
    build: String,
    seeds: &'a [u64],
    config: &'a ConfigFile,
    windows: usize,
    train_windows: usize,
    clamped_values: usize,
    param_count: usize,
}

fn build_id() -> String {
    let profile = if cfg!(debug_assertions) { "debug" } else { "release" };
    format!("{}+{profile}", env!("CARGO_PKG_VERSION"))
}

pub fn train(config: &Path, out: Option<PathBuf>, seeds: Option<Vec<u64>>) -> Result<(), Failure> {
    let mut cfg = ConfigFile::load(config).or_exit(EXIT_CONFIG)?;
    if let Some(s) = seeds {
        cfg.training.seeds = s;
    }
    let out = out
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| Failure::new(EXIT_CONFIG, anyhow!("no output directory: pass --out or set output_dir")))?;
    let spec = cfg.spec();
    spec.validate().classify("validating config")?;
    if spec.training.epochs < FINAL_EPOCHS {
        return Err(Failure::new(
            EXIT_CONFIG,
            anyhow!("training.epochs must be at least {FINAL_EPOCHS} so results can be aggregated"),
        ));
    }
    let data = build_dataset(&spec.dataset).classify("loading dataset")?;
    let model_cfg = spec.model_config(data.channels(), data.target);
    model_cfg.validate().classify("validating model for this dataset")?;
    log::info!(
        "{}: {} windows ({} train), {} seed(s)",
        spec.name,
        data.len(),
        data.n_train,
        spec.training.seeds.len()
    );

    for sub in ["runs", "checkpoints"] {
        create_dir(&out.join(sub))?;
    }
    let mut resolved = cfg.clone();
    resolved.output_dir = None;
    let param_count = qforecast::models::build_model(&model_cfg, 0)
        .map(|m| qforecast::models::count_parameters(m.as_ref()))
        .classify("building model")?;
    write_json(
        &out.join("manifest.json"),
        &Manifest {
            manifest_version: MANIFEST_VERSION,
            tool: "qforecast",
            version: env!("CARGO_PKG_VERSION"),
            build: build_id(),
            seeds: &spec.training.seeds,
            config: &resolved,
            windows: data.len(),
            train_windows: data.n_train,
            clamped_values: data.clamped,
            param_count,
        },
    )?;
    fs::write(out.join("config.toml"), resolved.to_toml().or_exit(EXIT_RUN)?).or_exit(EXIT_DATA)?;

    let runs = spec
        .training
        .seeds
        .par_iter()
        .map(|&seed| train_run(&spec, &data, seed))
        .collect::<qforecast::Result<Vec<_>>>()
        .classify("training")?;

    let mut records: Vec<RunRecord> = Vec::with_capacity(runs.len());
    let mut timing = BTreeMap::new();
    for run in &runs {
        let seed = run.record.seed;
        write_json(&out.join(format!("runs/seed-{seed}.json")), &run.record.without_timing())?;
        timing.insert(format!("seed-{seed}"), run.record.epoch_seconds.clone());
        Checkpoint::from_model(run.model.as_ref(), Some(data.normalizer.clone()))
            .save(out.join(format!("checkpoints/seed-{seed}.json")))
            .classify("writing checkpoint")?;
        records.push(run.record.clone());
    }
    write_json(&out.join("timing.json"), &timing)?;
    write_rmse_curves(&out.join("val_rmse.csv"), &records)?;

    let failed = records.iter().filter(|r| !r.completed()).count();
    if failed == records.len() {
        return Err(Failure::new(EXIT_RUN, anyhow!("all {failed} run(s) failed; no summary written")));
    }
    let summary = aggregate(&records, spec.regime).classify("aggregating runs")?;
    write_json(&out.join("summary.json"), &summary)?;
    log::info!(
        "{}: RMSE {:.4e} ± {:.1e} over {} seed(s), {} parameters",
        spec.name,
        summary.rmse.mean,
        summary.rmse.sd,
        summary.completed_runs,
        summary.param_count
    );
    if failed > 0 {
        return Err(Failure::new(EXIT_RUN, anyhow!("{failed} of {} run(s) failed", records.len())));
    }
    Ok(())
}

/// `epoch, seed-0, seed-1, …`, empty where a run stopped early.
fn write_rmse_curves(path: &Path, records: &[RunRecord]) -> Result<(), Failure> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["epoch".to_string()];
    header.extend(records.iter().map(|r| format!("seed-{}", r.seed)));
    w.write_record(&header).or_exit(EXIT_DATA)?;
    let longest = records.iter().map(|r| r.epochs.len()).max().unwrap_or(0);
    for e in 0..longest {
        let mut row = vec![e.to_string()];
        row.extend(records.iter().map(|r| r.epochs.get(e).map_or(String::new(), |x| format!("{:?}", x.val.rmse))));
        w.write_record(&row).or_exit(EXIT_DATA)?;
    }
    w.flush().or_exit(EXIT_DATA)
}

fn read_summary(dir: &Path) -> Result<Summary, Failure> {
    let path = dir.join("summary.json");
    let text = fs::read_to_string(&path).map_err(|e| Failure::new(EXIT_DATA, anyhow!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::new(EXIT_DATA, anyhow!("malformed {}: {e}", path.display())))
}

const REGIMES: [Regime; 2] = [Regime::ShortTerm, Regime::LongTerm];

pub fn report(runs: &[PathBuf], out: Option<&Path>) -> Result<(), Failure> {
    if runs.is_empty() {
        return Err(Failure::new(EXIT_CONFIG, anyhow!("no run directories given")));
    }
    // model → regime → summary, rows in first-seen order
    let mut order: Vec<String> = Vec::new();
    let mut cells: BTreeMap<(String, &'static str), Summary> = BTreeMap::new();
    for dir in runs {
        let s = read_summary(dir)?;
        if !order.contains(&s.model) {
            order.push(s.model.clone());
        }
        let key = (s.model.clone(), s.regime.label());
        if cells.contains_key(&key) {
            return Err(Failure::new(
                EXIT_DATA,
                anyhow!("two summaries for {} {} (second in {})", key.0, key.1, dir.display()),
            ));
        }
        cells.insert(key, s);
    }

    let fmt = |s: Option<&Summary>, f: fn(&Summary) -> f64| s.map_or("-".to_string(), |s| format!("{:.4}", f(s)));
    let metrics: [(&str, fn(&Summary) -> f64); 3] = [("MAPE", |s| s.mape.mean), ("MAE", |s| s.mae.mean), ("RMSE", |s| s.rmse.mean)];
    let width = order.iter().map(|m| m.len()).max().unwrap_or(5).max(5);
    let mut text = format!("{:width$} |", "Model");
    for r in REGIMES {
        text += &format!(" {:^26} |", r.label());
    }
    text += &format!("\n{:width$} |", "");
    for _ in REGIMES {
        text += &format!(" {:>8} {:>8} {:>8} |", "MAPE", "MAE", "RMSE");
    }
    text.push('\n');
    for m in &order {
        text += &format!("{m:width$} |");
        for r in REGIMES {
            let s = cells.get(&(m.clone(), r.label()));
            for (_, f) in metrics {
                text += &format!(" {:>8}", fmt(s, f));
            }
            text += " |";
        }
        text.push('\n');
    }
    print!("{text}");

    if let Some(path) = out {
        let mut w = csv_writer(path)?;
        let mut header = vec!["model".to_string()];
        for r in REGIMES {
            header.push(format!("{}_params", r.label()));
            for (name, _) in metrics {
                header.push(format!("{}_{}_mean", r.label(), name.to_lowercase()));
                header.push(format!("{}_{}_sd", r.label(), name.to_lowercase()));
            }
        }
        w.write_record(&header).or_exit(EXIT_DATA)?;
        for m in &order {
            let mut row = vec![m.clone()];
            for r in REGIMES {
                let s = cells.get(&(m.clone(), r.label()));
                row.push(s.map_or(String::new(), |s| s.param_count.to_string()));
                for (name, _) in metrics {
                    let ms = s.map(|s| match name {
                        "MAPE" => s.mape,
                        "MAE" => s.mae,
                        _ => s.rmse,
                    });
                    row.push(ms.map_or(String::new(), |v| format!("{:?}", v.mean)));
                    row.push(ms.map_or(String::new(), |v| format!("{:?}", v.sd)));
                }
            }
            w.write_record(&row).or_exit(EXIT_DATA)?;
        }
        w.flush().or_exit(EXIT_DATA)?;
    }
    Ok(())
}

pub fn forecast(checkpoint: &Path, config: &Path, out: &Path, horizons: Option<Vec<usize>>) -> Result<(), Failure> {
    let cfg = ConfigFile::load(config).or_exit(EXIT_CONFIG)?;
    let ckpt = Checkpoint::load(checkpoint).classify("reading checkpoint")?;
    let model = ckpt.into_model().classify("restoring checkpoint")?;
    let data = build_dataset(&cfg.dataset).classify("loading dataset")?;
    let mc = model.config();
    if (mc.lookback, mc.horizon, mc.channels, mc.target_channel) != (data.lookback, data.horizon, data.channels(), data.target) {
        return Err(Failure::new(
            EXIT_CONFIG,
            anyhow!(
                "checkpoint expects lookback {}, horizon {}, {} channel(s), target {:?}; dataset has {}, {}, {}, {:?}",
                mc.lookback,
                mc.horizon,
                mc.channels,
                mc.target_channel,
                data.lookback,
                data.horizon,
                data.channels(),
                data.target
            ),
        ));
    }
    let horizons = horizons.unwrap_or_else(|| (1..=data.horizon).collect());
    if let Some(h) = horizons.iter().find(|h| **h == 0 || **h > data.horizon) {
        return Err(Failure::new(EXIT_CONFIG, anyhow!("horizon {h} outside 1..={}", data.horizon)));
    }
    let norm = ckpt.normalizer.clone().unwrap_or_else(|| data.normalizer.clone());
    let raw = cfg.dataset.load_series().classify("loading dataset")?;
    let cols: Vec<usize> = match data.target {
        Some(t) => vec![t],
        None => (0..data.channels()).collect(),
    };

    let mut w = csv_writer(out)?;
    let mut header = vec!["origin".to_string()];
    for &h in &horizons {
        for &c in &cols {
            let name = &data.series.channel_names[c];
            let suffix = if data.horizon == 1 { String::new() } else { format!("_h{h}") };
            header.push(format!("{name}{suffix}_truth"));
            header.push(format!("{name}{suffix}_pred"));
        }
    }
    w.write_record(&header).or_exit(EXIT_DATA)?;
    let preds = data
        .val_range()
        .into_par_iter()
        .map(|i| predict(model.as_ref(), &data.input(i)))
        .collect::<qforecast::Result<Vec<_>>>()
        .classify("forecasting")?;
    for (i, p) in data.val_range().zip(&preds) {
        let origin = data.starts[i] + data.lookback - 1;
        let mut row = vec![origin.to_string()];
        for &h in &horizons {
            for (k, &c) in cols.iter().enumerate() {
                let truth = raw.values[origin + h][c];
                let pred = norm.invert_value(c, p.get(h - 1, k));
                row.push(format!("{truth:?}"));
                row.push(format!("{pred:?}"));
            }
        }
        w.write_record(&row).or_exit(EXIT_DATA)?;
    }
    w.flush().or_exit(EXIT_DATA)?;
    log::info!("wrote {} forecasts to {}", preds.len(), out.display());
    Ok(())
}
