//! Pipeline commands behind the `platebench` binary: simulate a dataset,
//! train one model, run the experiment grid, export scatter data, and
//! regenerate reports. Every command writes a manifest capturing the
//! resolved configuration, seeds and SHA-256 hashes of its artifacts, so two
//! runs with equal inputs produce byte-identical manifests.

use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::dataio::{self, WindowedDataset};
use crate::evaluator::{self, CellKey, CellResult, RunScore, Split};
use crate::models::{Family, ModelSpec};
use crate::plate_sim::{self, TimeSeries};
use crate::trainer;
use crate::{Error, Result};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

fn sha256_hex(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn hash_artifacts(paths: &[PathBuf]) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for p in paths {
        let name = p
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| p.display().to_string());
        map.insert(name, sha256_hex(p)?);
    }
    Ok(map)
}

pub struct SimulateArtifacts {
    pub dataset: PathBuf,
    pub manifest: PathBuf,
    pub rows: usize,
    pub num_modes: usize,
}

/// Simulates the configured pulse-train response and writes `dataset.csv`
/// plus a manifest with the plate's modal data and the resolved
/// nonlinearity.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<SimulateArtifacts> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let total = (cfg.excitation.duration / cfg.plate.dt).round() as usize;
    if total == 0 {
        return Err(Error::Config(
            "excitation.duration is shorter than one sample".into(),
        ));
    }
    let sys = plate_sim::assemble_modal_system(&cfg.plate)?;
    let u = plate_sim::pulse_train(
        cfg.excitation.amplitude,
        cfg.excitation.period,
        cfg.excitation.duration_samples,
        total,
        cfg.plate.dt,
    )?;
    let linear = plate_sim::simulate(&sys, &cfg.plate, &u)?;

    let n = linear.y.len() as f64;
    let mean = linear.y.iter().sum::<f64>() / n;
    let linear_std =
        (linear.y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    let nonlinearity = cfg.excitation.nonlinearity.resolve(linear_std)?;
    let y = plate_sim::apply_sensor_nonlinearity(&linear.y, &nonlinearity)?;
    let series = TimeSeries::new(linear.t0, linear.dt, linear.u, y)?;

    let dataset = cfg.dataset_path();
    if let Some(parent) = dataset.parent() {
        std::fs::create_dir_all(parent)?;
    }
    dataio::write_csv(&dataset, &series)?;

    let manifest_path = cfg.output_dir.join("simulate_manifest.json");
    let manifest = serde_json::json!({
        "command": "simulate",
        "config": cfg,
        "resolved_nonlinearity": nonlinearity,
        "linear_response_std": linear_std,
        "rows": series.len(),
        "modal": {
            "num_modes": sys.num_modes(),
            "rigid_count": sys.rigid_count,
            "eigenvalues": sys.lambdas,
        },
        "artifacts": hash_artifacts(&[dataset.clone()])?,
    });
    write_json(&manifest_path, &manifest)?;
    Ok(SimulateArtifacts {
        dataset,
        manifest: manifest_path,
        rows: series.len(),
        num_modes: sys.num_modes(),
    })
}

fn load_split_dataset(cfg: &RunConfig, s: usize) -> Result<WindowedDataset> {
    let series = dataio::load_csv(&cfg.dataset_path())?;
    let trimmed = dataio::trim_prefix(&series, cfg.data.trim_threshold)?;
    let ds = dataio::make_windows(&trimmed, s)?
        .chronological_split_with(cfg.data.split_rule, cfg.data.fractions)?;
    if cfg.data.normalize {
        ds.normalize()
    } else {
        Ok(ds)
    }
}

fn spec_for(cfg: &RunConfig, family: Family, s: usize, h: usize) -> Result<ModelSpec> {
    let spec = match family {
        Family::Lr => {
            if h != 0 {
                return Err(Error::InvalidInput("LR runs at h = 0".into()));
            }
            ModelSpec::lr(s, cfg.train.seed)
        }
        Family::Mlp => ModelSpec::mlp(s, h, cfg.train.seed),
        Family::Gru => ModelSpec::gru(s, h, cfg.grid.gru_width, cfg.train.seed),
    };
    spec.validate()?;
    Ok(spec)
}

pub struct TrainArtifacts {
    pub checkpoint: PathBuf,
    pub trace: PathBuf,
    pub scatter_train: PathBuf,
    pub scatter_test: PathBuf,
    pub manifest: PathBuf,
    pub train_r2: f64,
    pub test_r2: f64,
}

/// Trains one model and writes checkpoint, loss trace, train/test scatter
/// exports and the manifest.
pub fn cmd_train(cfg: &RunConfig, family: Family, s: usize, h: usize) -> Result<TrainArtifacts> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let ds = load_split_dataset(cfg, s)?;
    let spec = spec_for(cfg, family, s, h)?;
    let outcome = trainer::train(&spec, &ds, &cfg.train)?;
    let mut model = outcome.model;

    let train_range = ds.train_targets();
    let preds = trainer::predict_range(&mut model, &ds, train_range.clone());
    let refs: Vec<f64> = train_range.map(|k| ds.y_raw(k)).collect();
    let train_r2 = evaluator::r2_score(&refs, &preds)?;
    let test_range = ds.test_targets();
    let preds = trainer::predict_range(&mut model, &ds, test_range.clone());
    let refs: Vec<f64> = test_range.map(|k| ds.y_raw(k)).collect();
    let test_r2 = evaluator::r2_score(&refs, &preds)?;

    let tag = format!("{family}_{s}_{h}");
    let ckpt_path = cfg.output_dir.join(format!("checkpoint_{tag}.json"));
    Checkpoint::from_model(&model, ds.stats().copied(), cfg.train.seed).save(&ckpt_path)?;
    let trace_path = cfg.output_dir.join(format!("trace_{tag}.csv"));
    trainer::write_trace_csv(&outcome.report.trace, &trace_path)?;
    let scatter_train = cfg.output_dir.join(format!("scatter_{tag}_train.csv"));
    evaluator::export_scatter(&mut model, &ds, Split::Train, &scatter_train)?;
    let scatter_test = cfg.output_dir.join(format!("scatter_{tag}_test.csv"));
    evaluator::export_scatter(&mut model, &ds, Split::Test, &scatter_test)?;

    let manifest_path = cfg.output_dir.join(format!("train_manifest_{tag}.json"));
    let manifest = serde_json::json!({
        "command": "train",
        "config": cfg,
        "family": family,
        "s": s,
        "h": h,
        "seed": cfg.train.seed,
        "best_epoch": outcome.report.best_epoch,
        "epochs_run": outcome.report.trace.len(),
        "stopped_early": outcome.report.stopped_early,
        "train_r2": train_r2,
        "test_r2": test_r2,
        "artifacts": hash_artifacts(&[
            ckpt_path.clone(),
            trace_path.clone(),
            scatter_train.clone(),
            scatter_test.clone(),
        ])?,
    });
    write_json(&manifest_path, &manifest)?;
    Ok(TrainArtifacts {
        checkpoint: ckpt_path,
        trace: trace_path,
        scatter_train,
        scatter_test,
        manifest: manifest_path,
        train_r2,
        test_r2,
    })
}

pub struct GridArtifacts {
    pub grid_csv: PathBuf,
    pub manifest: PathBuf,
    pub table: String,
    pub results: Vec<CellResult>,
}

/// Runs the configured experiment grid and writes `grid_results.csv`, the
/// trend curves and the manifest. Fails only when every cell failed.
pub fn cmd_grid(cfg: &RunConfig, jobs: usize) -> Result<GridArtifacts> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let series = dataio::load_csv(&cfg.dataset_path())?;
    let trimmed = dataio::trim_prefix(&series, cfg.data.trim_threshold)?;
    let data_opts = evaluator::DataOptions {
        fractions: cfg.data.fractions,
        normalize: cfg.data.normalize,
        split_rule: cfg.data.split_rule,
    };
    let results = evaluator::run_grid(&trimmed, &data_opts, &cfg.grid, &cfg.train, jobs)?;
    if results.iter().all(|c| c.best_run.is_none()) {
        return Err(Error::Data("every grid cell failed".into()));
    }

    let grid_csv = cfg.output_dir.join("grid_results.csv");
    evaluator::write_grid_csv(&results, &grid_csv)?;
    evaluator::write_curves(&results, &cfg.output_dir)?;
    let table = evaluator::format_table(&results);

    let manifest_path = cfg.output_dir.join("grid_manifest.json");
    let seeds: Vec<u64> = (0..cfg.grid.n_runs)
        .map(|i| cfg.train.seed.wrapping_add(i as u64))
        .collect();
    let manifest = serde_json::json!({
        "command": "grid",
        "config": cfg,
        "seeds": seeds,
        "cells": results.len(),
        "artifacts": hash_artifacts(&[
            grid_csv.clone(),
            cfg.output_dir.join("curves_vs_s.csv"),
            cfg.output_dir.join("curves_vs_h.csv"),
        ])?,
    });
    write_json(&manifest_path, &manifest)?;
    Ok(GridArtifacts {
        grid_csv,
        manifest: manifest_path,
        table,
        results,
    })
}

/// Re-exports scatter data for an existing checkpoint against the
/// configured dataset, using the checkpoint's own normalization statistics.
pub fn cmd_scatter(
    cfg: &RunConfig,
    checkpoint: &Path,
    split: Split,
    out: Option<PathBuf>,
) -> Result<PathBuf> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    let ckpt = Checkpoint::load(checkpoint)?;
    let spec = ckpt.spec.clone();
    let stats = ckpt.norm_stats;
    let mut model = ckpt.into_model()?;

    let series = dataio::load_csv(&cfg.dataset_path())?;
    let trimmed = dataio::trim_prefix(&series, cfg.data.trim_threshold)?;
    let ds = dataio::make_windows(&trimmed, spec.s)?
        .chronological_split_with(cfg.data.split_rule, cfg.data.fractions)?;
    let ds = match stats {
        Some(st) => ds.normalize_with(st)?,
        None => ds,
    };
    let path = out.unwrap_or_else(|| {
        cfg.output_dir.join(format!(
            "scatter_{}_{}_{}_{}.csv",
            spec.family,
            spec.s,
            spec.h,
            split.as_str()
        ))
    });
    evaluator::export_scatter(&mut model, &ds, split, &path)?;
    Ok(path)
}

/// Rebuilds the trend curves and the summary table from an existing
/// `grid_results.csv`.
pub fn cmd_report(cfg: &RunConfig) -> Result<String> {
    let grid_csv = cfg.output_dir.join("grid_results.csv");
    let results = read_grid_csv(&grid_csv)?;
    evaluator::write_curves(&results, &cfg.output_dir)?;
    Ok(evaluator::format_table(&results))
}

/// Parses `grid_results.csv` back into cell results (scores only).
pub fn read_grid_csv(path: &Path) -> Result<Vec<CellResult>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let mut cells: Vec<(CellKey, Vec<RunScore>)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != 8 {
            return Err(Error::Data("grid_results.csv needs 8 columns".into()));
        }
        let family: Family = record[0].parse()?;
        let key = CellKey {
            family,
            s: record[1]
                .parse()
                .map_err(|_| Error::Data("bad s column".into()))?,
            h: record[2]
                .parse()
                .map_err(|_| Error::Data("bad h column".into()))?,
        };
        let run: usize = record[3]
            .parse()
            .map_err(|_| Error::Data("bad run column".into()))?;
        let seed: u64 = record[4]
            .parse()
            .map_err(|_| Error::Data("bad seed column".into()))?;
        let scores = if &record[5] == "NS" || &record[6] == "NS" {
            None
        } else {
            let tr: f64 = record[5]
                .parse()
                .map_err(|_| Error::Data("bad train_r2 column".into()))?;
            let te: f64 = record[6]
                .parse()
                .map_err(|_| Error::Data("bad test_r2 column".into()))?;
            Some((tr, te))
        };
        let row = RunScore {
            run,
            seed,
            scores,
            error: None,
        };
        match cells.last_mut() {
            Some((k, runs)) if *k == key => runs.push(row),
            _ => cells.push((key, vec![row])),
        }
    }
    if cells.is_empty() {
        return Err(Error::Data("grid_results.csv holds no rows".into()));
    }
    Ok(cells
        .into_iter()
        .map(|(key, runs)| evaluator::rebuild_cell(key, runs))
        .collect())
}

/// Exit code for an error: 1 for configuration/usage problems, 2 for
/// runtime failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidInput(_) => 1,
        _ => 2,
    }
}
