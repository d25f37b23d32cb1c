//! Scoring and the experiment grid: R² computation, best-of-n selection per
//! `(family, s, h)` cell, mean/std aggregation for trend curves, and the
//! CSV/scatter exports.
//!
//! Grid cells are independent jobs; a rayon pool may run them in parallel,
//! and results are merged by `(family, s, h, run)` key order, never by
//! completion order, so reruns with identical seeds reproduce every artifact
//! bit for bit.

use crate::dataio::{make_windows, SplitRule, WindowedDataset};
use crate::models::{Family, Model, ModelSpec};
use crate::plate_sim::TimeSeries;
use crate::trainer::{self, TrainConfig};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

/// Coefficient of determination `R² = 1 − Σ(y−ŷ)² / Σ(y−ȳ)²`.
///
/// A score of 1 is a perfect fit; 0 matches the mean predictor; negative is
/// worse than the mean predictor.
pub fn r2_score(y_ref: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_ref.len() != y_pred.len() || y_ref.len() < 2 {
        return Err(Error::InvalidInput(
            "R² needs two equal-length series of at least 2 points".into(),
        ));
    }
    let n = y_ref.len() as f64;
    let mean = y_ref.iter().sum::<f64>() / n;
    let mut ss_tot = 0.0;
    let mut ss_res = 0.0;
    for (r, p) in y_ref.iter().zip(y_pred.iter()) {
        ss_tot += (r - mean) * (r - mean);
        ss_res += (r - p) * (r - p);
    }
    if ss_tot == 0.0 {
        return Err(Error::InvalidInput(
            "R² undefined: reference series has zero variance".into(),
        ));
    }
    Ok(1.0 - ss_res / ss_tot)
}

/// Which partition of a split dataset to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn targets(&self, ds: &WindowedDataset) -> std::ops::Range<usize> {
        match self {
            Split::Train => ds.train_targets(),
            Split::Val => ds.val_targets(),
            Split::Test => ds.test_targets(),
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "val" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidInput(format!("unknown split `{other}`"))),
        }
    }
}

/// Per-family training-budget overrides for the grid (families converge at
/// very different per-epoch costs).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainOverride {
    pub max_epochs: Option<usize>,
    pub patience: Option<usize>,
    pub lr: Option<f64>,
}

/// Experiment grid description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub families: Vec<Family>,
    pub s_values: Vec<usize>,
    /// Hidden-layer counts for MLP and GRU; LR always runs at h = 0.
    pub h_values: Vec<usize>,
    pub n_runs: usize,
    pub gru_width: usize,
    pub train_overrides: BTreeMap<Family, TrainOverride>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig::desk_default()
    }
}

impl GridConfig {
    /// Full published grid: s ∈ {10, 50, 100, 200}, h ∈ {1, 2, 4, 6}
    /// (plus the LR row), best of 3 runs.
    pub fn paper_default() -> Self {
        GridConfig {
            families: vec![Family::Lr, Family::Mlp, Family::Gru],
            s_values: vec![10, 50, 100, 200],
            h_values: vec![1, 2, 4, 6],
            n_runs: 3,
            gru_width: 16,
            train_overrides: BTreeMap::new(),
        }
    }

    /// Reduced desk-scale grid: s ∈ {10, 50, 100}, h ∈ {1, 2, 4}, with
    /// per-family epoch budgets sized so the whole grid stays in the
    /// minutes range on commodity hardware.
    pub fn desk_default() -> Self {
        let mut overrides = BTreeMap::new();
        overrides.insert(
            Family::Lr,
            TrainOverride {
                max_epochs: Some(40),
                patience: Some(10),
                lr: None,
            },
        );
        overrides.insert(
            Family::Mlp,
            TrainOverride {
                max_epochs: Some(14),
                patience: Some(5),
                lr: None,
            },
        );
        overrides.insert(
            Family::Gru,
            TrainOverride {
                max_epochs: Some(6),
                patience: Some(3),
                lr: None,
            },
        );
        GridConfig {
            families: vec![Family::Lr, Family::Mlp, Family::Gru],
            s_values: vec![10, 50, 100],
            h_values: vec![1, 2, 4],
            n_runs: 3,
            gru_width: 8,
            train_overrides: overrides,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.families.is_empty() || self.s_values.is_empty() {
            return Err(Error::Config("grid needs at least one family and one s".into()));
        }
        let needs_h = self
            .families
            .iter()
            .any(|f| matches!(f, Family::Mlp | Family::Gru));
        if needs_h && self.h_values.is_empty() {
            return Err(Error::Config("grid with MLP/GRU needs h values".into()));
        }
        if self.h_values.iter().any(|&h| h == 0) {
            return Err(Error::Config("grid h values must be >= 1 (LR owns h = 0)".into()));
        }
        if self.n_runs < 1 {
            return Err(Error::Config("grid n_runs must be >= 1".into()));
        }
        if self.families.contains(&Family::Gru) && self.gru_width == 0 {
            return Err(Error::Config("gru_width must be >= 1".into()));
        }
        Ok(())
    }

    /// Cell keys in deterministic (family, s, h) order.
    pub fn cells(&self) -> Vec<CellKey> {
        let mut out = Vec::new();
        for &family in &self.families {
            for &s in &self.s_values {
                match family {
                    Family::Lr => out.push(CellKey { family, s, h: 0 }),
                    _ => {
                        for &h in &self.h_values {
                            out.push(CellKey { family, s, h });
                        }
                    }
                }
            }
        }
        out
    }

    /// Training config for one family: the base with this family's overrides.
    pub fn effective_train(&self, family: Family, base: &TrainConfig) -> TrainConfig {
        let mut cfg = *base;
        if let Some(ovr) = self.train_overrides.get(&family) {
            if let Some(me) = ovr.max_epochs {
                cfg.max_epochs = me;
            }
            if let Some(p) = ovr.patience {
                cfg.patience = p;
            }
            if let Some(lr) = ovr.lr {
                cfg.lr = lr;
            }
        }
        cfg
    }

    fn spec_for(&self, key: &CellKey, seed: u64) -> ModelSpec {
        match key.family {
            Family::Lr => ModelSpec::lr(key.s, seed),
            Family::Mlp => ModelSpec::mlp(key.s, key.h, seed),
            Family::Gru => ModelSpec::gru(key.s, key.h, self.gru_width, seed),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub family: Family,
    pub s: usize,
    pub h: usize,
}

/// One run's scores inside a cell; `scores` is `None` for not-scored runs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunScore {
    pub run: usize,
    pub seed: u64,
    pub scores: Option<(f64, f64)>,
    pub error: Option<String>,
}

/// Aggregated mean/std over the scored runs of one cell (population
/// formula, n divisor).
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct CellStats {
    pub mean_train: f64,
    pub std_train: f64,
    pub mean_test: f64,
    pub std_test: f64,
    pub scored: usize,
    /// Set when only a single run was scored (σ reported as 0 by convention).
    pub single_run: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellResult {
    pub key: CellKey,
    pub runs: Vec<RunScore>,
    /// Index into `runs` of the best run by training R² (ties broken by
    /// lowest seed); `None` when no run scored.
    pub best_run: Option<usize>,
    pub stats: Option<CellStats>,
}

impl CellResult {
    pub fn best(&self) -> Option<&RunScore> {
        self.best_run.map(|i| &self.runs[i])
    }
}

/// Dataset-side options of a grid run.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct DataOptions {
    pub fractions: [f64; 3],
    pub normalize: bool,
    pub split_rule: SplitRule,
}

impl Default for DataOptions {
    fn default() -> Self {
        DataOptions {
            fractions: crate::dataio::DEFAULT_FRACTIONS,
            normalize: true,
            split_rule: SplitRule::Floor,
        }
    }
}

fn population_stats(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Recomputes best-run selection and statistics for a cell's run rows
/// (used both after training and when re-reading grid CSVs).
pub fn rebuild_cell(key: CellKey, runs: Vec<RunScore>) -> CellResult {
    aggregate_cell(key, runs)
}

fn aggregate_cell(key: CellKey, runs: Vec<RunScore>) -> CellResult {
    let mut best: Option<usize> = None;
    for (i, r) in runs.iter().enumerate() {
        if let Some((train_r2, _)) = r.scores {
            let better = match best {
                None => true,
                // strict comparison keeps the lowest seed on ties because
                // runs are seed-ordered
                Some(b) => train_r2 > runs[b].scores.unwrap().0,
            };
            if better {
                best = Some(i);
            }
        }
    }
    let scored: Vec<(f64, f64)> = runs.iter().filter_map(|r| r.scores).collect();
    let stats = if scored.is_empty() {
        None
    } else {
        let (mean_train, std_train) =
            population_stats(&scored.iter().map(|s| s.0).collect::<Vec<_>>());
        let (mean_test, std_test) =
            population_stats(&scored.iter().map(|s| s.1).collect::<Vec<_>>());
        Some(CellStats {
            mean_train,
            std_train,
            mean_test,
            std_test,
            scored: scored.len(),
            single_run: scored.len() == 1,
        })
    };
    CellResult {
        key,
        runs,
        best_run: best,
        stats,
    }
}

/// Runs the full `(family, s, h) × n_runs` grid over one (already trimmed)
/// record: windows are rebuilt per `s`, split and normalized, every run is
/// trained and scored on de-normalized predictions, and per-cell failures
/// are recorded as not-scored without touching the remaining cells.
pub fn run_grid(
    series: &TimeSeries,
    data: &DataOptions,
    grid: &GridConfig,
    train_cfg: &TrainConfig,
    jobs: usize,
) -> Result<Vec<CellResult>> {
    grid.validate()?;
    train_cfg.validate()?;

    // one dataset per distinct window length, shared across cells
    let mut datasets: BTreeMap<usize, std::result::Result<Arc<WindowedDataset>, String>> =
        BTreeMap::new();
    for &s in &grid.s_values {
        datasets.entry(s).or_insert_with(|| {
            make_windows(series, s)
                .and_then(|ds| ds.chronological_split_with(data.split_rule, data.fractions))
                .and_then(|ds| if data.normalize { ds.normalize() } else { Ok(ds) })
                .map(Arc::new)
                .map_err(|e| e.to_string())
        });
    }

    let cells = grid.cells();
    let mut items: Vec<(usize, usize)> = Vec::new();
    for ci in 0..cells.len() {
        for run in 0..grid.n_runs {
            items.push((ci, run));
        }
    }

    let run_item = |&(ci, run): &(usize, usize)| -> RunScore {
        let key = &cells[ci];
        let seed = train_cfg.seed.wrapping_add(run as u64);
        match &datasets[&key.s] {
            Err(msg) => RunScore {
                run,
                seed,
                scores: None,
                error: Some(msg.clone()),
            },
            Ok(ds) => {
                let spec = grid.spec_for(key, seed);
                let cfg = TrainConfig {
                    seed,
                    ..grid.effective_train(key.family, train_cfg)
                };
                match trainer::run_repeats(&spec, ds, &cfg, 1) {
                    Ok(mut records) => match records.remove(0).1 {
                        Ok(rec) => RunScore {
                            run,
                            seed,
                            scores: Some((rec.train_r2, rec.test_r2)),
                            error: None,
                        },
                        Err(e) => RunScore {
                            run,
                            seed,
                            scores: None,
                            error: Some(e.to_string()),
                        },
                    },
                    Err(e) => RunScore {
                        run,
                        seed,
                        scores: None,
                        error: Some(e.to_string()),
                    },
                }
            }
        }
    };

    let scores: Vec<RunScore> = if jobs == 1 {
        items.iter().map(run_item).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
        pool.install(|| items.par_iter().map(run_item).collect())
    };

    let mut results = Vec::with_capacity(cells.len());
    for (ci, key) in cells.iter().enumerate() {
        let runs: Vec<RunScore> = scores[ci * grid.n_runs..(ci + 1) * grid.n_runs].to_vec();
        results.push(aggregate_cell(*key, runs));
    }
    Ok(results)
}

fn fmt_r2(v: f64) -> String {
    format!("{v}")
}

/// Writes `family,s,h,run,seed,train_r2,test_r2,best_flag`; not-scored runs
/// carry `NS` in both score columns.
pub fn write_grid_csv(results: &[CellResult], path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "family,s,h,run,seed,train_r2,test_r2,best_flag")?;
    for cell in results {
        for (i, run) in cell.runs.iter().enumerate() {
            let (train, test) = match run.scores {
                Some((a, b)) => (fmt_r2(a), fmt_r2(b)),
                None => ("NS".to_string(), "NS".to_string()),
            };
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                cell.key.family,
                cell.key.s,
                cell.key.h,
                run.run,
                run.seed,
                train,
                test,
                cell.best_run == Some(i)
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_curves_file(
    results: &[CellResult],
    path: &Path,
    vs_s: bool,
) -> Result<()> {
    let mut rows: Vec<&CellResult> = results.iter().collect();
    rows.sort_by_key(|c| {
        if vs_s {
            (c.key.family, c.key.h, c.key.s)
        } else {
            (c.key.family, c.key.s, c.key.h)
        }
    });
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "family,s,h,split,mu,sigma,runs_scored,single_run")?;
    for cell in rows {
        if let Some(st) = &cell.stats {
            for (split, mu, sigma) in [
                ("train", st.mean_train, st.std_train),
                ("test", st.mean_test, st.std_test),
            ] {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{}",
                    cell.key.family,
                    cell.key.s,
                    cell.key.h,
                    split,
                    mu,
                    if st.single_run { 0.0 } else { sigma },
                    st.scored,
                    st.single_run
                )?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Mean ± std curves: R² vs s at fixed h, and R² vs h at fixed s.
pub fn write_curves(results: &[CellResult], dir: &Path) -> Result<()> {
    write_curves_file(results, &dir.join("curves_vs_s.csv"), true)?;
    write_curves_file(results, &dir.join("curves_vs_h.csv"), false)?;
    Ok(())
}

/// Human-readable summary table in the published layout: one block per
/// family, `h` rows against `s` columns, each cell `train/test` of the
/// best run.
pub fn format_table(results: &[CellResult]) -> String {
    use std::fmt::Write as _;
    let mut s_values: Vec<usize> = results.iter().map(|c| c.key.s).collect();
    s_values.sort_unstable();
    s_values.dedup();
    let mut out = String::new();
    for family in [Family::Lr, Family::Mlp, Family::Gru] {
        let cells: Vec<&CellResult> = results.iter().filter(|c| c.key.family == family).collect();
        if cells.is_empty() {
            continue;
        }
        let mut h_values: Vec<usize> = cells.iter().map(|c| c.key.h).collect();
        h_values.sort_unstable();
        h_values.dedup();
        let _ = writeln!(out, "{} (train/test R², best run)", family.as_str().to_uppercase());
        let mut header = String::from(" h\\s ");
        for &s in &s_values {
            let _ = write!(header, "{:>16}", s);
        }
        let _ = writeln!(out, "{header}");
        for &h in &h_values {
            let mut row = format!("{h:>4} ");
            for &s in &s_values {
                let entry = cells
                    .iter()
                    .find(|c| c.key.h == h && c.key.s == s)
                    .and_then(|c| c.best())
                    .and_then(|r| r.scores)
                    .map(|(tr, te)| format!("{tr:.3}/{te:.3}"))
                    .unwrap_or_else(|| "NS/NS".to_string());
                let _ = write!(row, "{entry:>16}");
            }
            let _ = writeln!(out, "{row}");
        }
        let _ = writeln!(out);
    }
    out
}

/// Scatter export: one `y_ref,y_pred` row per target of the chosen split
/// (de-normalized), plus a JSON sidecar with the identity-line endpoints.
pub fn export_scatter(
    model: &mut Model,
    ds: &WindowedDataset,
    split: Split,
    path: &Path,
) -> Result<()> {
    if model.spec().s != ds.s() {
        return Err(Error::InvalidInput(format!(
            "checkpoint window length {} does not match dataset window length {}",
            model.spec().s,
            ds.s()
        )));
    }
    if ds.bounds().is_none() {
        return Err(Error::InvalidInput("scatter export requires a split dataset".into()));
    }
    let range = split.targets(ds);
    let preds = trainer::predict_range(model, ds, range.clone());
    let refs: Vec<f64> = range.map(|k| ds.y_raw(k)).collect();
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "y_ref,y_pred")?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (r, p) in refs.iter().zip(preds.iter()) {
        lo = lo.min(*r).min(*p);
        hi = hi.max(*r).max(*p);
        writeln!(w, "{:.17e},{:.17e}", r, p)?;
    }
    w.flush()?;
    let meta = serde_json::json!({
        "split": split.as_str(),
        "rows": refs.len(),
        "identity_line": { "min": lo, "max": hi },
    });
    let mut json_path = path.as_os_str().to_owned();
    json_path.push(".json");
    std::fs::write(json_path, serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}
