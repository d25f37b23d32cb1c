//! Dataset ingestion and supervised-pair construction: CSV input/output,
//! pre-impulse trimming, sliding-window pairing, chronological splitting and
//! training-block normalization.
//!
//! Windows follow the newest-first convention: the window for target index
//! `k` is `(u(t_k), u(t_k − Δt), …, u(t_k − (s−1) Δt))`. Reversing it
//! silently changes linear-regression weights, so the order is fixed here
//! and asserted by tests.

use crate::nn_core::Mat;
use crate::plate_sim::TimeSeries;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{BufWriter, Read, Write};
use std::ops::Range;
use std::path::Path;

/// Chronological train/validation/test fractions used throughout.
pub const DEFAULT_FRACTIONS: [f64; 3] = [0.64, 0.16, 0.20];

/// Writes `t,u,y` rows with 17-significant-digit floats (round-trip exact).
pub fn write_csv(path: &Path, series: &TimeSeries) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "t,u,y")?;
    for k in 0..series.len() {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e}",
            series.time_at(k),
            series.u[k],
            series.y[k]
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Loads a `t,u,y` CSV; the sampling interval is the median of successive
/// time differences, and any step deviating from it by more than 1e-6
/// relative is rejected.
pub fn load_csv(path: &Path) -> Result<TimeSeries> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    {
        let headers = reader.headers()?;
        let expect = ["t", "u", "y"];
        if headers.len() != 3 || headers.iter().zip(expect).any(|(a, b)| a != b) {
            return Err(Error::Data(format!(
                "expected header t,u,y in {}, got {:?}",
                path.display(),
                headers
            )));
        }
    }
    let mut t = Vec::new();
    let mut u = Vec::new();
    let mut y = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != 3 {
            return Err(Error::Data(format!("row {}: expected 3 fields", i + 2)));
        }
        let parse = |field: &str, name: &str| -> Result<f64> {
            field.trim().parse::<f64>().map_err(|_| {
                Error::Data(format!("row {}: malformed {name} value `{field}`", i + 2))
            })
        };
        t.push(parse(&record[0], "t")?);
        u.push(parse(&record[1], "u")?);
        y.push(parse(&record[2], "y")?);
    }
    if t.len() < 2 {
        return Err(Error::Data("need at least two rows to infer the step".into()));
    }
    let diffs: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    if diffs.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::Data("time column must be strictly increasing".into()));
    }
    let dt = {
        let mut sorted = diffs.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted[sorted.len() / 2]
    };
    let worst = diffs
        .iter()
        .map(|d| (d - dt).abs())
        .fold(0.0f64, f64::max);
    if worst > 1e-6 * dt {
        return Err(Error::Data(format!(
            "inconsistent sampling step: jitter {worst:e} exceeds 1e-6 of dt = {dt:e}"
        )));
    }
    TimeSeries::new(t[0], dt, u, y)
}

/// Drops all samples strictly before the first index where `|u| > threshold`.
pub fn trim_prefix(series: &TimeSeries, threshold: f64) -> Result<TimeSeries> {
    let first = series
        .u
        .iter()
        .position(|&v| v.abs() > threshold)
        .ok_or_else(|| Error::Data("no impulse found: input never exceeds threshold".into()))?;
    TimeSeries::new(
        series.time_at(first),
        series.dt,
        series.u[first..].to_vec(),
        series.y[first..].to_vec(),
    )
}

fn check_fractions(fractions: [f64; 3]) -> Result<()> {
    if fractions.iter().any(|&f| !(f > 0.0)) {
        return Err(Error::InvalidInput("split fractions must be positive".into()));
    }
    let sum: f64 = fractions.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "split fractions must sum to 1, got {sum}"
        )));
    }
    Ok(())
}

/// How sample counts are derived from the fractions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitRule {
    /// Train and validation sizes are floor-rounded; the remainder goes to
    /// test.
    #[default]
    Floor,
    /// Two-stage split as used for the published counts: the test share is
    /// cut from the whole record first (rounded), then the validation share
    /// is cut from the remainder (rounded); training keeps the rest.
    Nested,
}

/// Floor rule: `(floor(f_train n), floor(f_val n), remainder)`.
pub fn split_counts(n: usize, fractions: [f64; 3]) -> Result<(usize, usize, usize)> {
    check_fractions(fractions)?;
    let n_train = (fractions[0] * n as f64).floor() as usize;
    let n_val = (fractions[1] * n as f64).floor() as usize;
    let n_test = n - n_train - n_val;
    Ok((n_train, n_val, n_test))
}

/// Nested rule: `test = round(f_test n)`, `val = round(f_val (n - test))`,
/// `train = n - test - val`. Applied to 470,354 samples with fractions
/// (0.64, 0.16, 0.20) this yields 316,078 / 60,205 / 94,071.
pub fn nested_split_counts(n: usize, fractions: [f64; 3]) -> Result<(usize, usize, usize)> {
    check_fractions(fractions)?;
    let n_test = (fractions[2] * n as f64).round() as usize;
    let n_val = (fractions[1] * (n - n_test) as f64).round() as usize;
    let n_train = n - n_test - n_val;
    Ok((n_train, n_val, n_test))
}

/// Per-signal affine normalization statistics, computed on the training
/// partition only.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub u_mean: f64,
    pub u_std: f64,
    pub y_mean: f64,
    pub y_std: f64,
}

/// Chronological sample counts of the three blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitBounds {
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
}

/// Sliding-window supervised dataset over one SISO record.
///
/// Targets live at sample indices `s-1 .. n`; the first `s-1` samples only
/// ever serve as window history (windows that would cross the trimmed prefix
/// are dropped, not padded). After a split, target indices partition into
/// chronological train/val/test ranges; validation and test windows may draw
/// history from the preceding block, because history is input, not target.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowedDataset {
    s: usize,
    u: Vec<f64>,
    y_model: Vec<f64>,
    y_raw: Vec<f64>,
    bounds: Option<SplitBounds>,
    stats: Option<NormStats>,
}

/// Builds the (unsplit) window set with length `s`; pair count is `n − s + 1`.
pub fn make_windows(series: &TimeSeries, s: usize) -> Result<WindowedDataset> {
    if s < 1 {
        return Err(Error::InvalidInput("window length s must be >= 1".into()));
    }
    if series.len() < s {
        return Err(Error::InvalidInput(format!(
            "series of {} samples is shorter than the window length {s}",
            series.len()
        )));
    }
    Ok(WindowedDataset {
        s,
        u: series.u.clone(),
        y_model: series.y.clone(),
        y_raw: series.y.clone(),
        bounds: None,
        stats: None,
    })
}

impl WindowedDataset {
    pub fn s(&self) -> usize {
        self.s
    }

    /// Number of samples in the underlying record.
    pub fn num_samples(&self) -> usize {
        self.u.len()
    }

    /// Number of supervised pairs: `n − s + 1`.
    pub fn num_pairs(&self) -> usize {
        self.u.len() - self.s + 1
    }

    /// Sample index of the first usable target.
    pub fn first_target(&self) -> usize {
        self.s - 1
    }

    pub fn bounds(&self) -> Option<&SplitBounds> {
        self.bounds.as_ref()
    }

    pub fn stats(&self) -> Option<&NormStats> {
        self.stats.as_ref()
    }

    /// Splits the sample record into chronological train/val/test blocks
    /// with the floor rule.
    pub fn chronological_split(self, fractions: [f64; 3]) -> Result<Self> {
        self.chronological_split_with(SplitRule::Floor, fractions)
    }

    pub fn chronological_split_with(
        mut self,
        rule: SplitRule,
        fractions: [f64; 3],
    ) -> Result<Self> {
        let n = self.u.len();
        let (n_train, n_val, n_test) = match rule {
            SplitRule::Floor => split_counts(n, fractions)?,
            SplitRule::Nested => nested_split_counts(n, fractions)?,
        };
        if n_val == 0 || n_test == 0 {
            return Err(Error::InvalidInput(
                "split produced an empty validation or test block".into(),
            ));
        }
        if n_train < self.s {
            return Err(Error::InvalidInput(format!(
                "training block of {n_train} samples holds no complete window of length {}",
                self.s
            )));
        }
        self.bounds = Some(SplitBounds {
            n_train,
            n_val,
            n_test,
        });
        Ok(self)
    }

    /// Standardizes `u` and `y` by the training block's mean and standard
    /// deviation (u over all training samples, y over training targets).
    /// Predictions are mapped back through [`Self::denormalize`], so scores
    /// are always computed in original units.
    pub fn normalize(mut self) -> Result<Self> {
        let bounds = self
            .bounds
            .ok_or_else(|| Error::InvalidInput("normalize requires a split dataset".into()))?;
        let mean_std = |xs: &[f64]| -> (f64, f64) {
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
            (mean, var.sqrt())
        };
        let (u_mean, u_std) = mean_std(&self.u[..bounds.n_train]);
        let (y_mean, y_std) = mean_std(&self.y_raw[self.first_target()..bounds.n_train]);
        if u_std == 0.0 || y_std == 0.0 || !u_std.is_finite() || !y_std.is_finite() {
            return Err(Error::Data(
                "zero variance in the training block; cannot standardize".into(),
            ));
        }
        for v in &mut self.u {
            *v = (*v - u_mean) / u_std;
        }
        self.y_model = self
            .y_raw
            .iter()
            .map(|y| (y - y_mean) / y_std)
            .collect();
        self.stats = Some(NormStats {
            u_mean,
            u_std,
            y_mean,
            y_std,
        });
        Ok(self)
    }

    /// Applies previously computed statistics (for example from a
    /// checkpoint) instead of recomputing them from the training block.
    pub fn normalize_with(mut self, st: NormStats) -> Result<Self> {
        if !(st.u_std > 0.0) || !(st.y_std > 0.0) {
            return Err(Error::InvalidInput(
                "normalization statistics need positive standard deviations".into(),
            ));
        }
        for v in &mut self.u {
            *v = (*v - st.u_mean) / st.u_std;
        }
        self.y_model = self
            .y_raw
            .iter()
            .map(|y| (y - st.y_mean) / st.y_std)
            .collect();
        self.stats = Some(st);
        Ok(self)
    }

    /// Maps a model-scale prediction back to original output units.
    pub fn denormalize(&self, pred: f64) -> f64 {
        match &self.stats {
            Some(st) => st.y_mean + st.y_std * pred,
            None => pred,
        }
    }

    /// Target sample indices of each block.
    pub fn train_targets(&self) -> Range<usize> {
        let b = self.bounds.expect("split required");
        self.first_target()..b.n_train
    }

    pub fn val_targets(&self) -> Range<usize> {
        let b = self.bounds.expect("split required");
        b.n_train..b.n_train + b.n_val
    }

    pub fn test_targets(&self) -> Range<usize> {
        let b = self.bounds.expect("split required");
        b.n_train + b.n_val..self.num_samples()
    }

    /// Model-scale target at sample index `k`.
    pub fn y_model(&self, k: usize) -> f64 {
        self.y_model[k]
    }

    /// Original-units target at sample index `k`.
    pub fn y_raw(&self, k: usize) -> f64 {
        self.y_raw[k]
    }

    /// Writes the newest-first window for target `k` into `buf`.
    pub fn fill_window(&self, k: usize, buf: &mut [f64]) {
        debug_assert!(k >= self.first_target() && k < self.num_samples());
        debug_assert_eq!(buf.len(), self.s);
        for (j, slot) in buf.iter_mut().enumerate() {
            *slot = self.u[k - j];
        }
    }

    /// Gathers a batch of newest-first windows into the rows of `x`.
    pub fn fill_batch(&self, targets: &[usize], x: &mut Mat) {
        debug_assert_eq!(x.rows(), targets.len());
        debug_assert_eq!(x.cols(), self.s);
        for (row, &k) in targets.iter().enumerate() {
            self.fill_window(k, x.row_mut(row));
        }
    }
}

/// Sidecar metadata written next to the binary cache.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CacheSidecar {
    pub s: usize,
    pub samples: usize,
    pub split: Option<SplitBounds>,
    pub first_target: usize,
    pub norm_stats: Option<NormStats>,
}

const CACHE_MAGIC: &[u8; 4] = b"PBWC";
const CACHE_VERSION: u32 = 1;

fn write_f64s(w: &mut impl Write, xs: &[f64]) -> std::io::Result<()> {
    for x in xs {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn read_f64s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut buf = [0u8; 8];
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        r.read_exact(&mut buf)?;
        out.push(f64::from_le_bytes(buf));
    }
    Ok(out)
}

/// Binary window cache (documented layout: magic `PBWC`, u32 version, u8
/// flags, u64 `s`, u64 sample count, optional split counts, optional norm
/// stats, then the three sample vectors little-endian) plus a JSON sidecar
/// with the split indices and normalization statistics.
pub fn save_cache(ds: &WindowedDataset, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(CACHE_MAGIC)?;
    w.write_all(&CACHE_VERSION.to_le_bytes())?;
    let flags: u8 = u8::from(ds.bounds.is_some()) | (u8::from(ds.stats.is_some()) << 1);
    w.write_all(&[flags])?;
    w.write_all(&(ds.s as u64).to_le_bytes())?;
    w.write_all(&(ds.u.len() as u64).to_le_bytes())?;
    if let Some(b) = &ds.bounds {
        for c in [b.n_train, b.n_val, b.n_test] {
            w.write_all(&(c as u64).to_le_bytes())?;
        }
    }
    if let Some(st) = &ds.stats {
        write_f64s(&mut w, &[st.u_mean, st.u_std, st.y_mean, st.y_std])?;
    }
    write_f64s(&mut w, &ds.u)?;
    write_f64s(&mut w, &ds.y_model)?;
    write_f64s(&mut w, &ds.y_raw)?;
    w.flush()?;

    let sidecar = CacheSidecar {
        s: ds.s,
        samples: ds.u.len(),
        split: ds.bounds,
        first_target: ds.first_target(),
        norm_stats: ds.stats,
    };
    let mut json_path = path.as_os_str().to_owned();
    json_path.push(".json");
    std::fs::write(json_path, serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

pub fn load_cache(path: &Path) -> Result<WindowedDataset> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != CACHE_MAGIC {
        return Err(Error::Data("not a window cache (bad magic)".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != CACHE_VERSION {
        return Err(Error::Data(format!("unsupported cache version {version}")));
    }
    let mut b1 = [0u8; 1];
    r.read_exact(&mut b1)?;
    let flags = b1[0];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let s = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    let bounds = if flags & 1 != 0 {
        let mut counts = [0usize; 3];
        for c in &mut counts {
            r.read_exact(&mut b8)?;
            *c = u64::from_le_bytes(b8) as usize;
        }
        Some(SplitBounds {
            n_train: counts[0],
            n_val: counts[1],
            n_test: counts[2],
        })
    } else {
        None
    };
    let stats = if flags & 2 != 0 {
        let v = read_f64s(&mut r, 4)?;
        Some(NormStats {
            u_mean: v[0],
            u_std: v[1],
            y_mean: v[2],
            y_std: v[3],
        })
    } else {
        None
    };
    let u = read_f64s(&mut r, n)?;
    let y_model = read_f64s(&mut r, n)?;
    let y_raw = read_f64s(&mut r, n)?;
    Ok(WindowedDataset {
        s,
        u,
        y_model,
        y_raw,
        bounds,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(u: Vec<f64>, y: Vec<f64>, dt: f64) -> TimeSeries {
        TimeSeries::new(0.0, dt, u, y).unwrap()
    }

    fn ramp_series(n: usize) -> TimeSeries {
        let u: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let y: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).cos() * 2.0).collect();
        series(u, y, 1e-3)
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data.csv");
        let s = ramp_series(50);
        write_csv(&path, &s).unwrap();
        let loaded = load_csv(&path).unwrap();
        assert_eq!(loaded.len(), 50);
        assert!((loaded.dt - s.dt).abs() < 1e-18);
        for k in 0..50 {
            assert_eq!(loaded.u[k].to_bits(), s.u[k].to_bits());
            assert_eq!(loaded.y[k].to_bits(), s.y[k].to_bits());
        }
        // byte-determinism of the writer
        let path2 = dir.path().join("data2.csv");
        write_csv(&path2, &s).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&path2).unwrap()
        );
    }

    #[test]
    fn three_row_file_loads_and_infers_paper_rate() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.csv");
        std::fs::write(
            &path,
            "t,u,y\n0,1.0,0.5\n3.3333333333333333e-5,0,0.25\n6.6666666666666666e-5,0,0.1\n",
        )
        .unwrap();
        let ts = load_csv(&path).unwrap();
        assert_eq!(ts.len(), 3);
        assert!((ts.dt - 1.0 / 30000.0).abs() < 1e-12 / 30000.0);
    }

    #[test]
    fn shuffled_time_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "t,u,y\n0,1,1\n2e-3,1,1\n1e-3,1,1\n").unwrap();
        assert!(load_csv(&path).is_err());
    }

    #[test]
    fn jittered_step_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("jitter.csv");
        std::fs::write(&path, "t,u,y\n0,1,1\n1e-3,1,1\n2.1e-3,1,1\n").unwrap();
        assert!(load_csv(&path).is_err());
    }

    #[test]
    fn trim_drops_samples_before_first_impulse() {
        let ts = series(vec![0.0, 0.0, 1.0, 0.0], vec![9.0, 8.0, 7.0, 6.0], 0.5);
        let trimmed = trim_prefix(&ts, 0.0).unwrap();
        assert_eq!(trimmed.u, vec![1.0, 0.0]);
        assert_eq!(trimmed.y, vec![7.0, 6.0]);
        assert_eq!(trimmed.t0, 1.0);

        let already = series(vec![2.0, 0.0], vec![1.0, 1.0], 0.5);
        let same = trim_prefix(&already, 0.0).unwrap();
        assert_eq!(same.u, already.u);

        let silent = series(vec![0.0; 4], vec![1.0; 4], 0.5);
        assert!(trim_prefix(&silent, 0.0).is_err());
    }

    #[test]
    fn trim_reproduces_published_sample_counts() {
        // 489,562 samples with the first impulse at index 19,208 leaves
        // 470,354 samples after the prefix is excluded
        let n = 489_562;
        let first = 19_208;
        let mut u = vec![0.0; n];
        u[first] = 1.0;
        let ts = series(u, vec![0.0; n], 1.0 / 30000.0);
        let trimmed = trim_prefix(&ts, 0.0).unwrap();
        assert_eq!(trimmed.len(), 470_354);
    }

    #[test]
    fn window_counts_follow_n_minus_s_plus_one() {
        let ts = ramp_series(120);
        assert_eq!(make_windows(&ts, 1).unwrap().num_pairs(), 120);
        assert_eq!(make_windows(&ts, 120).unwrap().num_pairs(), 1);
        assert_eq!(make_windows(&ts, 7).unwrap().num_pairs(), 114);
        assert!(make_windows(&ts, 121).is_err());

        // paper-scale arithmetic: 470,354 samples, s = 200
        let big = series(vec![0.0; 470_354], vec![0.0; 470_354], 1.0 / 30000.0);
        assert_eq!(make_windows(&big, 200).unwrap().num_pairs(), 470_155);
    }

    #[test]
    fn window_contents_are_newest_first() {
        let ts = ramp_series(40);
        let ds = make_windows(&ts, 5).unwrap();
        let mut buf = [0.0; 5];
        ds.fill_window(11, &mut buf);
        for (j, &v) in buf.iter().enumerate() {
            assert_eq!(v, ts.u[11 - j]);
        }
    }

    #[test]
    fn floor_split_matches_stated_examples() {
        assert_eq!(
            split_counts(9, [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]).unwrap(),
            (3, 3, 3)
        );
        // remainder goes to test
        assert_eq!(split_counts(10, [0.5, 0.25, 0.25]).unwrap(), (5, 2, 3));
        assert!(split_counts(10, [0.5, 0.5, 0.1]).is_err());
        assert!(split_counts(10, [0.5, 0.6, -0.1]).is_err());
    }

    #[test]
    fn nested_split_reproduces_published_counts() {
        let (train, val, test) = nested_split_counts(470_354, DEFAULT_FRACTIONS).unwrap();
        assert_eq!((train, val, test), (316_078, 60_205, 94_071));
        assert_eq!(train + val + test, 470_354);
    }

    #[test]
    fn split_blocks_partition_targets_chronologically() {
        let ts = ramp_series(100);
        let ds = make_windows(&ts, 8)
            .unwrap()
            .chronological_split([0.6, 0.2, 0.2])
            .unwrap();
        let b = *ds.bounds().unwrap();
        assert_eq!((b.n_train, b.n_val, b.n_test), (60, 20, 20));
        let train = ds.train_targets();
        let val = ds.val_targets();
        let test = ds.test_targets();
        assert_eq!(train.end, val.start);
        assert_eq!(val.end, test.start);
        assert_eq!(test.end, 100);
        assert_eq!(train.start, 7);
        let total = train.len() + val.len() + test.len();
        assert_eq!(total, ds.num_pairs());
    }

    #[test]
    fn split_rejects_empty_blocks() {
        let ts = ramp_series(30);
        // train block shorter than one window
        let err = make_windows(&ts, 25)
            .unwrap()
            .chronological_split([0.64, 0.16, 0.2]);
        assert!(err.is_err());
    }

    #[test]
    fn normalize_standardizes_and_round_trips() {
        let ts = ramp_series(200);
        let ds = make_windows(&ts, 4)
            .unwrap()
            .chronological_split([0.64, 0.16, 0.2])
            .unwrap()
            .normalize()
            .unwrap();
        // restandardizing already-standardized data is a no-op
        let n = ds.bounds().unwrap().n_train;
        let mean: f64 = ds.u[..n].iter().sum::<f64>() / n as f64;
        let var: f64 = ds.u[..n].iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-12);
        // affine inverse
        for k in ds.train_targets().chain(ds.test_targets()) {
            let rt = ds.denormalize(ds.y_model(k));
            assert!((rt - ds.y_raw(k)).abs() < 1e-12 * ds.y_raw(k).abs().max(1.0));
        }
    }

    #[test]
    fn normalize_rejects_constant_input() {
        let ts = series(vec![3.0; 50], (0..50).map(|i| i as f64).collect(), 1e-3);
        let err = make_windows(&ts, 4)
            .unwrap()
            .chronological_split([0.6, 0.2, 0.2])
            .unwrap()
            .normalize();
        assert!(err.is_err());
    }

    #[test]
    fn cache_round_trip_preserves_everything() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("windows.pbwc");
        let ts = ramp_series(150);
        let ds = make_windows(&ts, 6)
            .unwrap()
            .chronological_split([0.64, 0.16, 0.2])
            .unwrap()
            .normalize()
            .unwrap();
        save_cache(&ds, &path).unwrap();
        let loaded = load_cache(&path).unwrap();
        assert_eq!(loaded, ds);
        // sidecar exists and parses
        let sidecar: CacheSidecar = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("windows.pbwc.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(sidecar.s, 6);
        assert_eq!(sidecar.split.unwrap(), *ds.bounds().unwrap());
    }
}
