//! Validation sweep: train toy students across a grid of configurations,
//! aggregate seeds, and score predicted floors against measured ones.
//!
//! The default grid is 48 configurations (n in {10,20,40}, d_T in
//! {3,5,8,10}, alpha in {0.80,0.90,0.95,0.99}) with students at every
//! d_S = 1..=d_T, 312 rows total. The measured floor for a given
//! (n, alpha, d_S, seed) does not depend on d_T (the teacher only sets the
//! width range), so each unique student is trained once and shared across
//! the teacher widths that include it.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::critical_width;
use crate::error::{FloorcastError, Result};
use crate::importance::{predicted_floor, ActivationModel, ImportanceSpec};
use crate::metrics::{accuracy_percent, mape_percent, median, pearson_r, r_squared};
use crate::toymodel::{train, ToyRunConfig};

/// Environment variable bounding the sweep worker pool.
pub const THREADS_ENV: &str = "FLOORCAST_THREADS";

/// Grid of sweep configurations plus per-run training overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub feature_counts: Vec<u64>,
    pub teacher_widths: Vec<u64>,
    pub sparsities: Vec<f64>,
    pub seeds: u64,
    pub steps: u64,
    pub batch_size: u64,
    pub learning_rate: f64,
    pub eval_fraction: f64,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            feature_counts: vec![10, 20, 40],
            teacher_widths: vec![3, 5, 8, 10],
            sparsities: vec![0.80, 0.90, 0.95, 0.99],
            seeds: 20,
            steps: 2000,
            batch_size: 1024,
            learning_rate: 1e-3,
            eval_fraction: 0.1,
        }
    }
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.feature_counts.is_empty()
            || self.teacher_widths.is_empty()
            || self.sparsities.is_empty()
        {
            return Err(FloorcastError::InvalidArgument(
                "grid lists must be non-empty".into(),
            ));
        }
        if self.seeds == 0 {
            return Err(FloorcastError::InvalidArgument(
                "seeds must be >= 1".into(),
            ));
        }
        for &alpha in &self.sparsities {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(FloorcastError::AlphaDomain(alpha));
            }
        }
        for &n in &self.feature_counts {
            for &d_t in &self.teacher_widths {
                if d_t == 0 || d_t > n {
                    return Err(FloorcastError::InvalidArgument(format!(
                        "teacher width {d_t} out of range for n = {n}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Total row count: one row per (n, alpha, d_T, d_S <= d_T), so each
    /// teacher width contributes d_T rows.
    pub fn row_count(&self) -> usize {
        let widths: u64 = self.teacher_widths.iter().sum();
        self.feature_counts.len() * self.sparsities.len() * widths as usize
    }

    /// Parse a `key = value` grid file; unknown keys are rejected, missing
    /// keys keep their defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut grid = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| FloorcastError::Parse {
                path: path.display().to_string(),
                line: idx + 1,
                message: "expected `key = value`".into(),
            })?;
            let parse_err = |message: String| FloorcastError::Parse {
                path: path.display().to_string(),
                line: idx + 1,
                message,
            };
            let value = value.trim();
            match key.trim() {
                "feature_counts" => grid.feature_counts = parse_list(value).map_err(parse_err)?,
                "teacher_widths" => grid.teacher_widths = parse_list(value).map_err(parse_err)?,
                "sparsities" => grid.sparsities = parse_list(value).map_err(parse_err)?,
                "seeds" => grid.seeds = value.parse().map_err(|e| parse_err(format!("{e}")))?,
                "steps" => grid.steps = value.parse().map_err(|e| parse_err(format!("{e}")))?,
                "batch_size" => {
                    grid.batch_size = value.parse().map_err(|e| parse_err(format!("{e}")))?
                }
                "learning_rate" => {
                    grid.learning_rate = value.parse().map_err(|e| parse_err(format!("{e}")))?
                }
                "eval_fraction" => {
                    grid.eval_fraction = value.parse().map_err(|e| parse_err(format!("{e}")))?
                }
                other => return Err(parse_err(format!("unknown key `{other}`"))),
            }
        }
        grid.validate()?;
        Ok(grid)
    }
}

fn parse_list<T: std::str::FromStr>(value: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(|v| v.trim().parse::<T>().map_err(|e| format!("{e}")))
        .collect()
}

/// One aggregated sweep result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: u64,
    pub d_t: u64,
    pub d_s: u64,
    pub alpha: f64,
    #[serde(rename = "predicted")]
    pub predicted_floor: f64,
    #[serde(rename = "actual_mean")]
    pub actual_floor_mean: f64,
    #[serde(rename = "actual_std")]
    pub actual_floor_std: f64,
    pub n_seeds: u64,
    pub d_crit: f64,
    #[serde(rename = "ratio")]
    pub width_ratio: f64,
}

/// Agreement between predictions and measurements over filtered rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub pearson_r: f64,
    pub mape_percent: f64,
    pub r_squared: f64,
    /// R^2 computed on log10 floors, for comparison.
    pub r_squared_log: f64,
    /// max(0, 100 - MAPE).
    pub accuracy_percent: f64,
    pub median_accuracy_percent: f64,
    pub mean_accuracy_percent: f64,
    pub n_points: usize,
    pub filter_threshold: f64,
}

/// One cell of the per-configuration accuracy heatmap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapCell {
    pub alpha: f64,
    pub d_t: u64,
    pub n: u64,
    /// Median accuracy over filtered rows; None when no rows survive.
    pub median_accuracy: Option<f64>,
    pub n_points: usize,
}

fn alpha_key(alpha: f64) -> u64 {
    (alpha * 1e6).round() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct GroupKey {
    n: u64,
    alpha_key: u64,
    d_s: u64,
}

#[derive(Debug, Clone)]
struct GroupStats {
    mean: f64,
    std: f64,
    n_seeds: u64,
}

/// Run every configuration in the grid, aggregating seeds per row.
///
/// Diverged seeds are dropped from aggregation; a row keeps going with the
/// seeds that survive. When `checkpoint` is given, completed rows are
/// written there (write-temp-then-rename) as groups finish, and rows
/// already present in the file are reused instead of recomputed.
pub fn run_sweep(grid: &SweepGrid, checkpoint: Option<&Path>) -> Result<Vec<SweepRow>> {
    grid.validate()?;
    match thread_limit()? {
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| FloorcastError::Numeric(format!("thread pool: {e}")))?;
            pool.install(|| run_sweep_inner(grid, checkpoint))
        }
        None => run_sweep_inner(grid, checkpoint),
    }
}

fn thread_limit() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let threads: usize = v.parse().map_err(|_| {
                FloorcastError::InvalidArgument(format!("{THREADS_ENV} must be a positive integer"))
            })?;
            if threads == 0 {
                return Err(FloorcastError::InvalidArgument(format!(
                    "{THREADS_ENV} must be >= 1"
                )));
            }
            Ok(Some(threads))
        }
        Err(_) => Ok(None),
    }
}

fn run_sweep_inner(grid: &SweepGrid, checkpoint: Option<&Path>) -> Result<Vec<SweepRow>> {
    // Reuse rows from a partial checkpoint, keyed per unique student.
    let mut done: HashMap<GroupKey, GroupStats> = HashMap::new();
    if let Some(path) = checkpoint {
        if path.exists() {
            for row in read_rows(path)? {
                done.insert(
                    GroupKey {
                        n: row.n,
                        alpha_key: alpha_key(row.alpha),
                        d_s: row.d_s,
                    },
                    GroupStats {
                        mean: row.actual_floor_mean,
                        std: row.actual_floor_std,
                        n_seeds: row.n_seeds,
                    },
                );
            }
        }
    }

    let max_width = *grid.teacher_widths.iter().max().expect("non-empty");
    let mut pending: Vec<(GroupKey, f64)> = Vec::new();
    for &n in &grid.feature_counts {
        for &alpha in &grid.sparsities {
            for d_s in 1..=max_width {
                let key = GroupKey {
                    n,
                    alpha_key: alpha_key(alpha),
                    d_s,
                };
                if !done.contains_key(&key) {
                    pending.push((key, alpha));
                }
            }
        }
    }

    let state = Mutex::new((done, 0usize));
    let results: Vec<(GroupKey, GroupStats)> = pending
        .par_iter()
        .map(|&(key, alpha)| {
            let stats = train_group(grid, key.n, alpha, key.d_s)?;
            if let Some(path) = checkpoint {
                let mut guard = state.lock().expect("sweep state poisoned");
                guard.0.insert(key, stats.clone());
                guard.1 += 1;
                let rows = assemble_rows(grid, &guard.0, true)?;
                write_rows(path, &rows)?;
            }
            Ok((key, stats))
        })
        .collect::<Result<_>>()?;

    let mut done = state.into_inner().expect("sweep state poisoned").0;
    for (key, stats) in results {
        done.insert(key, stats);
    }
    let rows = assemble_rows(grid, &done, false)?;
    if let Some(path) = checkpoint {
        write_rows(path, &rows)?;
    }
    Ok(rows)
}

fn train_group(grid: &SweepGrid, n: u64, alpha: f64, d_s: u64) -> Result<GroupStats> {
    let importance = ImportanceSpec::zipf(n)?;
    let mut floors = Vec::with_capacity(grid.seeds as usize);
    for seed in 0..grid.seeds {
        let mut config = ToyRunConfig::new(n, d_s, alpha, importance.clone(), seed);
        config.config_id = format!("n{n}_a{:.4}_ds{d_s}_seed{seed}", alpha);
        config.steps = grid.steps;
        config.batch_size = grid.batch_size;
        config.learning_rate = grid.learning_rate;
        config.eval_fraction = grid.eval_fraction;
        match train(&config) {
            Ok(m) => floors.push(m.actual_floor),
            Err(FloorcastError::Diverged { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    if floors.is_empty() {
        return Err(FloorcastError::Numeric(format!(
            "all seeds diverged for n={n} alpha={alpha} d_s={d_s}"
        )));
    }
    let count = floors.len() as f64;
    let mean = floors.iter().sum::<f64>() / count;
    let var = if floors.len() > 1 {
        floors.iter().map(|f| (f - mean) * (f - mean)).sum::<f64>() / (count - 1.0)
    } else {
        0.0
    };
    Ok(GroupStats {
        mean,
        std: var.sqrt(),
        n_seeds: floors.len() as u64,
    })
}

fn assemble_rows(
    grid: &SweepGrid,
    done: &HashMap<GroupKey, GroupStats>,
    partial_ok: bool,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(grid.row_count());
    for &n in &grid.feature_counts {
        for &alpha in &grid.sparsities {
            let importance = ImportanceSpec::zipf(n)?;
            let activation = ActivationModel::bernoulli_uniform(alpha, n)?;
            let d_crit = critical_width(n, alpha)?;
            for &d_t in &grid.teacher_widths {
                for d_s in 1..=d_t {
                    let key = GroupKey {
                        n,
                        alpha_key: alpha_key(alpha),
                        d_s,
                    };
                    let stats = match done.get(&key) {
                        Some(s) => s,
                        None if partial_ok => continue,
                        None => {
                            return Err(FloorcastError::Numeric(format!(
                                "missing sweep group n={n} alpha={alpha} d_s={d_s}"
                            )))
                        }
                    };
                    let predicted = predicted_floor(&importance, &activation, d_s)?.floor_raw;
                    rows.push(SweepRow {
                        n,
                        d_t,
                        d_s,
                        alpha,
                        predicted_floor: predicted,
                        actual_floor_mean: stats.mean,
                        actual_floor_std: stats.std,
                        n_seeds: stats.n_seeds,
                        d_crit,
                        width_ratio: d_s as f64 / d_crit,
                    });
                }
            }
        }
    }
    Ok(rows)
}

fn filtered(rows: &[SweepRow], threshold: f64) -> Vec<&SweepRow> {
    let mut kept: Vec<&SweepRow> = rows
        .iter()
        .filter(|r| r.predicted_floor > threshold)
        .collect();
    // Fixed summation order makes scores independent of row order.
    kept.sort_by(|a, b| {
        (a.n, a.d_t, a.d_s, (a.alpha * 1e6).round() as i64).cmp(&(
            b.n,
            b.d_t,
            b.d_s,
            (b.alpha * 1e6).round() as i64,
        ))
    });
    kept
}

fn score_pairs(pred: &[f64], actual: &[f64], threshold: f64) -> Result<ScoreReport> {
    let mape = mape_percent(pred, actual)?;
    let accuracies: Vec<f64> = pred
        .iter()
        .zip(actual)
        .map(|(p, a)| accuracy_percent(*p, *a))
        .collect();
    let log_pred: Vec<f64> = pred.iter().map(|v| v.max(1e-300).log10()).collect();
    let log_actual: Vec<f64> = actual.iter().map(|v| v.max(1e-300).log10()).collect();
    Ok(ScoreReport {
        pearson_r: pearson_r(pred, actual)?,
        mape_percent: mape,
        r_squared: r_squared(pred, actual)?,
        r_squared_log: r_squared(&log_pred, &log_actual)?,
        accuracy_percent: (100.0 - mape).max(0.0),
        median_accuracy_percent: median(&accuracies).expect("non-empty"),
        mean_accuracy_percent: accuracies.iter().sum::<f64>() / accuracies.len() as f64,
        n_points: pred.len(),
        filter_threshold: threshold,
    })
}

/// Score refined predictions against measured floors over rows with
/// predicted floor above `filter_threshold`.
pub fn score(rows: &[SweepRow], filter_threshold: f64) -> Result<ScoreReport> {
    let surviving = filtered(rows, filter_threshold);
    if surviving.len() < 2 {
        return Err(FloorcastError::DegenerateFit(format!(
            "only {} rows survive the filter",
            surviving.len()
        )));
    }
    let pred: Vec<f64> = surviving.iter().map(|r| r.predicted_floor).collect();
    let actual: Vec<f64> = surviving.iter().map(|r| r.actual_floor_mean).collect();
    score_pairs(&pred, &actual, filter_threshold)
}

/// Score with capacity forced to one feature per dimension (F_S = d_S).
/// Uses the same row filter as `score` so both run on identical points.
pub fn naive_score(rows: &[SweepRow], filter_threshold: f64) -> Result<ScoreReport> {
    let surviving = filtered(rows, filter_threshold);
    if surviving.len() < 2 {
        return Err(FloorcastError::DegenerateFit(format!(
            "only {} rows survive the filter",
            surviving.len()
        )));
    }
    let mut pred = Vec::with_capacity(surviving.len());
    let mut actual = Vec::with_capacity(surviving.len());
    for row in &surviving {
        pred.push(naive_predicted_floor(row.n, row.alpha, row.d_s)?);
        actual.push(row.actual_floor_mean);
    }
    score_pairs(&pred, &actual, filter_threshold)
}

fn naive_predicted_floor(n: u64, alpha: f64, d_s: u64) -> Result<f64> {
    let importance = ImportanceSpec::zipf(n)?;
    let moment = (1.0 - alpha) / 3.0;
    let kept = d_s.min(n) as usize;
    Ok(importance.values[kept..].iter().sum::<f64>() * moment)
}

/// Collapse all configurations onto one (d_S / d_S*, normalized floor)
/// curve. Each config is normalized by its own d_S = 1 floor; configs with
/// a zero reference floor are skipped (their count is returned).
pub fn collapse_curve(rows: &[SweepRow]) -> (Vec<(f64, f64)>, usize) {
    let mut by_config: BTreeMap<(u64, u64, u64), Vec<&SweepRow>> = BTreeMap::new();
    for row in rows {
        by_config
            .entry((row.n, alpha_key(row.alpha), row.d_t))
            .or_default()
            .push(row);
    }
    let mut points = Vec::new();
    let mut skipped = 0;
    for group in by_config.values() {
        let reference = match group.iter().find(|r| r.d_s == 1) {
            Some(r) if r.actual_floor_mean > 0.0 => r.actual_floor_mean,
            _ => {
                skipped += 1;
                continue;
            }
        };
        for row in group {
            points.push((row.width_ratio, row.actual_floor_mean / reference));
        }
    }
    points.sort_by(|a, b| a.partial_cmp(b).expect("finite ratios"));
    (points, skipped)
}

/// Median prediction accuracy per (alpha, d_T, n) cell over filtered rows.
pub fn error_heatmap(rows: &[SweepRow], filter_threshold: f64) -> Vec<HeatmapCell> {
    let mut cells: BTreeMap<(u64, u64, u64), (f64, Vec<f64>)> = BTreeMap::new();
    for row in rows {
        let entry = cells
            .entry((alpha_key(row.alpha), row.d_t, row.n))
            .or_insert_with(|| (row.alpha, Vec::new()));
        if row.predicted_floor > filter_threshold {
            entry
                .1
                .push(accuracy_percent(row.predicted_floor, row.actual_floor_mean));
        }
    }
    cells
        .into_iter()
        .map(|((_, d_t, n), (alpha, accs))| HeatmapCell {
            alpha,
            d_t,
            n,
            median_accuracy: median(&accs),
            n_points: accs.len(),
        })
        .collect()
}

/// Six significant digits; enough for scoring, small enough to scan.
fn csv_float(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v:.5e}")
    }
}

/// Write rows as CSV with the fixed column order, atomically.
pub fn write_rows(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut writer = csv::Writer::from_path(&tmp)?;
        writer.write_record([
            "n", "d_t", "d_s", "alpha", "predicted", "actual_mean", "actual_std", "n_seeds",
            "d_crit", "ratio",
        ])?;
        for row in rows {
            writer.write_record([
                row.n.to_string(),
                row.d_t.to_string(),
                row.d_s.to_string(),
                format!("{}", row.alpha),
                csv_float(row.predicted_floor),
                csv_float(row.actual_floor_mean),
                csv_float(row.actual_floor_std),
                row.n_seeds.to_string(),
                csv_float(row.d_crit),
                csv_float(row.width_ratio),
            ])?;
        }
        writer.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Read rows from the sweep CSV schema.
pub fn read_rows(path: &Path) -> Result<Vec<SweepRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for record in reader.deserialize() {
        rows.push(record?);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smoke_grid() -> SweepGrid {
        SweepGrid {
            feature_counts: vec![10],
            teacher_widths: vec![3],
            sparsities: vec![0.8, 0.9],
            seeds: 2,
            steps: 300,
            batch_size: 128,
            learning_rate: 1e-3,
            eval_fraction: 0.1,
        }
    }

    #[test]
    fn default_grid_row_count() {
        // 26 width-rows per (n, alpha) pair, 312 rows total.
        let grid = SweepGrid::default();
        assert_eq!(grid.row_count(), 3 * 4 * (3 + 5 + 8 + 10));
        assert_eq!(grid.row_count(), 312);
    }

    #[test]
    fn smoke_sweep_shape_and_determinism() {
        let grid = smoke_grid();
        let rows = run_sweep(&grid, None).unwrap();
        assert_eq!(rows.len(), grid.row_count());
        assert_eq!(rows.len(), 2 * 3);
        let again = run_sweep(&grid, None).unwrap();
        assert_eq!(rows, again);
        for row in &rows {
            assert!(row.actual_floor_mean >= 0.0);
            assert!(row.width_ratio > 0.0);
            assert_eq!(row.n_seeds, 2);
        }
    }

    #[test]
    fn checkpoint_roundtrip_and_resume() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.csv");
        let grid = smoke_grid();
        let rows = run_sweep(&grid, Some(&path)).unwrap();
        let reloaded = read_rows(&path).unwrap();
        assert_eq!(rows.len(), reloaded.len());
        // Resume from the finished checkpoint: no training happens, rows
        // match up to the CSV's six significant digits.
        let resumed = run_sweep(&grid, Some(&path)).unwrap();
        for (a, b) in rows.iter().zip(&resumed) {
            assert_eq!(a.n, b.n);
            let rel = (a.actual_floor_mean - b.actual_floor_mean).abs() / a.actual_floor_mean;
            assert!(rel < 1e-5, "relative drift {rel}");
        }
    }

    #[test]
    fn score_perfect_predictions() {
        let rows: Vec<SweepRow> = (1..=4)
            .map(|d_s| SweepRow {
                n: 10,
                d_t: 4,
                d_s,
                alpha: 0.9,
                predicted_floor: 0.1 / d_s as f64,
                actual_floor_mean: 0.1 / d_s as f64,
                actual_floor_std: 0.0,
                n_seeds: 2,
                d_crit: 2.3,
                width_ratio: d_s as f64 / 2.3,
            })
            .collect();
        let report = score(&rows, 1e-6).unwrap();
        assert!((report.pearson_r - 1.0).abs() < 1e-12);
        assert!(report.mape_percent < 1e-12);
        assert!((report.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(report.accuracy_percent, 100.0);
        assert_eq!(report.n_points, 4);
    }

    #[test]
    fn score_requires_two_surviving_rows() {
        let rows = vec![SweepRow {
            n: 10,
            d_t: 1,
            d_s: 1,
            alpha: 0.9,
            predicted_floor: 0.5,
            actual_floor_mean: 0.4,
            actual_floor_std: 0.0,
            n_seeds: 2,
            d_crit: 2.3,
            width_ratio: 0.43,
        }];
        assert!(score(&rows, 1e-6).is_err());
    }

    #[test]
    fn accuracy_identity() {
        let rows: Vec<SweepRow> = (1..=5)
            .map(|d_s| SweepRow {
                n: 10,
                d_t: 5,
                d_s,
                alpha: 0.9,
                predicted_floor: 0.1 * d_s as f64,
                actual_floor_mean: 0.07 * d_s as f64 + 0.01,
                actual_floor_std: 0.0,
                n_seeds: 2,
                d_crit: 2.3,
                width_ratio: d_s as f64 / 2.3,
            })
            .collect();
        let report = score(&rows, 0.0).unwrap();
        assert_eq!(
            report.accuracy_percent,
            (100.0 - report.mape_percent).max(0.0)
        );
    }

    #[test]
    fn score_invariant_under_permutation() {
        let mut rows: Vec<SweepRow> = (1..=6)
            .map(|d_s| SweepRow {
                n: 20,
                d_t: 6,
                d_s,
                alpha: 0.95,
                predicted_floor: 0.2 / d_s as f64,
                actual_floor_mean: 0.15 / d_s as f64,
                actual_floor_std: 0.0,
                n_seeds: 3,
                d_crit: 3.0,
                width_ratio: d_s as f64 / 3.0,
            })
            .collect();
        let a = score(&rows, 1e-4).unwrap();
        rows.reverse();
        rows.swap(1, 3);
        let b = score(&rows, 1e-4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn naive_floors_exceed_refined_at_high_sparsity() {
        let imp = ImportanceSpec::zipf(20).unwrap();
        let act = ActivationModel::bernoulli_uniform(0.99, 20).unwrap();
        for d_s in 1..=5u64 {
            let refined = predicted_floor(&imp, &act, d_s).unwrap().floor_raw;
            let naive = naive_predicted_floor(20, 0.99, d_s).unwrap();
            assert!(naive > refined, "d_s = {d_s}: {naive} vs {refined}");
        }
    }

    #[test]
    fn collapse_scale_invariance() {
        let mut rows: Vec<SweepRow> = (1..=4)
            .map(|d_s| SweepRow {
                n: 10,
                d_t: 4,
                d_s,
                alpha: 0.9,
                predicted_floor: 0.1,
                actual_floor_mean: 0.3 / d_s as f64,
                actual_floor_std: 0.0,
                n_seeds: 2,
                d_crit: 2.3,
                width_ratio: d_s as f64 / 2.3,
            })
            .collect();
        let (base, _) = collapse_curve(&rows);
        for row in &mut rows {
            row.actual_floor_mean *= 7.5;
        }
        let (scaled, _) = collapse_curve(&rows);
        for (a, b) in base.iter().zip(&scaled) {
            assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
        }
    }

    #[test]
    fn collapse_skips_zero_reference() {
        let rows = vec![
            SweepRow {
                n: 10,
                d_t: 2,
                d_s: 1,
                alpha: 0.9,
                predicted_floor: 0.0,
                actual_floor_mean: 0.0,
                actual_floor_std: 0.0,
                n_seeds: 2,
                d_crit: 2.3,
                width_ratio: 0.43,
            },
            SweepRow {
                n: 10,
                d_t: 2,
                d_s: 2,
                alpha: 0.9,
                predicted_floor: 0.0,
                actual_floor_mean: 0.1,
                actual_floor_std: 0.0,
                n_seeds: 2,
                d_crit: 2.3,
                width_ratio: 0.86,
            },
        ];
        let (points, skipped) = collapse_curve(&rows);
        assert!(points.is_empty());
        assert_eq!(skipped, 1);
    }

    #[test]
    fn heatmap_perfect_and_absent() {
        let rows = vec![
            SweepRow {
                n: 10,
                d_t: 3,
                d_s: 1,
                alpha: 0.99,
                predicted_floor: 0.2,
                actual_floor_mean: 0.2,
                actual_floor_std: 0.0,
                n_seeds: 2,
                d_crit: 0.46,
                width_ratio: 2.17,
            },
            SweepRow {
                n: 20,
                d_t: 3,
                d_s: 3,
                alpha: 0.99,
                predicted_floor: 0.0,
                actual_floor_mean: 0.01,
                actual_floor_std: 0.0,
                n_seeds: 2,
                d_crit: 0.92,
                width_ratio: 3.26,
            },
        ];
        let cells = error_heatmap(&rows, 1e-4);
        assert_eq!(cells.len(), 2);
        let perfect = cells.iter().find(|c| c.n == 10).unwrap();
        assert_eq!(perfect.median_accuracy, Some(100.0));
        let absent = cells.iter().find(|c| c.n == 20).unwrap();
        assert_eq!(absent.median_accuracy, None);
        assert_eq!(absent.n_points, 0);
    }

    #[test]
    fn grid_file_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.cfg");
        std::fs::write(
            &path,
            "# comment\nfeature_counts = 10, 20\nseeds = 3\nsteps = 100\n",
        )
        .unwrap();
        let grid = SweepGrid::from_file(&path).unwrap();
        assert_eq!(grid.feature_counts, vec![10, 20]);
        assert_eq!(grid.seeds, 3);
        assert_eq!(grid.steps, 100);
        assert_eq!(grid.teacher_widths, SweepGrid::default().teacher_widths);

        std::fs::write(&path, "bogus_key = 1\n").unwrap();
        assert!(SweepGrid::from_file(&path).is_err());
        std::fs::write(&path, "no equals sign\n").unwrap();
        assert!(SweepGrid::from_file(&path).is_err());
    }
}
