//! Training runs, metrics files and parameter sweeps.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::{build_dataset, split, Dataset, DatasetConfig, Normalization, Split};
use crate::cnn::checkpoint;
use crate::cnn::network::{NetworkSpec, Profile};
use crate::cnn::train::{self, evaluate, EpochMetrics, StopReason, TrainConfig};
use crate::error::{Error, Result};

pub const METRICS_HEADER: &str = "epoch,lr,train_loss,train_acc,test_loss,test_acc";
pub const ACCURACY_THRESHOLD: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub history: Vec<EpochMetrics>,
    /// `[true][predicted]` counts of the selected model on the test split.
    pub confusion: Vec<Vec<usize>>,
    pub test_accuracy: f64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    /// First epoch with test accuracy >= 0.9.
    pub epochs_to_threshold: Option<usize>,
    pub stop_reason: StopReason,
    pub normalization: Normalization,
    pub single_class_test: bool,
}

impl ExperimentResult {
    /// `epochs_to_threshold`, counting a run that never got there as `epochs_run + 1`.
    pub fn epochs_to_threshold_or_censored(&self) -> usize {
        self.epochs_to_threshold.unwrap_or(self.epochs_run + 1)
    }
}

pub fn write_metrics_csv<W: Write>(history: &[EpochMetrics], mut out: W) -> Result<()> {
    writeln!(out, "{METRICS_HEADER}")?;
    for m in history {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            m.epoch, m.lr, m.train_loss, m.train_acc, m.val_loss, m.val_acc
        )?;
    }
    Ok(())
}

pub fn write_confusion_csv<W: Write>(confusion: &[Vec<usize>], mut out: W) -> Result<()> {
    let n = confusion.len();
    let header: Vec<String> = (0..n).map(|c| format!("pred_{c}")).collect();
    writeln!(out, "true,{}", header.join(","))?;
    for (t, row) in confusion.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(usize::to_string).collect();
        writeln!(out, "{t},{}", cells.join(","))?;
    }
    Ok(())
}

/// Trains `profile` on the train split, evaluating every epoch on the test split.
/// With `out_dir`, writes `metrics.csv`, `confusion.csv` and `model.gmc`.
pub fn run_experiment(
    dataset: &Dataset,
    split: &Split,
    profile: Profile,
    cfg: &TrainConfig,
    out_dir: Option<&Path>,
) -> Result<ExperimentResult> {
    if split.test.is_empty() {
        return Err(Error::domain("the test split is empty"));
    }
    let norm = dataset.normalization(&split.train)?;
    let train_set = dataset.examples(&split.train, &norm)?;
    let test_set = dataset.examples(&split.test, &norm)?;
    let spec = NetworkSpec::profile(profile, dataset.sample_shape(), dataset.config.classes)?;
    let report = train::train(&spec, &train_set, &test_set, cfg)?;
    let eval = evaluate(&report.best, &test_set)?;
    let result = ExperimentResult {
        epochs_run: report.history.len(),
        epochs_to_threshold: train::epochs_to_threshold(&report.history, ACCURACY_THRESHOLD),
        history: report.history,
        confusion: eval.confusion,
        test_accuracy: eval.accuracy,
        best_epoch: report.best_epoch,
        stop_reason: report.stop_reason,
        normalization: norm,
        single_class_test: report.single_class_validation,
    };
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        write_metrics_csv(&result.history, fs::File::create(dir.join("metrics.csv"))?)?;
        write_confusion_csv(&result.confusion, fs::File::create(dir.join("confusion.csv"))?)?;
        checkpoint::save(&report.best, &dir.join("model.gmc"))?;
        fs::write(dir.join("normalization.json"), serde_json::to_vec_pretty(&norm)?)?;
    }
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Distance,
    Scale,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "distance" => Ok(SweepAxis::Distance),
            "scale" => Ok(SweepAxis::Scale),
            other => Err(Error::domain(format!("unknown sweep axis `{other}` (distance|scale)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub epochs_to_threshold: usize,
    pub reached_threshold: bool,
    pub final_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub epochs_mean: f64,
    pub epochs_std: f64,
    pub accuracy_mean: f64,
    pub accuracy_std: f64,
    pub runs: Vec<SeedOutcome>,
}

/// Sample mean and standard deviation (zero for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Everything a sweep needs besides the swept values.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub dataset: DatasetConfig,
    pub train: TrainConfig,
    pub profile: Profile,
    pub train_fraction: f64,
}

/// For each value and seed, builds a dataset that differs from `base.dataset`
/// only in the swept parameter and the seed, trains, and aggregates.
/// `final_accuracy` is the test accuracy of the last epoch.
pub fn sweep(base: &SweepConfig, axis: SweepAxis, values: &[f64], seeds: &[u64]) -> Result<Vec<SweepRow>> {
    if values.is_empty() || seeds.is_empty() {
        return Err(Error::domain("a sweep needs at least one value and one seed"));
    }
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let mut runs = Vec::with_capacity(seeds.len());
        for &seed in seeds {
            let mut ds_cfg = base.dataset.clone();
            match axis {
                SweepAxis::Distance => ds_cfg.distances = vec![value],
                SweepAxis::Scale => ds_cfg.scales = vec![value],
            }
            ds_cfg.seed = seed;
            let ds = build_dataset(&ds_cfg)?;
            let sp = split(&ds.labels(), base.train_fraction, seed)?;
            let train_cfg = TrainConfig { seed, ..base.train.clone() };
            let res = run_experiment(&ds, &sp, base.profile, &train_cfg, None)?;
            runs.push(SeedOutcome {
                seed,
                epochs_to_threshold: res.epochs_to_threshold_or_censored(),
                reached_threshold: res.epochs_to_threshold.is_some(),
                final_accuracy: res.history.last().map_or(0.0, |m| m.val_acc),
            });
        }
        let epochs: Vec<f64> = runs.iter().map(|r| r.epochs_to_threshold as f64).collect();
        let accs: Vec<f64> = runs.iter().map(|r| r.final_accuracy).collect();
        let (epochs_mean, epochs_std) = mean_std(&epochs);
        let (accuracy_mean, accuracy_std) = mean_std(&accs);
        rows.push(SweepRow { value, epochs_mean, epochs_std, accuracy_mean, accuracy_std, runs });
    }
    Ok(rows)
}

pub fn sweep_distance(base: &SweepConfig, distances: &[f64], seeds: &[u64]) -> Result<Vec<SweepRow>> {
    sweep(base, SweepAxis::Distance, distances, seeds)
}

pub fn sweep_scale(base: &SweepConfig, scales: &[f64], seeds: &[u64]) -> Result<Vec<SweepRow>> {
    sweep(base, SweepAxis::Scale, scales, seeds)
}

pub fn write_sweep_csv<W: Write>(axis: SweepAxis, rows: &[SweepRow], mut out: W) -> Result<()> {
    let key = match axis {
        SweepAxis::Distance => "distance_m",
        SweepAxis::Scale => "scale_m",
    };
    writeln!(out, "{key},seeds,epochs_mean,epochs_std,accuracy_mean,accuracy_std")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.value,
            r.runs.len(),
            r.epochs_mean,
            r.epochs_std,
            r.accuracy_mean,
            r.accuracy_std
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SweepConfig {
        SweepConfig {
            dataset: DatasetConfig { per_class: 4, dims: [12, 12], snr_db: 30.0, ..DatasetConfig::default() },
            train: TrainConfig { max_epochs: 3, batch_size: 4, ..TrainConfig::default() },
            profile: Profile::Desk,
            train_fraction: 0.75,
        }
    }

    #[test]
    fn experiment_bookkeeping() {
        let base = tiny();
        let ds = build_dataset(&base.dataset).unwrap();
        let sp = split(&ds.labels(), 0.75, 0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let cfg = TrainConfig { stop_at_zero_val_error: false, ..base.train.clone() };
        let res = run_experiment(&ds, &sp, Profile::Desk, &cfg, Some(dir.path())).unwrap();
        assert_eq!(res.epochs_run, 3);
        let csv = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], METRICS_HEADER);
        assert_eq!(lines.len(), 1 + res.epochs_run);
        for (c, row) in res.confusion.iter().enumerate() {
            let per_class = sp.test.iter().filter(|&&i| ds.samples[i].meta.label == c).count();
            assert_eq!(row.iter().sum::<usize>(), per_class);
        }
        let trace: usize = (0..4).map(|c| res.confusion[c][c]).sum();
        assert!((trace as f64 / sp.test.len() as f64 - res.test_accuracy).abs() < 1e-12);
        for m in &res.history {
            assert!((0.0..=1.0).contains(&m.train_acc) && (0.0..=1.0).contains(&m.val_acc));
        }
        let model = checkpoint::load(&dir.path().join("model.gmc")).unwrap();
        assert_eq!(model.spec.input_shape, [2, 12, 12]);
    }

    #[test]
    fn degenerate_sweep_has_one_row() {
        let rows = sweep_distance(&tiny(), &[0.2], &[7]).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].runs.len(), 1);
        assert_eq!(rows[0].epochs_std, 0.0);
        assert!(sweep_scale(&tiny(), &[], &[1]).is_err());
    }

    #[test]
    fn mean_std_values() {
        assert_eq!(mean_std(&[3.0]), (3.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert!((m - 2.5).abs() < 1e-15);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn censored_threshold() {
        let base = tiny();
        let ds = build_dataset(&base.dataset).unwrap();
        let sp = split(&ds.labels(), 0.75, 0).unwrap();
        let mut res = run_experiment(&ds, &sp, Profile::Desk, &base.train, None).unwrap();
        res.epochs_to_threshold = None;
        assert_eq!(res.epochs_to_threshold_or_censored(), res.epochs_run + 1);
    }
}
