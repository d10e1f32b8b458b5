//! Dataset generation, experiments, sweeps and heatmap export.

mod dataset;
mod experiment;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tfa::{spectrogram, stft, write_csv, write_pgm, StftConfig, TimeFrequencyMap, WindowKind, WindowSpec};

pub use dataset::{
    build_dataset, default_groups, derive_seed, receiver_map, sample_maps, sample_plan, split, Dataset,
    DatasetConfig, JitterGroup, Normalization, Sample, SampleMeta, Split, TfMethod, BLOB_FILE, MANIFEST_FILE,
    MANIFEST_FORMAT,
};
pub use experiment::{
    mean_std, run_experiment, sweep, sweep_distance, sweep_scale, write_confusion_csv, write_metrics_csv,
    write_sweep_csv, ExperimentResult, SeedOutcome, SweepAxis, SweepConfig, SweepRow, ACCURACY_THRESHOLD,
    METRICS_HEADER,
};

/// Writes a map as PGM (`.pgm`) or CSV (any other extension).
pub fn export_heatmap(map: &TimeFrequencyMap, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    match path.extension().and_then(|e| e.to_str()) {
        Some("pgm") => write_pgm(map, &mut out)?,
        _ => write_csv(map, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

/// Power-weighted mean of `|f|` over a Hann STFT (window 128, hop 16, 256 bins).
pub fn spectral_centroid(signal: &[Complex64], fs: f64) -> Result<f64> {
    let cfg = StftConfig::new(WindowSpec::new(WindowKind::Hann, 128), 16).with_n_fft(256);
    let mag = spectrogram(&stft(signal, fs, &cfg)?, false);
    let mut num = 0.0;
    let mut den = 0.0;
    for r in 0..mag.n_freq {
        let p: f64 = mag.row(r).iter().map(|m| m * m).sum();
        num += mag.freq_axis[r].abs() * p;
        den += p;
    }
    if den <= 0.0 {
        return Err(Error::domain("spectral centroid of a zero signal"));
    }
    Ok(num / den)
}
