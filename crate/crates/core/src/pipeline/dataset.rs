//! Synthetic dataset construction, `GDS1` persistence, stratified splitting and
//! normalisation.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cnn::{Example, Tensor};
use crate::error::{Error, Result};
use crate::signal_synth::{
    complex_channels, generate_trajectory, simulate_baseband, AmplitudeModel, GestureClass, GestureParams,
    NoiseSpec, RadarGeometry, DEFAULT_SAMPLE_RATE,
};
use crate::tfa::{
    cwt_two_sided, resize_bilinear, spectrogram, stft, StftConfig, TimeFrequencyMap, WindowKind, WindowSpec,
};

pub const MANIFEST_FORMAT: &str = "GDS1";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const BLOB_FILE: &str = "samples.f32";

/// STFT used for dataset features.
pub const STFT_WINDOW: usize = 128;
pub const STFT_NFFT: usize = 256;
pub const STFT_HOP: usize = 6;
/// CWT used for dataset features.
pub const CWT_OMEGA0: f64 = 6.0;
pub const CWT_SCALES_PER_SIDE: usize = 128;
pub const CWT_MIN_FREQ: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TfMethod {
    Stft,
    Cwt,
}

impl TfMethod {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "stft" => Ok(TfMethod::Stft),
            "cwt" => Ok(TfMethod::Cwt),
            other => Err(Error::domain(format!("unknown transform `{other}` (stft|cwt)"))),
        }
    }
}

/// How one simulated "volunteer" performs gestures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JitterGroup {
    pub speed_jitter: f64,
    pub pose_jitter: f64,
    pub corner_rounding: f64,
}

pub fn default_groups() -> Vec<JitterGroup> {
    vec![
        JitterGroup { speed_jitter: 0.10, pose_jitter: 0.3, corner_rounding: 0.05 },
        JitterGroup { speed_jitter: 0.20, pose_jitter: 0.5, corner_rounding: 0.10 },
        JitterGroup { speed_jitter: 0.15, pose_jitter: 0.7, corner_rounding: 0.02 },
        JitterGroup { speed_jitter: 0.25, pose_jitter: 0.4, corner_rounding: 0.15 },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    /// Uses the first `classes` gesture classes.
    pub classes: usize,
    pub per_class: usize,
    pub distances: Vec<f64>,
    pub scales: Vec<f64>,
    /// SNR at `reference_distance`.
    pub snr_db: f64,
    /// Scale the SNR by `(reference_distance / d)^4`.
    pub range_scaled_snr: bool,
    pub reference_distance: f64,
    pub tf: TfMethod,
    /// Output map `[rows, cols]`.
    pub dims: [usize; 2],
    /// Frequencies beyond `+-max_freq_hz` are cropped before resizing.
    pub max_freq_hz: f64,
    /// Sample `j` of each condition uses group `j % groups.len()`.
    pub groups: Vec<JitterGroup>,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            classes: GestureClass::COUNT,
            per_class: 25,
            distances: vec![0.2],
            scales: vec![0.2],
            snr_db: 10.0,
            range_scaled_snr: true,
            reference_distance: 0.1,
            tf: TfMethod::Stft,
            dims: [64, 64],
            max_freq_hz: 150.0,
            groups: default_groups(),
            seed: 0,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.classes > GestureClass::COUNT {
            return Err(Error::domain(format!("classes must be in 1..={}", GestureClass::COUNT)));
        }
        if self.per_class == 0 {
            return Err(Error::domain("per_class must be >= 1"));
        }
        if self.distances.is_empty() || self.scales.is_empty() {
            return Err(Error::domain("distance and scale lists must not be empty"));
        }
        if self.groups.is_empty() {
            return Err(Error::domain("at least one jitter group is required"));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::domain("snr_db must be finite"));
        }
        if !(self.reference_distance > 0.0) {
            return Err(Error::domain("reference distance must be positive"));
        }
        if self.dims.iter().any(|&d| d == 0) {
            return Err(Error::domain("input dims must be positive"));
        }
        if !(self.max_freq_hz > 0.0 && self.max_freq_hz <= DEFAULT_SAMPLE_RATE / 2.0) {
            return Err(Error::domain("max_freq_hz must be in (0, fs/2]"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.classes * self.distances.len() * self.scales.len() * self.per_class
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// SNR applied at distance `d`.
    pub fn snr_at(&self, d: f64) -> f64 {
        if self.range_scaled_snr {
            self.snr_db + 40.0 * (self.reference_distance / d).log10()
        } else {
            self.snr_db
        }
    }

    pub fn input_shape(&self) -> [usize; 3] {
        [2, self.dims[0], self.dims[1]]
    }
}

/// Per-sample description stored in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub index: usize,
    pub label: usize,
    pub group: usize,
    pub params: GestureParams,
    pub snr_db: f64,
    pub noise_seed: u64,
    /// Byte offset into the blob.
    pub offset: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub meta: SampleMeta,
    /// `[2, rows, cols]`, RX1 map then RX2 map.
    pub input: Vec<f32>,
}

/// Global mean and standard deviation of input values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub config: DatasetConfig,
    pub samples: Vec<Sample>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent seed for item `index` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

/// Keeps rows whose frequency lies within `+-max_hz`.
fn crop_frequencies(map: &TimeFrequencyMap, max_hz: f64) -> Result<TimeFrequencyMap> {
    let rows: Vec<usize> = (0..map.n_freq).filter(|&r| map.freq_axis[r].abs() <= max_hz).collect();
    if rows.len() < 2 {
        return Err(Error::domain(format!("fewer than two frequency rows within +-{max_hz} Hz")));
    }
    let mut values = Vec::with_capacity(rows.len() * map.n_time);
    for &r in &rows {
        values.extend_from_slice(map.row(r));
    }
    Ok(TimeFrequencyMap {
        values,
        n_freq: rows.len(),
        n_time: map.n_time,
        freq_axis: rows.iter().map(|&r| map.freq_axis[r]).collect(),
        time_axis: map.time_axis.clone(),
        kind: map.kind,
        scale: map.scale,
    })
}

/// Log-magnitude map of one receiver at native resolution, cropped to `+-max_freq_hz`.
pub fn receiver_map(signal: &[Complex64], fs: f64, tf: TfMethod, max_freq_hz: f64) -> Result<TimeFrequencyMap> {
    let complex = match tf {
        TfMethod::Stft => {
            let cfg = StftConfig::new(WindowSpec::new(WindowKind::Hann, STFT_WINDOW), STFT_HOP).with_n_fft(STFT_NFFT);
            stft(signal, fs, &cfg)?
        }
        TfMethod::Cwt => cwt_two_sided(signal, fs, CWT_OMEGA0, CWT_MIN_FREQ, max_freq_hz, CWT_SCALES_PER_SIDE)?,
    };
    crop_frequencies(&spectrogram(&complex, true), max_freq_hz)
}

/// Both receivers' maps for one gesture, rescaled to the configured dims.
pub fn sample_maps(params: &GestureParams, noise: NoiseSpec, cfg: &DatasetConfig) -> Result<[TimeFrequencyMap; 2]> {
    let geometry = RadarGeometry::default();
    let traj = generate_trajectory(params, &geometry, DEFAULT_SAMPLE_RATE)?;
    let base = simulate_baseband(&traj, &geometry, AmplitudeModel::InverseR2, Some(noise))?;
    let mut ch = complex_channels(&base);
    // common scale for both receivers keeps their ratio
    let n = (ch.rx[0].len() + ch.rx[1].len()) as f64;
    let rms = (ch.rx.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>() / n).sqrt();
    if rms > 0.0 {
        ch.rx.iter_mut().flatten().for_each(|z| *z /= rms);
    }
    let mut out = Vec::with_capacity(2);
    for rx in &ch.rx {
        let map = receiver_map(rx, ch.sample_rate, cfg.tf, cfg.max_freq_hz)?;
        out.push(resize_bilinear(&map, cfg.dims[0], cfg.dims[1])?);
    }
    let second = out.pop().expect("two receivers");
    let first = out.pop().expect("two receivers");
    Ok([first, second])
}

/// Gesture parameters and noise for every sample, in dataset order.
pub fn sample_plan(cfg: &DatasetConfig) -> Result<Vec<(SampleMeta, NoiseSpec)>> {
    cfg.validate()?;
    let per_sample = 2 * cfg.dims[0] * cfg.dims[1];
    let mut plan = Vec::with_capacity(cfg.len());
    for &d in &cfg.distances {
        for &r in &cfg.scales {
            for class in GestureClass::ALL.iter().take(cfg.classes) {
                for j in 0..cfg.per_class {
                    let index = plan.len();
                    let seed = derive_seed(cfg.seed, index as u64);
                    let group_id = j % cfg.groups.len();
                    let group = cfg.groups[group_id];
                    let mut params = GestureParams::new(*class, r, d, seed);
                    params.speed_jitter = group.speed_jitter;
                    params.pose_jitter = group.pose_jitter;
                    params.corner_rounding = group.corner_rounding;
                    params.validate()?;
                    let snr_db = cfg.snr_at(d);
                    let noise_seed = derive_seed(seed, 1);
                    let meta = SampleMeta {
                        index,
                        label: class.label(),
                        group: group_id,
                        params,
                        snr_db,
                        noise_seed,
                        offset: (index * per_sample * 4) as u64,
                    };
                    plan.push((meta, NoiseSpec::new(snr_db, noise_seed)));
                }
            }
        }
    }
    Ok(plan)
}

/// Full factorial build: distances x scales x classes x per_class samples.
pub fn build_dataset(cfg: &DatasetConfig) -> Result<Dataset> {
    let plan = sample_plan(cfg)?;
    let samples = plan
        .into_par_iter()
        .map(|(meta, noise)| {
            let maps = sample_maps(&meta.params, noise, cfg)?;
            let mut input = Vec::with_capacity(2 * cfg.dims[0] * cfg.dims[1]);
            for m in &maps {
                input.extend(m.values.iter().map(|&v| v as f32));
            }
            if input.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("features of sample {}", meta.index)));
            }
            Ok(Sample { meta, input })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { config: cfg.clone(), samples })
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    config: DatasetConfig,
    sample_shape: [usize; 3],
    blob: String,
    dtype: String,
    samples: Vec<SampleMeta>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_shape(&self) -> [usize; 3] {
        self.config.input_shape()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.meta.label).collect()
    }

    /// Writes `manifest.json` and `samples.f32` into `dir`, creating it if needed.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let manifest = Manifest {
            format: MANIFEST_FORMAT.to_string(),
            config: self.config.clone(),
            sample_shape: self.sample_shape(),
            blob: BLOB_FILE.to_string(),
            dtype: "f32le".to_string(),
            samples: self.samples.iter().map(|s| s.meta.clone()).collect(),
        };
        let mut json = serde_json::to_vec_pretty(&manifest)?;
        json.push(b'\n');
        fs::write(dir.join(MANIFEST_FILE), json)?;
        let mut blob = Vec::with_capacity(self.samples.iter().map(|s| s.input.len() * 4).sum());
        for s in &self.samples {
            for v in &s.input {
                blob.extend_from_slice(&v.to_le_bytes());
            }
        }
        let mut f = fs::File::create(dir.join(BLOB_FILE))?;
        f.write_all(&blob)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: Manifest = serde_json::from_slice(&fs::read(dir.join(MANIFEST_FILE))?)?;
        if manifest.format != MANIFEST_FORMAT {
            return Err(Error::Format(format!("expected a {MANIFEST_FORMAT} manifest, got `{}`", manifest.format)));
        }
        if manifest.dtype != "f32le" {
            return Err(Error::Format(format!("unsupported dtype `{}`", manifest.dtype)));
        }
        manifest.config.validate()?;
        if manifest.sample_shape != manifest.config.input_shape() {
            return Err(Error::Format("sample shape disagrees with the generation config".into()));
        }
        let blob = fs::read(dir.join(&manifest.blob))?;
        let per_sample: usize = manifest.sample_shape.iter().product();
        let mut samples = Vec::with_capacity(manifest.samples.len());
        for meta in manifest.samples {
            let start = meta.offset as usize;
            let end = start + per_sample * 4;
            let bytes = blob
                .get(start..end)
                .ok_or_else(|| Error::Format(format!("sample {} lies outside the blob", meta.index)))?;
            if meta.label >= manifest.config.classes {
                return Err(Error::Format(format!("sample {} has label {}", meta.index, meta.label)));
            }
            let input = bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            samples.push(Sample { meta, input });
        }
        Ok(Dataset { config: manifest.config, samples })
    }

    /// Mean and standard deviation over the given samples only.
    pub fn normalization(&self, indices: &[usize]) -> Result<Normalization> {
        if indices.is_empty() {
            return Err(Error::domain("normalisation needs at least one sample"));
        }
        let mut n = 0usize;
        let mut sum = 0.0;
        for &i in indices {
            let s = self.sample(i)?;
            n += s.input.len();
            sum += s.input.iter().map(|&v| f64::from(v)).sum::<f64>();
        }
        let mean = sum / n as f64;
        let mut ss = 0.0;
        for &i in indices {
            ss += self.samples[i].input.iter().map(|&v| (f64::from(v) - mean).powi(2)).sum::<f64>();
        }
        let std = (ss / n as f64).sqrt();
        Ok(Normalization { mean, std: if std > 0.0 { std } else { 1.0 } })
    }

    fn sample(&self, i: usize) -> Result<&Sample> {
        self.samples
            .get(i)
            .ok_or_else(|| Error::domain(format!("sample index {i} out of range ({})", self.samples.len())))
    }

    /// Normalised network inputs for the given samples.
    pub fn examples(&self, indices: &[usize], norm: &Normalization) -> Result<Vec<Example>> {
        let shape = self.sample_shape().to_vec();
        indices
            .iter()
            .map(|&i| {
                let s = self.sample(i)?;
                let data = s.input.iter().map(|&v| (f64::from(v) - norm.mean) / norm.std).collect();
                Ok(Example { input: Tensor::new(shape.clone(), data)?, label: s.meta.label })
            })
            .collect()
    }

    /// One receiver map of a stored sample.
    pub fn map(&self, index: usize, receiver: usize) -> Result<TimeFrequencyMap> {
        let s = self.sample(index)?;
        if receiver > 1 {
            return Err(Error::domain("receiver must be 0 or 1"));
        }
        let [rows, cols] = self.config.dims;
        let plane = &s.input[receiver * rows * cols..(receiver + 1) * rows * cols];
        let f = self.config.max_freq_hz;
        let span = |n: usize, lo: f64, hi: f64| -> Vec<f64> {
            if n == 1 {
                vec![(lo + hi) / 2.0]
            } else {
                (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
            }
        };
        let duration = s.meta.params.duration;
        Ok(TimeFrequencyMap {
            values: plane.iter().map(|&v| f64::from(v)).collect(),
            n_freq: rows,
            n_time: cols,
            freq_axis: span(rows, -f, f),
            time_axis: span(cols, 0.0, duration),
            kind: match self.config.tf {
                TfMethod::Stft => crate::tfa::MapKind::StftMag,
                TfMethod::Cwt => crate::tfa::MapKind::CwtMag,
            },
            scale: crate::tfa::AmplitudeScale::Log10,
        })
    }
}

/// Disjoint train/test sample indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified by class with a seeded shuffle; both lists come back sorted.
pub fn split(labels: &[usize], train_fraction: f64, seed: u64) -> Result<Split> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::domain(format!("train fraction must be in (0, 1), got {train_fraction}")));
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for c in 0..n_classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if idx.is_empty() {
            continue;
        }
        if idx.len() < 2 {
            return Err(Error::domain(format!("class {c} has fewer than 2 samples")));
        }
        idx.shuffle(&mut rng);
        let n_train = ((idx.len() as f64 * train_fraction).round() as usize).clamp(1, idx.len() - 1);
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    if train.is_empty() {
        return Err(Error::domain("cannot split an empty dataset"));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(per_class: usize) -> DatasetConfig {
        DatasetConfig { per_class, dims: [16, 16], ..DatasetConfig::default() }
    }

    #[test]
    fn factorial_counts() {
        let cfg = small(25);
        assert_eq!(cfg.len(), 100);
        let plan = sample_plan(&cfg).unwrap();
        assert_eq!(plan.len(), 100);
        for label in 0..4 {
            assert_eq!(plan.iter().filter(|(m, _)| m.label == label).count(), 25);
        }
        let cfg = DatasetConfig {
            per_class: 50,
            distances: vec![0.1, 0.2, 0.5],
            scales: vec![0.2, 0.5],
            ..DatasetConfig::default()
        };
        // four classes, three distances, two scales, fifty each
        assert_eq!(sample_plan(&cfg).unwrap().len(), 1200);
        let groups: Vec<usize> = sample_plan(&cfg).unwrap().iter().map(|(m, _)| m.group).collect();
        for g in 0..4 {
            assert!(groups.iter().filter(|&&x| x == g).count() >= 1200 / 4 - 24);
        }
    }

    #[test]
    fn plan_rejects_bad_configs() {
        assert!(sample_plan(&DatasetConfig { distances: vec![], ..small(2) }).is_err());
        assert!(sample_plan(&DatasetConfig { scales: vec![], ..small(2) }).is_err());
        assert!(sample_plan(&DatasetConfig { per_class: 0, ..small(2) }).is_err());
        assert!(sample_plan(&DatasetConfig { classes: 5, ..small(2) }).is_err());
        assert!(sample_plan(&DatasetConfig { distances: vec![0.01], ..small(2) }).is_err());
    }

    #[test]
    fn range_scaled_snr() {
        let cfg = DatasetConfig { snr_db: 10.0, ..DatasetConfig::default() };
        assert!((cfg.snr_at(0.1) - 10.0).abs() < 1e-12);
        assert!((cfg.snr_at(0.2) - (10.0 - 40.0 * 2f64.log10())).abs() < 1e-12);
        let flat = DatasetConfig { range_scaled_snr: false, ..cfg };
        assert_eq!(flat.snr_at(0.5), 10.0);
    }

    #[test]
    fn build_save_load_round_trip() {
        let cfg = small(2);
        let ds = build_dataset(&cfg).unwrap();
        assert_eq!(ds.len(), 8);
        assert!(ds.samples.iter().all(|s| s.input.len() == 2 * 16 * 16));
        let dir = tempfile::tempdir().unwrap();
        ds.save(dir.path()).unwrap();
        let back = Dataset::load(dir.path()).unwrap();
        assert_eq!(back, ds);
        let again = build_dataset(&cfg).unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        again.save(dir2.path()).unwrap();
        for f in [MANIFEST_FILE, BLOB_FILE] {
            assert_eq!(fs::read(dir.path().join(f)).unwrap(), fs::read(dir2.path().join(f)).unwrap());
        }
        let other = build_dataset(&DatasetConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(other.samples[0].input, ds.samples[0].input);
    }

    #[test]
    fn load_rejects_truncated_blob() {
        let ds = build_dataset(&small(1)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        ds.save(dir.path()).unwrap();
        let blob = fs::read(dir.path().join(BLOB_FILE)).unwrap();
        fs::write(dir.path().join(BLOB_FILE), &blob[..blob.len() - 4]).unwrap();
        assert!(matches!(Dataset::load(dir.path()), Err(Error::Format(_))));
    }

    #[test]
    fn cwt_features_build() {
        let ds = build_dataset(&DatasetConfig { tf: TfMethod::Cwt, ..small(1) }).unwrap();
        assert_eq!(ds.len(), 4);
        let m = ds.map(0, 1).unwrap();
        assert_eq!((m.n_freq, m.n_time), (16, 16));
    }

    #[test]
    fn stratified_split() {
        let labels: Vec<usize> = (0..100).map(|i| i % 4).collect();
        let s = split(&labels, 0.8, 3).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (80, 20));
        for c in 0..4 {
            assert_eq!(s.train.iter().filter(|&&i| labels[i] == c).count(), 20);
            assert_eq!(s.test.iter().filter(|&&i| labels[i] == c).count(), 5);
        }
        let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert!(s.train.iter().all(|i| !s.test.contains(i)));
        assert_eq!(s, split(&labels, 0.8, 3).unwrap());
        assert_ne!(s, split(&labels, 0.8, 4).unwrap());
    }

    #[test]
    fn split_errors() {
        assert!(split(&[0, 0, 1], 0.8, 0).is_err());
        assert!(split(&[0, 0, 1, 1], 1.0, 0).is_err());
        assert!(split(&[0, 0, 1, 1], 0.0, 0).is_err());
    }

    #[test]
    fn normalisation_uses_only_given_samples() {
        let mut ds = build_dataset(&small(3)).unwrap();
        let s = split(&ds.labels(), 0.67, 0).unwrap();
        let norm = ds.normalization(&s.train).unwrap();
        let examples = ds.examples(&s.train, &norm).unwrap();
        let values: Vec<f64> = examples.iter().flat_map(|e| e.input.data().iter().copied()).collect();
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() < 1e-6);
        assert!((std - 1.0).abs() < 1e-3);

        // mutating test samples leaves the stats alone, mutating training samples does not
        for &i in &s.test {
            ds.samples[i].input.iter_mut().for_each(|v| *v += 100.0);
        }
        assert_eq!(ds.normalization(&s.train).unwrap(), norm);
        ds.samples[s.train[0]].input[0] += 100.0;
        assert_ne!(ds.normalization(&s.train).unwrap(), norm);
        assert_ne!(ds.normalization(&s.test).unwrap(), norm);
    }
}
