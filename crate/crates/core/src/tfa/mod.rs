//! Time-frequency analysis: STFT spectrograms and Morlet CWT scalograms.

mod cwt;
mod export;
mod map;
mod stft;

use num_complex::Complex64;

pub use cwt::{cwt, cwt_direct, cwt_two_sided, frequency_to_scale, scale_to_frequency, WaveletSpec};
pub use export::{read_csv, write_csv, write_pgm};
pub use map::{resize_bilinear, AmplitudeScale, MapKind, TimeFrequencyMap, LOG_FLOOR};
pub use stft::{stft, Framing, StftConfig, WindowKind, WindowSpec};

/// Complex-valued transform output, row-major `n_freq x n_time`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMap {
    pub values: Vec<Complex64>,
    pub n_freq: usize,
    pub n_time: usize,
    /// Hz per row.
    pub freq_axis: Vec<f64>,
    /// Seconds per column.
    pub time_axis: Vec<f64>,
    pub kind: MapKind,
}

impl ComplexMap {
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.values[row * self.n_time + col]
    }

    pub fn column(&self, col: usize) -> Vec<Complex64> {
        (0..self.n_freq).map(|r| self.get(r, col)).collect()
    }

    /// Row index of the largest magnitude in each column.
    pub fn ridge(&self) -> Vec<usize> {
        (0..self.n_time)
            .map(|c| {
                let mut best = 0;
                for r in 1..self.n_freq {
                    if self.get(r, c).norm() > self.get(best, c).norm() {
                        best = r;
                    }
                }
                best
            })
            .collect()
    }
}

/// Magnitude of a transform, optionally log10-compressed with a floor of [`LOG_FLOOR`].
pub fn spectrogram(map: &ComplexMap, log: bool) -> TimeFrequencyMap {
    let values = map
        .values
        .iter()
        .map(|z| {
            let m = z.norm();
            if log {
                m.max(LOG_FLOOR).log10()
            } else {
                m
            }
        })
        .collect();
    TimeFrequencyMap {
        values,
        n_freq: map.n_freq,
        n_time: map.n_time,
        freq_axis: map.freq_axis.clone(),
        time_axis: map.time_axis.clone(),
        kind: map.kind,
        scale: if log { AmplitudeScale::Log10 } else { AmplitudeScale::Linear },
    }
}

/// Direct `O(N^2)` DFT, `X_k = sum_n s_n exp(-j 2 pi k n / N)`.
pub fn dft_oracle(signal: &[Complex64]) -> Vec<Complex64> {
    let n = signal.len();
    (0..n)
        .map(|k| {
            signal
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    // reduce k*i mod n first so the angle stays small
                    let idx = (k * i) % n;
                    let angle = -2.0 * std::f64::consts::PI * idx as f64 / n as f64;
                    s * Complex64::from_polar(1.0, angle)
                })
                .sum()
        })
        .collect()
}

/// `||a - b|| / ||b||`, falling back to the absolute error when `b` is zero.
pub fn relative_error(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
    if den > 0.0 {
        num / den
    } else {
        num
    }
}
