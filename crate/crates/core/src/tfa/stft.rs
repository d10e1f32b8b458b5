use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{ComplexMap, MapKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    Rectangular,
    Hann,
    /// Gaussian with standard deviation `sigma` in samples.
    Gaussian { sigma: f64 },
}

/// Analysis window. Values are peak-normalised to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub kind: WindowKind,
    pub length: usize,
}

impl WindowSpec {
    pub fn new(kind: WindowKind, length: usize) -> Self {
        WindowSpec { kind, length }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length < 2 {
            return Err(Error::domain(format!("window length must be >= 2, got {}", self.length)));
        }
        if let WindowKind::Gaussian { sigma } = self.kind {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::domain(format!("gaussian sigma must be > 0, got {sigma}")));
            }
        }
        Ok(())
    }

    /// Periodic Hann (peak exactly 1 at `n = N/2` for even `N`), rectangular,
    /// or a Gaussian centred at `(N - 1) / 2`.
    pub fn values(&self) -> Vec<f64> {
        let n = self.length;
        let raw: Vec<f64> = match self.kind {
            WindowKind::Rectangular => vec![1.0; n],
            WindowKind::Hann => (0..n)
                .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / n as f64).cos()))
                .collect(),
            WindowKind::Gaussian { sigma } => {
                let c = (n as f64 - 1.0) / 2.0;
                (0..n).map(|i| (-0.5 * ((i as f64 - c) / sigma).powi(2)).exp()).collect()
            }
        };
        let peak = raw.iter().cloned().fold(0.0, f64::max);
        raw.into_iter().map(|v| v / peak).collect()
    }
}

/// How frames are laid over the signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Framing {
    /// Frame `k` is centred on sample `k * hop`; samples outside the signal are zero.
    /// Column count is `floor((len - 1) / hop) + 1`.
    Centered,
    /// Frame `k` starts at sample `k * hop` and never leaves the signal.
    /// Column count is `floor((len - window) / hop) + 1`.
    Aligned,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StftConfig {
    pub window: WindowSpec,
    pub hop: usize,
    /// DFT size; frames shorter than this are zero-padded at the end.
    pub n_fft: usize,
    pub framing: Framing,
}

impl StftConfig {
    /// Centred frames with `n_fft` equal to the window length.
    pub fn new(window: WindowSpec, hop: usize) -> Self {
        StftConfig { window, hop, n_fft: window.length, framing: Framing::Centered }
    }

    pub fn with_n_fft(mut self, n_fft: usize) -> Self {
        self.n_fft = n_fft;
        self
    }

    pub fn with_framing(mut self, framing: Framing) -> Self {
        self.framing = framing;
        self
    }
}

/// Frequency of fftshifted row `r` for an `n`-point transform.
pub(crate) fn shifted_freq(r: usize, n: usize, fs: f64) -> f64 {
    (r as f64 - (n / 2) as f64) * fs / n as f64
}

/// Short-time Fourier transform of a complex signal.
///
/// Each frame is windowed and transformed with its own time origin (the first
/// frame sample), so a shift by whole hops shifts columns exactly. Rows are
/// fftshifted to a monotonic axis covering `[-fs/2, fs/2)`.
pub fn stft(signal: &[Complex64], fs: f64, cfg: &StftConfig) -> Result<ComplexMap> {
    cfg.window.validate()?;
    if cfg.hop == 0 {
        return Err(Error::domain("hop must be >= 1"));
    }
    if !(fs > 0.0 && fs.is_finite()) {
        return Err(Error::domain(format!("sample rate must be > 0, got {fs}")));
    }
    let w = cfg.window.length;
    let len = signal.len();
    if w > len {
        return Err(Error::domain(format!("window length {w} exceeds signal length {len}")));
    }
    if cfg.n_fft < w {
        return Err(Error::domain(format!("n_fft {} is shorter than the window {w}", cfg.n_fft)));
    }
    if signal.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("stft input".into()));
    }

    let n_fft = cfg.n_fft;
    let window = cfg.window.values();
    let (n_time, first): (usize, isize) = match cfg.framing {
        Framing::Centered => ((len - 1) / cfg.hop + 1, -((w / 2) as isize)),
        Framing::Aligned => ((len - w) / cfg.hop + 1, 0),
    };

    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_fft);
    let mut columns = Vec::with_capacity(n_time);
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    for k in 0..n_time {
        let start = first + (k * cfg.hop) as isize;
        buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
        for (m, wm) in window.iter().enumerate() {
            let idx = start + m as isize;
            if idx >= 0 && (idx as usize) < len {
                buf[m] = signal[idx as usize] * *wm;
            }
        }
        fft.process(&mut buf);
        columns.push(buf.clone());
    }

    let half = n_fft / 2;
    let mut values = Vec::with_capacity(n_fft * n_time);
    for r in 0..n_fft {
        let bin = (r + n_fft - half) % n_fft;
        values.extend(columns.iter().map(|col| col[bin]));
    }
    let freq_axis = (0..n_fft).map(|r| shifted_freq(r, n_fft, fs)).collect();
    let time_axis = (0..n_time)
        .map(|k| {
            let centre = match cfg.framing {
                Framing::Centered => (k * cfg.hop) as f64,
                Framing::Aligned => (k * cfg.hop) as f64 + (w as f64 - 1.0) / 2.0,
            };
            centre / fs
        })
        .collect();

    Ok(ComplexMap { values, n_freq: n_fft, n_time, freq_axis, time_axis, kind: MapKind::StftMag })
}
