use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{ComplexMap, MapKind};
use crate::error::{Error, Result};

/// Gaussian envelope is cut where `|t / scale|` reaches this value.
const TRUNCATION: f64 = 5.0;
/// Longest allowed wavelet, in multiples of the signal length.
const MAX_WAVELET_RATIO: usize = 10;

/// Analytic Morlet wavelet and the scale grid it is evaluated on.
///
/// Scales are measured in samples; scale `a` responds most strongly near
/// `omega0 / (2 pi a) * fs` Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletSpec {
    pub omega0: f64,
    pub scales: Vec<f64>,
}

impl WaveletSpec {
    pub fn new(omega0: f64, scales: Vec<f64>) -> Self {
        WaveletSpec { omega0, scales }
    }

    /// `n` geometric scales whose centre frequencies span `[f_lo, f_hi]`,
    /// ordered by increasing scale (decreasing frequency).
    pub fn geometric(omega0: f64, fs: f64, f_lo: f64, f_hi: f64, n: usize) -> Result<Self> {
        if !(f_lo > 0.0 && f_hi > f_lo) || n < 2 {
            return Err(Error::domain("need 0 < f_lo < f_hi and at least 2 scales"));
        }
        let a_min = frequency_to_scale(f_hi, omega0, fs)?;
        let a_max = frequency_to_scale(f_lo, omega0, fs)?;
        let ratio = (a_max / a_min).powf(1.0 / (n - 1) as f64);
        let scales = (0..n).map(|i| a_min * ratio.powi(i as i32)).collect();
        Ok(WaveletSpec { omega0, scales })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega0 >= 5.0 && self.omega0.is_finite()) {
            return Err(Error::domain(format!("omega0 must be >= 5, got {}", self.omega0)));
        }
        if self.scales.is_empty() {
            return Err(Error::domain("scale grid is empty"));
        }
        if self.scales.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::domain("scales must be positive and finite"));
        }
        if self.scales.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("scales must be strictly increasing"));
        }
        Ok(())
    }
}

/// Centre frequency in Hz of a Morlet scale given in samples.
pub fn scale_to_frequency(scale: f64, omega0: f64, fs: f64) -> Result<f64> {
    if !(scale > 0.0) {
        return Err(Error::domain(format!("scale must be > 0, got {scale}")));
    }
    Ok(omega0 / (2.0 * PI * scale) * fs)
}

/// Inverse of [`scale_to_frequency`].
pub fn frequency_to_scale(freq: f64, omega0: f64, fs: f64) -> Result<f64> {
    if !(freq > 0.0) {
        return Err(Error::domain(format!("frequency must be > 0, got {freq}")));
    }
    Ok(omega0 * fs / (2.0 * PI * freq))
}

/// Half-width `M` of the truncated daughter wavelet: taps `-M..=M` with `|m / a| < 5`.
fn half_width(scale: f64) -> usize {
    ((TRUNCATION * scale).ceil() as usize).saturating_sub(1)
}

/// `a^{-1/2} pi^{-1/4} exp(j omega0 m / a) exp(-(m / a)^2 / 2)`.
fn daughter(m: isize, scale: f64, omega0: f64) -> Complex64 {
    let t = m as f64 / scale;
    let env = scale.powf(-0.5) * PI.powf(-0.25) * (-0.5 * t * t).exp();
    Complex64::from_polar(env, omega0 * t)
}

fn check(signal: &[Complex64], fs: f64, wavelet: &WaveletSpec) -> Result<()> {
    wavelet.validate()?;
    if signal.is_empty() {
        return Err(Error::domain("cwt input is empty"));
    }
    if !(fs > 0.0 && fs.is_finite()) {
        return Err(Error::domain(format!("sample rate must be > 0, got {fs}")));
    }
    if signal.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("cwt input".into()));
    }
    let widest = 2 * half_width(*wavelet.scales.last().unwrap()) + 1;
    if widest > MAX_WAVELET_RATIO * signal.len() {
        return Err(Error::domain(format!(
            "largest scale needs {widest} taps, more than {MAX_WAVELET_RATIO}x the signal length"
        )));
    }
    Ok(())
}

fn assemble(rows: Vec<Vec<Complex64>>, fs: f64, wavelet: &WaveletSpec, len: usize) -> ComplexMap {
    let freq_axis = wavelet
        .scales
        .iter()
        .map(|a| wavelet.omega0 / (2.0 * PI * a) * fs)
        .collect();
    ComplexMap {
        values: rows.into_iter().flatten().collect(),
        n_freq: wavelet.scales.len(),
        n_time: len,
        freq_axis,
        time_axis: (0..len).map(|i| i as f64 / fs).collect(),
        kind: MapKind::CwtMag,
    }
}

/// CWT by direct correlation: `W(a, t) = sum_m s[t + m] conj(psi_a(m))`.
pub fn cwt_direct(signal: &[Complex64], fs: f64, wavelet: &WaveletSpec) -> Result<ComplexMap> {
    check(signal, fs, wavelet)?;
    let len = signal.len() as isize;
    let rows = wavelet
        .scales
        .iter()
        .map(|&a| {
            let m_max = half_width(a) as isize;
            let taps: Vec<Complex64> = (-m_max..=m_max).map(|m| daughter(m, a, wavelet.omega0).conj()).collect();
            (0..len)
                .map(|t| {
                    let lo = (-m_max).max(-t);
                    let hi = m_max.min(len - 1 - t);
                    (lo..=hi).map(|m| signal[(t + m) as usize] * taps[(m + m_max) as usize]).sum()
                })
                .collect()
        })
        .collect();
    Ok(assemble(rows, fs, wavelet, signal.len()))
}

/// CWT through zero-padded FFT products; agrees with [`cwt_direct`] to rounding.
pub fn cwt(signal: &[Complex64], fs: f64, wavelet: &WaveletSpec) -> Result<ComplexMap> {
    check(signal, fs, wavelet)?;
    let len = signal.len();
    let widest = half_width(*wavelet.scales.last().unwrap());
    let size = (len + widest + 1).next_power_of_two();

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(size);
    let inverse = planner.plan_fft_inverse(size);

    let mut spectrum = vec![Complex64::new(0.0, 0.0); size];
    spectrum[..len].copy_from_slice(signal);
    forward.process(&mut spectrum);

    let scale_out = 1.0 / size as f64;
    let rows = wavelet
        .scales
        .iter()
        .map(|&a| {
            // correlation with psi == convolution with h[k] = conj(psi(-k))
            let m_max = half_width(a) as isize;
            let mut kernel = vec![Complex64::new(0.0, 0.0); size];
            for k in -m_max..=m_max {
                let idx = k.rem_euclid(size as isize) as usize;
                kernel[idx] = daughter(-k, a, wavelet.omega0).conj();
            }
            forward.process(&mut kernel);
            kernel.iter_mut().zip(&spectrum).for_each(|(h, s)| *h *= s);
            inverse.process(&mut kernel);
            kernel[..len].iter().map(|z| z * scale_out).collect()
        })
        .collect();
    Ok(assemble(rows, fs, wavelet, len))
}

/// Signed-frequency scalogram: negative frequencies come from the CWT of the
/// conjugated signal. Rows are ordered by ascending frequency, `n_per_side`
/// scales on each side covering `[f_lo, f_hi]` in magnitude.
pub fn cwt_two_sided(
    signal: &[Complex64],
    fs: f64,
    omega0: f64,
    f_lo: f64,
    f_hi: f64,
    n_per_side: usize,
) -> Result<ComplexMap> {
    let spec = WaveletSpec::geometric(omega0, fs, f_lo, f_hi, n_per_side)?;
    let positive = cwt(signal, fs, &spec)?;
    let conj: Vec<Complex64> = signal.iter().map(|z| z.conj()).collect();
    let negative = cwt(&conj, fs, &spec)?;
    let len = signal.len();

    let mut values = Vec::with_capacity(2 * n_per_side * len);
    let mut freq_axis = Vec::with_capacity(2 * n_per_side);
    // negative side: smallest scale first gives -f_hi ... -f_lo
    for r in 0..n_per_side {
        values.extend_from_slice(&negative.values[r * len..(r + 1) * len]);
        freq_axis.push(-negative.freq_axis[r]);
    }
    for r in (0..n_per_side).rev() {
        values.extend_from_slice(&positive.values[r * len..(r + 1) * len]);
        freq_axis.push(positive.freq_axis[r]);
    }
    Ok(ComplexMap {
        values,
        n_freq: 2 * n_per_side,
        n_time: len,
        freq_axis,
        time_axis: positive.time_axis,
        kind: MapKind::CwtMag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tfa::relative_error;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tone(freq: f64, fs: f64, n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|i| Complex64::from_polar(1.0, 2.0 * PI * freq * i as f64 / fs))
            .collect()
    }

    #[test]
    fn scale_frequency_inverse() {
        let a = 6.0 * 600.0 / (2.0 * PI * 25.0);
        assert!((scale_to_frequency(a, 6.0, 600.0).unwrap() - 25.0).abs() < 1e-12);
        let f1 = scale_to_frequency(10.0, 6.0, 600.0).unwrap();
        let f2 = scale_to_frequency(20.0, 6.0, 600.0).unwrap();
        assert!((f1 / f2 - 2.0).abs() < 1e-12);
        assert!(scale_to_frequency(0.0, 6.0, 600.0).is_err());
        assert!(scale_to_frequency(-1.0, 6.0, 600.0).is_err());
    }

    #[test]
    fn geometric_grid_maps_to_geometric_frequencies() {
        let spec = WaveletSpec::geometric(6.0, 600.0, 5.0, 80.0, 9).unwrap();
        let f: Vec<f64> = spec.scales.iter().map(|a| scale_to_frequency(*a, 6.0, 600.0).unwrap()).collect();
        assert!((f[0] - 80.0).abs() < 1e-9 && (f[8] - 5.0).abs() < 1e-9);
        let ratio = f[1] / f[0];
        for w in f.windows(2) {
            assert!((w[1] / w[0] - ratio).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_signal_and_linearity() {
        let spec = WaveletSpec::geometric(6.0, 600.0, 5.0, 80.0, 8).unwrap();
        let z = vec![Complex64::new(0.0, 0.0); 300];
        assert!(cwt(&z, 600.0, &spec).unwrap().values.iter().all(|v| v.norm() == 0.0));

        let x = tone(25.0, 600.0, 300);
        let x2: Vec<Complex64> = x.iter().map(|v| v * 2.0).collect();
        let a = cwt_direct(&x, 600.0, &spec).unwrap();
        let b = cwt_direct(&x2, 600.0, &spec).unwrap();
        for (u, v) in a.values.iter().zip(&b.values) {
            assert_eq!(u * 2.0, *v);
        }
    }

    #[test]
    fn direct_and_fft_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (len, f_lo) in [(17usize, 60.0), (256, 4.0), (1024, 2.0)] {
            let x: Vec<Complex64> = (0..len)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let spec = WaveletSpec::geometric(6.0, 600.0, f_lo, 250.0, 12).unwrap();
            let a = cwt_direct(&x, 600.0, &spec).unwrap();
            let b = cwt(&x, 600.0, &spec).unwrap();
            assert!(relative_error(&b.values, &a.values) < 1e-9);
        }
    }

    #[test]
    fn tone_ridge_tracks_frequency() {
        let fs = 600.0;
        let spec = WaveletSpec::geometric(6.0, fs, 5.0, 80.0, 32).unwrap();
        let m = cwt(&tone(25.0, fs, 600), fs, &spec).unwrap();
        let nearest = (0..spec.scales.len())
            .min_by(|&i, &j| {
                (m.freq_axis[i] - 25.0).abs().partial_cmp(&(m.freq_axis[j] - 25.0).abs()).unwrap()
            })
            .unwrap();
        // centre columns are clear of edge effects
        for &r in &m.ridge()[150..450] {
            assert_eq!(r, nearest);
        }
    }

    #[test]
    fn oversized_scale_is_rejected() {
        let x = tone(25.0, 600.0, 10);
        let spec = WaveletSpec::new(6.0, vec![1.0, 50.0]);
        assert!(matches!(cwt(&x, 600.0, &spec), Err(Error::Domain(_))));
        let bad = WaveletSpec::new(4.0, vec![1.0, 2.0]);
        assert!(bad.validate().is_err());
        let unsorted = WaveletSpec::new(6.0, vec![2.0, 1.0]);
        assert!(unsorted.validate().is_err());
    }

    #[test]
    fn two_sided_separates_sign() {
        let fs = 600.0;
        let m = cwt_two_sided(&tone(-30.0, fs, 600), fs, 6.0, 2.0, 100.0, 32).unwrap();
        assert!(m.freq_axis.windows(2).all(|w| w[1] > w[0]));
        let r = m.ridge()[300];
        assert!(m.freq_axis[r] < 0.0);
        assert!((m.freq_axis[r] + 30.0).abs() < 4.0);
    }
}
