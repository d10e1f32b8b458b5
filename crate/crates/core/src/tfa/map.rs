use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Magnitudes below this are clamped before taking log10.
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    StftMag,
    CwtMag,
}

impl MapKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MapKind::StftMag => "stft_mag",
            MapKind::CwtMag => "cwt_mag",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "stft_mag" => Ok(MapKind::StftMag),
            "cwt_mag" => Ok(MapKind::CwtMag),
            other => Err(Error::Format(format!("unknown map kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeScale {
    Linear,
    Log10,
}

impl AmplitudeScale {
    pub fn as_str(self) -> &'static str {
        match self {
            AmplitudeScale::Linear => "linear",
            AmplitudeScale::Log10 => "log10",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(AmplitudeScale::Linear),
            "log10" => Ok(AmplitudeScale::Log10),
            other => Err(Error::Format(format!("unknown amplitude scale {other:?}"))),
        }
    }
}

/// Real frequency x time image. Linear maps are non-negative; log10 maps are
/// bounded below by `log10(LOG_FLOOR)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeFrequencyMap {
    /// Row-major `n_freq x n_time`.
    pub values: Vec<f64>,
    pub n_freq: usize,
    pub n_time: usize,
    pub freq_axis: Vec<f64>,
    pub time_axis: Vec<f64>,
    pub kind: MapKind,
    pub scale: AmplitudeScale,
}

impl TimeFrequencyMap {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_time + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.n_time..(row + 1) * self.n_time]
    }

    /// Checks finiteness, sign (linear maps), axis lengths and axis monotonicity.
    pub fn validate(&self) -> Result<()> {
        if self.n_time == 0 || self.n_freq == 0 {
            return Err(Error::shape("time-frequency map must have at least one row and column"));
        }
        if self.values.len() != self.n_freq * self.n_time
            || self.freq_axis.len() != self.n_freq
            || self.time_axis.len() != self.n_time
        {
            return Err(Error::shape("time-frequency map dimensions disagree with its axes"));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("time-frequency map value".into()));
        }
        if self.scale == AmplitudeScale::Linear && self.values.iter().any(|v| *v < 0.0) {
            return Err(Error::domain("linear magnitude map has a negative value"));
        }
        let inc = self.freq_axis.windows(2).all(|w| w[1] > w[0]);
        let dec = self.freq_axis.windows(2).all(|w| w[1] < w[0]);
        if !(inc || dec) {
            return Err(Error::domain("frequency axis is not strictly monotonic"));
        }
        Ok(())
    }

    /// Row whose summed value is largest.
    pub fn brightest_row(&self) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for r in 0..self.n_freq {
            let s: f64 = self.row(r).iter().sum();
            if s > best.1 {
                best = (r, s);
            }
        }
        best.0
    }
}

/// Corner-aligned source coordinate for output index `i`.
fn source_coord(i: usize, n_out: usize, n_in: usize) -> f64 {
    if n_out == 1 {
        (n_in - 1) as f64 / 2.0
    } else {
        i as f64 * (n_in - 1) as f64 / (n_out - 1) as f64
    }
}

fn lerp_axis(axis: &[f64], x: f64) -> f64 {
    let i0 = (x.floor() as usize).min(axis.len() - 1);
    let i1 = (i0 + 1).min(axis.len() - 1);
    let f = x - i0 as f64;
    axis[i0] * (1.0 - f) + axis[i1] * f
}

/// Bilinear resampling with corner-aligned sampling; axes are resampled the same way.
pub fn resize_bilinear(map: &TimeFrequencyMap, out_rows: usize, out_cols: usize) -> Result<TimeFrequencyMap> {
    if out_rows == 0 || out_cols == 0 {
        return Err(Error::domain("resize target dimensions must be >= 1"));
    }
    if map.n_freq == 0 || map.n_time == 0 {
        return Err(Error::shape("cannot resize an empty map"));
    }
    if out_rows == map.n_freq && out_cols == map.n_time {
        return Ok(map.clone());
    }
    let rows: Vec<(usize, usize, f64)> = (0..out_rows)
        .map(|i| {
            let y = source_coord(i, out_rows, map.n_freq);
            let y0 = (y.floor() as usize).min(map.n_freq - 1);
            (y0, (y0 + 1).min(map.n_freq - 1), y - y0 as f64)
        })
        .collect();
    let cols: Vec<(usize, usize, f64)> = (0..out_cols)
        .map(|j| {
            let x = source_coord(j, out_cols, map.n_time);
            let x0 = (x.floor() as usize).min(map.n_time - 1);
            (x0, (x0 + 1).min(map.n_time - 1), x - x0 as f64)
        })
        .collect();

    let mut values = Vec::with_capacity(out_rows * out_cols);
    for &(y0, y1, fy) in &rows {
        for &(x0, x1, fx) in &cols {
            let top = map.get(y0, x0) * (1.0 - fx) + map.get(y0, x1) * fx;
            let bottom = map.get(y1, x0) * (1.0 - fx) + map.get(y1, x1) * fx;
            values.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    let freq_axis = (0..out_rows)
        .map(|i| lerp_axis(&map.freq_axis, source_coord(i, out_rows, map.n_freq)))
        .collect();
    let time_axis = (0..out_cols)
        .map(|j| lerp_axis(&map.time_axis, source_coord(j, out_cols, map.n_time)))
        .collect();
    Ok(TimeFrequencyMap {
        values,
        n_freq: out_rows,
        n_time: out_cols,
        freq_axis,
        time_axis,
        kind: map.kind,
        scale: map.scale,
    })
}
