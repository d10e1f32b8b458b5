//! Text and image export of time-frequency maps.
//!
//! CSV layout (UTF-8, `\n` line ends):
//!
//! ```text
//! # kind=<stft_mag|cwt_mag> scale=<linear|log10> rows=<R> cols=<C>
//! freq_hz,<t_0>,<t_1>,...,<t_{C-1}>
//! <f_0>,<v_00>,<v_01>,...
//! ...
//! ```
//!
//! Numbers use the shortest decimal form that parses back to the same `f64`.
//!
//! PGM layout: binary `P5`, header `P5\n<C> <R>\n255\n`, then `R * C` bytes.
//! Image row 0 is the highest-frequency map row. Pixels are
//! `round(255 * (v - min) / (max - min))`; a constant map is all zeros.

use std::io::{BufRead, Write};

use super::map::{AmplitudeScale, MapKind, TimeFrequencyMap};
use crate::error::{Error, Result};

pub fn write_csv<W: Write>(map: &TimeFrequencyMap, mut out: W) -> Result<()> {
    map.validate()?;
    writeln!(
        out,
        "# kind={} scale={} rows={} cols={}",
        map.kind.as_str(),
        map.scale.as_str(),
        map.n_freq,
        map.n_time
    )?;
    let mut line = String::from("freq_hz");
    for t in &map.time_axis {
        line.push(',');
        line.push_str(&t.to_string());
    }
    writeln!(out, "{line}")?;
    for r in 0..map.n_freq {
        let mut line = map.freq_axis[r].to_string();
        for v in map.row(r) {
            line.push(',');
            line.push_str(&v.to_string());
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Format(format!("bad number {s:?}: {e}")))
}

pub fn read_csv<R: BufRead>(input: R) -> Result<TimeFrequencyMap> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty csv".into()))??;
    let header = header
        .strip_prefix("# ")
        .ok_or_else(|| Error::Format("missing '# ' header".into()))?;
    let (mut kind, mut scale, mut rows, mut cols) = (None, None, None, None);
    for field in header.split_whitespace() {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("bad header field {field:?}")))?;
        match k {
            "kind" => kind = Some(MapKind::parse(v)?),
            "scale" => scale = Some(AmplitudeScale::parse(v)?),
            "rows" => rows = v.parse::<usize>().ok(),
            "cols" => cols = v.parse::<usize>().ok(),
            _ => return Err(Error::Format(format!("unknown header key {k:?}"))),
        }
    }
    let (kind, scale, rows, cols) = match (kind, scale, rows, cols) {
        (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
        _ => return Err(Error::Format("incomplete header".into())),
    };

    let axis_line = lines.next().ok_or_else(|| Error::Format("missing time axis".into()))??;
    let mut parts = axis_line.split(',');
    if parts.next() != Some("freq_hz") {
        return Err(Error::Format("time axis line must start with freq_hz".into()));
    }
    let time_axis = parts.map(parse_f64).collect::<Result<Vec<_>>>()?;
    if time_axis.len() != cols {
        return Err(Error::Format("time axis length disagrees with header".into()));
    }

    let mut freq_axis = Vec::with_capacity(rows);
    let mut values = Vec::with_capacity(rows * cols);
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        freq_axis.push(parse_f64(parts.next().unwrap_or(""))?);
        let before = values.len();
        for p in parts {
            values.push(parse_f64(p)?);
        }
        if values.len() - before != cols {
            return Err(Error::Format("row length disagrees with header".into()));
        }
    }
    if freq_axis.len() != rows {
        return Err(Error::Format("row count disagrees with header".into()));
    }
    let map = TimeFrequencyMap { values, n_freq: rows, n_time: cols, freq_axis, time_axis, kind, scale };
    map.validate()?;
    Ok(map)
}

/// Min-max scaled 8-bit heatmap.
pub fn write_pgm<W: Write>(map: &TimeFrequencyMap, mut out: W) -> Result<()> {
    map.validate()?;
    let (lo, hi) = map
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    let span = hi - lo;
    let ascending = map.n_freq < 2 || map.freq_axis[1] > map.freq_axis[0];
    write!(out, "P5\n{} {}\n255\n", map.n_time, map.n_freq)?;
    let mut pixels = Vec::with_capacity(map.n_freq * map.n_time);
    for i in 0..map.n_freq {
        let r = if ascending { map.n_freq - 1 - i } else { i };
        for v in map.row(r) {
            let p = if span > 0.0 { (255.0 * (v - lo) / span).round() } else { 0.0 };
            pixels.push(p as u8);
        }
    }
    out.write_all(&pixels)?;
    Ok(())
}
