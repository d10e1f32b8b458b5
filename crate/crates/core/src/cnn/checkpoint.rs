//! `GMC1` model checkpoints.
//!
//! Layout: newline-terminated ASCII header lines
//!
//! ```text
//! GMC1
//! format_version=1
//! seed=<u64>
//! iteration=<u64>
//! spec=<NetworkSpec as single-line JSON>
//! data
//! ```
//!
//! followed by little-endian `f32` values: every weight tensor in layer order,
//! then every bias, then the weight momenta, then the bias momenta.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::network::{init, ModelState, NetworkSpec, Param};
use crate::error::{Error, Result};

pub const MAGIC: &str = "GMC1";
pub const FORMAT_VERSION: u32 = 1;

fn blobs(state: &ModelState) -> [Vec<&Param>; 4] {
    let layers: Vec<_> = state.param_layers().collect();
    [
        layers.iter().map(|p| &p.weight).collect(),
        layers.iter().map(|p| &p.bias).collect(),
        layers.iter().map(|p| &p.weight).collect(),
        layers.iter().map(|p| &p.bias).collect(),
    ]
}

pub fn write_checkpoint<W: Write>(state: &ModelState, mut out: W) -> Result<()> {
    let spec = serde_json::to_string(&state.spec)?;
    write!(
        out,
        "{MAGIC}\nformat_version={FORMAT_VERSION}\nseed={}\niteration={}\nspec={spec}\ndata\n",
        state.seed, state.iteration
    )?;
    let mut buf = Vec::with_capacity(4 * state.param_count() * 2);
    for (k, group) in blobs(state).iter().enumerate() {
        for p in group {
            let t = if k < 2 { &p.value } else { &p.velocity };
            for v in t.data() {
                buf.extend_from_slice(&(*v as f32).to_le_bytes());
            }
        }
    }
    out.write_all(&buf)?;
    out.flush()?;
    Ok(())
}

pub fn save(state: &ModelState, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_checkpoint(state, std::io::BufWriter::new(file))
}

fn header_field<'a>(line: &'a str, key: &str) -> Result<&'a str> {
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| Error::Format(format!("expected `{key}=...`, got `{line}`")))
}

pub fn read_checkpoint<R: Read>(input: R) -> Result<ModelState> {
    let mut reader = BufReader::new(input);
    let mut lines = Vec::with_capacity(6);
    for _ in 0..6 {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            return Err(Error::Format("truncated checkpoint header".into()));
        }
        lines.push(line.trim_end_matches('\n').to_string());
    }
    if lines[0] != MAGIC {
        return Err(Error::Format(format!("not a {MAGIC} checkpoint")));
    }
    let version: u32 = header_field(&lines[1], "format_version")?
        .parse()
        .map_err(|_| Error::Format("bad format_version".into()))?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let seed: u64 = header_field(&lines[2], "seed")?
        .parse()
        .map_err(|_| Error::Format("bad seed".into()))?;
    let iteration: u64 = header_field(&lines[3], "iteration")?
        .parse()
        .map_err(|_| Error::Format("bad iteration".into()))?;
    let spec: NetworkSpec = serde_json::from_str(header_field(&lines[4], "spec")?)?;
    if lines[5] != "data" {
        return Err(Error::Format("missing data marker".into()));
    }
    spec.validate()?;

    let mut state = init(&spec, seed)?;
    state.iteration = iteration;
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    let expected = 2 * state.param_count();
    if bytes.len() != 4 * expected {
        return Err(Error::Format(format!(
            "checkpoint holds {} bytes of parameters, spec needs {}",
            bytes.len(),
            4 * expected
        )));
    }
    let mut values = bytes.chunks_exact(4).map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])));
    let mut layers: Vec<_> = state.params.iter_mut().flatten().collect();
    for k in 0..4 {
        for lp in layers.iter_mut() {
            let t = match k {
                0 => &mut lp.weight.value,
                1 => &mut lp.bias.value,
                2 => &mut lp.weight.velocity,
                _ => &mut lp.bias.velocity,
            };
            for v in t.data_mut() {
                *v = values.next().expect("length checked above");
            }
        }
    }
    for p in state.param_layers() {
        p.weight.value.ensure_finite("checkpoint weights")?;
        p.bias.value.ensure_finite("checkpoint biases")?;
    }
    Ok(state)
}

pub fn load(path: &Path) -> Result<ModelState> {
    read_checkpoint(std::fs::File::open(path)?)
}
