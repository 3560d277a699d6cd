//! Solver checkpoints: a UTF-8 header of `key value` lines ending with
//! `end`, followed by little-endian `f64` pairs (re, im) for every retained
//! wavevector in lexicographic order, components innermost.

use std::io::{BufRead, BufReader, Read, Write};

use num_complex::Complex64;

use super::SolverState;
use crate::error::{Error, Result};
use crate::spectral::{GridSpec, SpectralField};

pub const CHECKPOINT_MAGIC: &str = "meanflow-checkpoint";
const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub state: SolverState,
    /// Opaque single-line description of the producing configuration.
    pub config_echo: String,
}

impl Checkpoint {
    pub fn grid(&self) -> &GridSpec {
        self.state.v.grid()
    }
}

pub fn write_checkpoint<W: Write>(out: &mut W, checkpoint: &Checkpoint) -> Result<()> {
    if checkpoint.config_echo.contains('\n') {
        return Err(Error::Checkpoint("config echo must be a single line".into()));
    }
    let state = &checkpoint.state;
    let g = state.v.grid();
    let mut header = String::new();
    header.push_str(&format!("{CHECKPOINT_MAGIC} {FORMAT_VERSION}\n"));
    header.push_str(&format!("dimension {}\n", g.dimension()));
    header.push_str(&format!("resolution {}\n", g.resolution()));
    header.push_str(&format!("period {:?}\n", g.period()));
    header.push_str(&format!("dealias {:?}\n", g.dealias_fraction()));
    header.push_str(&format!("modes {}\n", state.v.modes().len()));
    header.push_str(&format!("t {:?}\n", state.t));
    header.push_str(&format!("step {}\n", state.step));
    header.push_str(&format!("dissipation_integral {:?}\n", state.dissipation_integral));
    header.push_str(&format!("work_integral {:?}\n", state.work_integral));
    header.push_str(&format!("config {}\n", checkpoint.config_echo));
    header.push_str("end\n");
    out.write_all(header.as_bytes())?;

    let d = g.dimension();
    let n = state.v.modes().len();
    let data = state.v.coefficients();
    let mut bytes = Vec::with_capacity(16 * d * n);
    for m in 0..n {
        for c in 0..d {
            let z = data[c * n + m];
            bytes.extend_from_slice(&z.re.to_le_bytes());
            bytes.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    out.write_all(&bytes)?;
    Ok(())
}

fn field<T: std::str::FromStr>(key: &str, value: Option<&String>) -> Result<T> {
    let raw = value.ok_or_else(|| Error::Checkpoint(format!("missing header field `{key}`")))?;
    raw.parse().map_err(|_| Error::Checkpoint(format!("invalid value for `{key}`: {raw}")))
}

pub fn read_checkpoint<R: Read>(input: R) -> Result<Checkpoint> {
    let mut reader = BufReader::new(input);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let mut first = line.trim_end().split(' ');
    if first.next() != Some(CHECKPOINT_MAGIC) {
        return Err(Error::Checkpoint("not a checkpoint file".into()));
    }
    let version: u32 = field("version", first.next().map(str::to_string).as_ref())?;
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported format version {version}")));
    }

    let mut entries = std::collections::HashMap::new();
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            return Err(Error::Checkpoint("header not terminated".into()));
        }
        let text = line.trim_end_matches('\n');
        if text == "end" {
            break;
        }
        let (key, value) = text.split_once(' ').unwrap_or((text, ""));
        entries.insert(key.to_string(), value.to_string());
    }

    let grid = GridSpec::with_dealias(
        field("dimension", entries.get("dimension"))?,
        field("resolution", entries.get("resolution"))?,
        field("period", entries.get("period"))?,
        field("dealias", entries.get("dealias"))?,
    )?;
    let modes = grid.modes();
    let n: usize = field("modes", entries.get("modes"))?;
    if n != modes.len() {
        return Err(Error::Checkpoint(format!("header declares {n} modes, grid retains {}", modes.len())));
    }
    let d = grid.dimension();
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    if bytes.len() != 16 * d * n {
        return Err(Error::Checkpoint(format!("expected {} payload bytes, found {}", 16 * d * n, bytes.len())));
    }
    let mut data = vec![Complex64::default(); d * n];
    let read = |offset: usize| f64::from_le_bytes(bytes[offset..offset + 8].try_into().expect("8 bytes"));
    for m in 0..n {
        for c in 0..d {
            let at = 16 * (m * d + c);
            data[c * n + m] = Complex64::new(read(at), read(at + 8));
        }
    }
    let v = SpectralField::from_projected(modes, data);
    let state = SolverState {
        t: field("t", entries.get("t"))?,
        v,
        step: field("step", entries.get("step"))?,
        dissipation_integral: field("dissipation_integral", entries.get("dissipation_integral"))?,
        work_integral: field("work_integral", entries.get("work_integral"))?,
    };
    let config_echo = entries.remove("config").unwrap_or_default();
    Ok(Checkpoint { state, config_echo })
}
