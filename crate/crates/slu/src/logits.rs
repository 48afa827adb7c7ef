//! Per-frame label probability matrices. Two on-disk forms: a binary one
//! (magic `FLGT`, u32 frame count, u32 label count, row-major little-endian
//! f32 probabilities, then the length-prefixed UTF-8 label list) and a JSON
//! one, `{"symbols": [...], "frames": [[...]]}`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::SluError;

const MAGIC: &[u8; 4] = b"FLGT";

/// How far a row sum may stray from 1 before it is renormalized on load.
const ROW_SUM_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct LogitMatrix {
    frames: Vec<Vec<f64>>,
    symbols: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct JsonForm {
    symbols: Vec<String>,
    frames: Vec<Vec<f64>>,
}

impl LogitMatrix {
    /// Validates shape and value ranges; rows whose sum strays from 1 by
    /// more than 1e-3 are renormalized.
    pub fn new(frames: Vec<Vec<f64>>, symbols: Vec<String>) -> Result<Self, SluError> {
        if frames.is_empty() {
            return Err(SluError::Input("logit matrix needs at least one frame".into()));
        }
        if symbols.len() < 2 {
            return Err(SluError::Input("logit matrix needs at least two labels".into()));
        }
        {
            let mut seen = std::collections::BTreeSet::new();
            for s in &symbols {
                if !seen.insert(s) {
                    return Err(SluError::Input(format!("duplicate matrix label {s:?}")));
                }
            }
        }
        let v = symbols.len();
        let mut frames = frames;
        for (t, row) in frames.iter_mut().enumerate() {
            if row.len() != v {
                return Err(SluError::Input(format!(
                    "frame {t} has {} entries, expected {v}",
                    row.len()
                )));
            }
            let mut sum = 0.0;
            for &p in row.iter() {
                if !(0.0..=1.0 + 1e-6).contains(&p) {
                    return Err(SluError::Input(format!(
                        "frame {t} contains probability {p} outside [0, 1]"
                    )));
                }
                sum += p;
            }
            if sum <= 0.0 {
                return Err(SluError::Input(format!("frame {t} sums to zero")));
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                for p in row.iter_mut() {
                    *p /= sum;
                }
            }
        }
        Ok(LogitMatrix { frames, symbols })
    }

    pub fn num_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn num_labels(&self) -> usize {
        self.symbols.len()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.frames[t]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.frames
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn write_flgt<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.num_frames() as u32).to_le_bytes())?;
        w.write_all(&(self.num_labels() as u32).to_le_bytes())?;
        for row in &self.frames {
            for &p in row {
                w.write_all(&(p as f32).to_le_bytes())?;
            }
        }
        for s in &self.symbols {
            let bytes = s.as_bytes();
            w.write_all(&(bytes.len() as u32).to_le_bytes())?;
            w.write_all(bytes)?;
        }
        Ok(())
    }

    pub fn read_flgt<R: Read>(r: &mut R) -> Result<Self, SluError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(SluError::Input("bad magic, expected FLGT".into()));
        }
        let t = read_u32(r)? as usize;
        let v = read_u32(r)? as usize;
        if t == 0 || v < 2 || t.saturating_mul(v) > 1 << 28 {
            return Err(SluError::Input(format!("implausible matrix shape {t}x{v}")));
        }
        let mut frames = Vec::with_capacity(t);
        for _ in 0..t {
            let mut row = Vec::with_capacity(v);
            for _ in 0..v {
                let mut buf = [0u8; 4];
                r.read_exact(&mut buf)?;
                row.push(f32::from_le_bytes(buf) as f64);
            }
            frames.push(row);
        }
        let mut symbols = Vec::with_capacity(v);
        for _ in 0..v {
            let len = read_u32(r)? as usize;
            if len > 1 << 16 {
                return Err(SluError::Input("symbol too long".into()));
            }
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf)?;
            symbols.push(
                String::from_utf8(buf)
                    .map_err(|_| SluError::Input("symbol not UTF-8".into()))?,
            );
        }
        LogitMatrix::new(frames, symbols)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&JsonForm {
            symbols: self.symbols.clone(),
            frames: self.frames.clone(),
        })
        .expect("serializing a logit matrix cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, SluError> {
        let form: JsonForm = serde_json::from_str(text)?;
        LogitMatrix::new(form.frames, form.symbols)
    }

    /// Reads either on-disk form, sniffing the magic bytes.
    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self, SluError> {
        let bytes = std::fs::read(path)?;
        if bytes.starts_with(MAGIC) {
            LogitMatrix::read_flgt(&mut bytes.as_slice())
        } else {
            LogitMatrix::from_json(
                std::str::from_utf8(&bytes)
                    .map_err(|_| SluError::Input("logit file is neither FLGT nor JSON".into()))?,
            )
        }
    }

    pub fn save_flgt<P: AsRef<Path>>(&self, path: P) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_flgt(&mut w)?;
        w.flush()
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, SluError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}
