//! Binary serialization. Layout, all little-endian:
//!
//! ```text
//! magic "FWF1"
//! input symbol table:  u32 count, then per symbol u32 byte length + UTF-8
//! output symbol table: same
//! u32 state count, u32 start state
//! u32 final count, then per final u32 state + f64 cost
//! per state: u32 arc count, then per arc u32 ilabel, u32 olabel,
//!            f64 cost, u32 nextstate
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc as Shared;

use crate::fst::{Arc, Wfst};
use crate::symbol::SymbolTable;
use crate::{StateId, Weight, WfstError};

const MAGIC: &[u8; 4] = b"FWF1";

impl Wfst {
    pub fn write<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        write_table(w, self.isyms())?;
        write_table(w, self.osyms())?;
        write_u32(w, self.num_states() as u32)?;
        let start = self.start().expect("serializing a machine without a start state");
        write_u32(w, start)?;
        write_u32(w, self.num_finals() as u32)?;
        for (s, weight) in self.finals() {
            write_u32(w, s)?;
            write_f64(w, weight.value())?;
        }
        for s in 0..self.num_states() as StateId {
            let arcs = self.arcs(s);
            write_u32(w, arcs.len() as u32)?;
            for a in arcs {
                write_u32(w, a.ilabel)?;
                write_u32(w, a.olabel)?;
                write_f64(w, a.weight.value())?;
                write_u32(w, a.nextstate)?;
            }
        }
        Ok(())
    }

    pub fn read<R: Read>(r: &mut R) -> Result<Wfst, WfstError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(WfstError::Format("bad magic, expected FWF1".into()));
        }
        let isyms = Shared::new(read_table(r)?);
        let osyms = Shared::new(read_table(r)?);
        let num_states = read_u32(r)? as usize;
        let start = read_u32(r)?;
        if start as usize >= num_states {
            return Err(WfstError::Format("start state out of range".into()));
        }
        let mut f = Wfst::new(isyms.clone(), osyms.clone());
        f.add_states(num_states);
        f.set_start(start);
        let num_finals = read_u32(r)?;
        for _ in 0..num_finals {
            let s = read_u32(r)?;
            let cost = read_f64(r)?;
            if s as usize >= num_states || !cost.is_finite() || cost < 0.0 {
                return Err(WfstError::Format("bad final state entry".into()));
            }
            f.set_final(s, Weight::new(cost));
        }
        for s in 0..num_states as StateId {
            let n = read_u32(r)?;
            for _ in 0..n {
                let ilabel = read_u32(r)?;
                let olabel = read_u32(r)?;
                let cost = read_f64(r)?;
                let nextstate = read_u32(r)?;
                if !isyms.is_valid(ilabel)
                    || !osyms.is_valid(olabel)
                    || nextstate as usize >= num_states
                    || !cost.is_finite()
                    || cost < 0.0
                {
                    return Err(WfstError::Format(format!("bad arc in state {s}")));
                }
                f.add_arc(s, Arc::new(ilabel, olabel, Weight::new(cost), nextstate));
            }
        }
        Ok(f)
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write(&mut w)?;
        w.flush()
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Wfst, WfstError> {
        let mut r = BufReader::new(File::open(path)?);
        Wfst::read(&mut r)
    }
}

fn write_u32<W: Write>(w: &mut W, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_f64<W: Write>(w: &mut W, v: f64) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_table<W: Write>(w: &mut W, t: &SymbolTable) -> std::io::Result<()> {
    write_u32(w, t.len() as u32)?;
    for sym in t.symbols() {
        let bytes = sym.as_bytes();
        write_u32(w, bytes.len() as u32)?;
        w.write_all(bytes)?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, WfstError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64, WfstError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

fn read_table<R: Read>(r: &mut R) -> Result<SymbolTable, WfstError> {
    let count = read_u32(r)?;
    if count == 0 {
        return Err(WfstError::Format("symbol table missing epsilon".into()));
    }
    let mut t = SymbolTable::new();
    for i in 0..count {
        let len = read_u32(r)? as usize;
        if len > 1 << 20 {
            return Err(WfstError::Format("symbol too long".into()));
        }
        let mut buf = vec![0u8; len];
        r.read_exact(&mut buf)?;
        let sym =
            String::from_utf8(buf).map_err(|_| WfstError::Format("symbol not UTF-8".into()))?;
        if i == 0 {
            if sym != crate::symbol::EPSILON_SYM {
                return Err(WfstError::Format("id 0 must be the epsilon symbol".into()));
            }
        } else if t.add_symbol(&sym) != i {
            return Err(WfstError::Format(format!("duplicate symbol {sym:?}")));
        }
    }
    Ok(t)
}
