//! Re-iterable record buffer that spills to a temp file past a row budget.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};

use crate::error::Result;
use crate::physical::Record;
use crate::storage::encoding::{decode_values, encode_values, ValueEncoding};
use crate::value::ScalarType;

pub(crate) struct GroupBuffer {
    budget: usize,
    key_types: Vec<ScalarType>,
    types: Vec<ScalarType>,
    mem: Vec<Record>,
    spill: Option<BufWriter<File>>,
    spilled: usize,
}

impl GroupBuffer {
    pub fn new(budget: usize, key_types: Vec<ScalarType>, val_types: Vec<ScalarType>) -> GroupBuffer {
        let types = key_types.iter().chain(&val_types).copied().collect();
        GroupBuffer {
            budget: budget.max(1),
            key_types,
            types,
            mem: Vec::new(),
            spill: None,
            spilled: 0,
        }
    }

    pub fn clear(&mut self) -> Result<()> {
        self.mem.clear();
        if let Some(w) = self.spill.as_mut() {
            w.flush()?;
            w.get_mut().set_len(0)?;
            w.get_mut().seek(SeekFrom::Start(0))?;
        }
        self.spilled = 0;
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.mem.is_empty() && self.spilled == 0
    }

    pub fn push(&mut self, r: Record) -> Result<()> {
        if self.mem.len() < self.budget {
            self.mem.push(r);
            return Ok(());
        }
        if self.spill.is_none() {
            self.spill = Some(BufWriter::new(tempfile::tempfile()?));
        }
        let w = self.spill.as_mut().unwrap();
        let all: Vec<_> = r.key.into_iter().chain(r.vals).collect();
        let bytes = encode_values(&all, ValueEncoding::Text);
        w.write_all(&(bytes.len() as u32).to_le_bytes())?;
        w.write_all(&bytes)?;
        self.spilled += 1;
        Ok(())
    }

    /// Visit every buffered record in insertion order.
    pub fn for_each(&mut self, mut f: impl FnMut(&Record) -> Result<()>) -> Result<()> {
        for r in &self.mem {
            f(r)?;
        }
        if self.spilled == 0 {
            return Ok(());
        }
        let w = self.spill.as_mut().unwrap();
        w.flush()?;
        let mut file = w.get_ref().try_clone()?;
        file.seek(SeekFrom::Start(0))?;
        let mut r = BufReader::new(file);
        let nk = self.key_types.len();
        for _ in 0..self.spilled {
            let mut len = [0u8; 4];
            r.read_exact(&mut len)?;
            let mut buf = vec![0u8; u32::from_le_bytes(len) as usize];
            r.read_exact(&mut buf)?;
            let mut all = decode_values(&buf, &self.types, ValueEncoding::Text)?;
            let vals = all.split_off(nk);
            f(&Record { key: all, vals })?;
        }
        // leave the write position at the end for further pushes
        w.get_mut().seek(SeekFrom::End(0))?;
        Ok(())
    }
}
