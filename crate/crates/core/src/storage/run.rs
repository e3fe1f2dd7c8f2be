//! Sorted run files.
//!
//! Layout: records `u32 klen | key | u32 vlen | value` (lengths little
//! endian) in strictly increasing key order, then a block index with one
//! entry per 4 KiB of records (`u32 count`, then per entry
//! `u32 klen | key | u64 offset`), then a trailing `u64` holding the offset
//! of the index.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{LaraError, Result};

pub const BLOCK_BYTES: u64 = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub file: String,
    pub records: u64,
    pub bytes: u64,
}

pub struct RunWriter {
    path: PathBuf,
    out: BufWriter<File>,
    offset: u64,
    block_start: Option<u64>,
    index: Vec<(Vec<u8>, u64)>,
    last: Option<Vec<u8>>,
    records: u64,
}

impl RunWriter {
    pub fn create(path: &Path) -> Result<RunWriter> {
        Ok(RunWriter {
            path: path.to_path_buf(),
            out: BufWriter::new(File::create(path)?),
            offset: 0,
            block_start: None,
            index: Vec::new(),
            last: None,
            records: 0,
        })
    }

    pub fn push(&mut self, key: &[u8], val: &[u8]) -> Result<()> {
        if let Some(last) = &self.last {
            if key <= last.as_slice() {
                return Err(LaraError::OrderViolation(format!(
                    "run {} received keys out of order",
                    self.path.display()
                )));
            }
        }
        let new_block = match self.block_start {
            None => true,
            Some(s) => self.offset - s >= BLOCK_BYTES,
        };
        if new_block {
            self.index.push((key.to_vec(), self.offset));
            self.block_start = Some(self.offset);
        }
        self.out.write_all(&(key.len() as u32).to_le_bytes())?;
        self.out.write_all(key)?;
        self.out.write_all(&(val.len() as u32).to_le_bytes())?;
        self.out.write_all(val)?;
        self.offset += 8 + key.len() as u64 + val.len() as u64;
        self.last = Some(key.to_vec());
        self.records += 1;
        Ok(())
    }

    pub fn records(&self) -> u64 {
        self.records
    }

    pub fn finish(mut self) -> Result<RunMeta> {
        let index_offset = self.offset;
        self.out.write_all(&(self.index.len() as u32).to_le_bytes())?;
        for (k, off) in &self.index {
            self.out.write_all(&(k.len() as u32).to_le_bytes())?;
            self.out.write_all(k)?;
            self.out.write_all(&off.to_le_bytes())?;
        }
        self.out.write_all(&index_offset.to_le_bytes())?;
        self.out.flush()?;
        let bytes = self.out.get_ref().metadata()?.len();
        Ok(RunMeta {
            file: self
                .path
                .file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_default(),
            records: self.records,
            bytes,
        })
    }
}

/// Reads a run from an optional starting key to the end of its records.
pub struct RunReader {
    name: String,
    input: BufReader<File>,
    pos: u64,
    end: u64,
    lo: Option<Vec<u8>>,
}

fn corrupt(path: &Path, message: &str) -> LaraError {
    LaraError::Corrupt {
        file: path.display().to_string(),
        message: message.into(),
    }
}

fn read_u32(r: &mut impl Read) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

/// Read the block index of a run file.
pub fn read_index(path: &Path) -> Result<(Vec<(Vec<u8>, u64)>, u64)> {
    let mut f = File::open(path)?;
    let len = f.metadata()?.len();
    if len < 12 {
        return Err(corrupt(path, "file too short for a footer"));
    }
    f.seek(SeekFrom::Start(len - 8))?;
    let index_offset = read_u64(&mut f)?;
    if index_offset > len - 12 {
        return Err(corrupt(path, "index offset out of range"));
    }
    f.seek(SeekFrom::Start(index_offset))?;
    let mut r = BufReader::new(f);
    let n = read_u32(&mut r)?;
    let mut index = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let kl = read_u32(&mut r)? as usize;
        if kl as u64 > len {
            return Err(corrupt(path, "index key length out of range"));
        }
        let mut k = vec![0; kl];
        r.read_exact(&mut k)?;
        index.push((k, read_u64(&mut r)?));
    }
    Ok((index, index_offset))
}

impl RunReader {
    pub fn open(path: &Path, lo: Option<&[u8]>) -> Result<RunReader> {
        let (index, end) = read_index(path)?;
        let start = match lo {
            None => 0,
            Some(lo) => {
                // last block whose first key is <= lo
                let i = index.partition_point(|(k, _)| k.as_slice() <= lo);
                if i == 0 {
                    0
                } else {
                    index[i - 1].1
                }
            }
        };
        let mut f = File::open(path)?;
        f.seek(SeekFrom::Start(start))?;
        Ok(RunReader {
            name: path.display().to_string(),
            input: BufReader::with_capacity(64 * 1024, f),
            pos: start,
            end,
            lo: lo.map(|l| l.to_vec()),
        })
    }

    fn read_record(&mut self) -> Result<Option<(Vec<u8>, Vec<u8>)>> {
        if self.pos >= self.end {
            return Ok(None);
        }
        let path = PathBuf::from(&self.name);
        let kl = read_u32(&mut self.input)? as u64;
        if self.pos + 4 + kl > self.end {
            return Err(corrupt(&path, "record key overruns index"));
        }
        let mut k = vec![0; kl as usize];
        self.input.read_exact(&mut k)?;
        let vl = read_u32(&mut self.input)? as u64;
        if self.pos + 8 + kl + vl > self.end {
            return Err(corrupt(&path, "record value overruns index"));
        }
        let mut v = vec![0; vl as usize];
        self.input.read_exact(&mut v)?;
        self.pos += 8 + kl + vl;
        Ok(Some((k, v)))
    }
}

impl Iterator for RunReader {
    type Item = Result<(Vec<u8>, Vec<u8>)>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            match self.read_record() {
                Ok(Some((k, v))) => {
                    if let Some(lo) = &self.lo {
                        if k.as_slice() < lo.as_slice() {
                            continue;
                        }
                        self.lo = None;
                    }
                    return Some(Ok((k, v)));
                }
                Ok(None) => return None,
                Err(e) => {
                    self.pos = self.end;
                    return Some(Err(e));
                }
            }
        }
    }
}
