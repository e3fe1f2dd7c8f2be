//! External merge sort over encoded keys, with an optional ⊕ combiner that
//! folds equal keys inside every run and again during every merge.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::path::PathBuf;
use std::sync::Arc;

use crate::error::{LaraError, Result};
use crate::metrics::Metrics;
use crate::schema::Schema;
use crate::storage::encoding::{decode_values, encode_key, encode_values, ValueEncoding};
use crate::storage::run::{RunReader, RunWriter};
use crate::table::UdfList;
use crate::udf::func::{BoundBinary, PlusFn};
use crate::value::{ScalarType, Value};

pub const DEFAULT_RUN_ROWS: usize = 64 * 1024;

/// ⊕ per value attribute, bound to the attribute types.
#[derive(Clone, Debug)]
pub struct Combiner {
    ops: Vec<BoundBinary>,
    pub fns: Vec<PlusFn>,
}

impl Combiner {
    pub fn new(schema: &Schema, plus: &UdfList<PlusFn>) -> Result<Combiner> {
        let mut ops = Vec::new();
        let mut fns = Vec::new();
        for v in &schema.values {
            let f = plus
                .iter()
                .find(|(n, _)| *n == v.name)
                .map(|(_, f)| f)
                .ok_or_else(|| LaraError::schema(format!("no ⊕ given for value `{}`", v.name)))?;
            ops.push(f.op.bind(v.ty, v.ty)?);
            fns.push(f.clone());
        }
        for (n, _) in plus {
            if !schema.has_value(n) {
                return Err(LaraError::schema(format!("⊕ given for unknown value `{n}`")));
            }
        }
        Ok(Combiner { ops, fns })
    }

    pub fn associative(&self) -> bool {
        self.fns.iter().all(|f| f.associative)
    }

    pub fn commutative(&self) -> bool {
        self.fns.iter().all(|f| f.commutative)
    }

    pub fn fold(&self, acc: &mut [Value], x: &[Value]) {
        for ((a, x), op) in acc.iter_mut().zip(x).zip(&self.ops) {
            *a = op.apply(a, x);
        }
    }
}

pub type EncodedRecord = (Vec<u8>, Vec<Value>);
pub type RecordSource = Box<dyn Iterator<Item = Result<EncodedRecord>> + Send>;

/// K-way merge of sorted sources. Equal keys are folded with the combiner
/// (earlier sources first) or reported as duplicates; all-default results
/// are dropped.
pub struct MergeIter {
    sources: Vec<RecordSource>,
    heads: Vec<Option<Vec<Value>>>,
    heap: BinaryHeap<Reverse<(Vec<u8>, usize)>>,
    combiner: Option<Arc<Combiner>>,
    defaults: Vec<Value>,
    failed: bool,
    primed: bool,
}

impl MergeIter {
    pub fn new(sources: Vec<RecordSource>, combiner: Option<Arc<Combiner>>, defaults: Vec<Value>) -> MergeIter {
        let n = sources.len();
        MergeIter {
            sources,
            heads: vec![None; n],
            heap: BinaryHeap::new(),
            combiner,
            defaults,
            failed: false,
            primed: false,
        }
    }

    fn refill(&mut self, i: usize) -> Result<()> {
        match self.sources[i].next() {
            None => Ok(()),
            Some(Err(e)) => Err(e),
            Some(Ok((k, v))) => {
                self.heads[i] = Some(v);
                self.heap.push(Reverse((k, i)));
                Ok(())
            }
        }
    }

    fn step(&mut self) -> Result<Option<EncodedRecord>> {
        if !self.primed {
            self.primed = true;
            for i in 0..self.sources.len() {
                self.refill(i)?;
            }
        }
        loop {
            let Some(Reverse((key, i))) = self.heap.pop() else {
                return Ok(None);
            };
            let mut acc = self.heads[i].take().expect("head present");
            self.refill(i)?;
            while let Some(Reverse((k2, _))) = self.heap.peek() {
                if *k2 != key {
                    break;
                }
                let Reverse((_, j)) = self.heap.pop().unwrap();
                let x = self.heads[j].take().expect("head present");
                self.refill(j)?;
                match &self.combiner {
                    Some(c) => c.fold(&mut acc, &x),
                    None => {
                        return Err(LaraError::DuplicateKey(format!(
                            "encoded key {key:02x?} appears in more than one run"
                        )))
                    }
                }
            }
            if acc != self.defaults {
                return Ok(Some((key, acc)));
            }
        }
    }
}

impl Iterator for MergeIter {
    type Item = Result<EncodedRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        match self.step() {
            Ok(Some(r)) => Some(Ok(r)),
            Ok(None) => None,
            Err(e) => {
                self.failed = true;
                Some(Err(e))
            }
        }
    }
}

pub fn run_source(path: PathBuf, types: Vec<ScalarType>, enc: ValueEncoding, lo: Option<Vec<u8>>) -> Result<RecordSource> {
    let reader = RunReader::open(&path, lo.as_deref())?;
    Ok(Box::new(reader.map(move |r| {
        let (k, v) = r?;
        Ok((k, decode_values(&v, &types, enc)?))
    })))
}

#[derive(Clone, Debug)]
pub struct SortConfig {
    pub run_rows: usize,
    pub encoding: ValueEncoding,
}

impl Default for SortConfig {
    fn default() -> Self {
        SortConfig {
            run_rows: DEFAULT_RUN_ROWS,
            encoding: ValueEncoding::Text,
        }
    }
}

/// Accepts records in any order and yields them sorted by encoded key.
/// `schema` has its keys in the target path order.
pub struct ExternalSorter {
    key_types: Vec<ScalarType>,
    val_types: Vec<ScalarType>,
    defaults: Vec<Value>,
    combiner: Option<Arc<Combiner>>,
    cfg: SortConfig,
    tmp: Option<tempfile::TempDir>,
    spills: Vec<PathBuf>,
    buf: Vec<EncodedRecord>,
    metrics: Arc<Metrics>,
}

impl ExternalSorter {
    pub fn new(schema: &Schema, combiner: Option<Arc<Combiner>>, cfg: SortConfig, metrics: Arc<Metrics>) -> ExternalSorter {
        ExternalSorter {
            key_types: schema.keys.iter().map(|k| k.ty).collect(),
            val_types: schema.values.iter().map(|v| v.ty).collect(),
            defaults: schema.defaults(),
            combiner,
            cfg,
            tmp: None,
            spills: Vec::new(),
            buf: Vec::new(),
            metrics,
        }
    }

    pub fn push(&mut self, key: &[Value], vals: Vec<Value>) -> Result<()> {
        let k = encode_key(key, &self.key_types)?;
        self.push_encoded(k, vals)
    }

    pub fn push_encoded(&mut self, key: Vec<u8>, vals: Vec<Value>) -> Result<()> {
        Metrics::add(&self.metrics.bytes_sorted, key.len() as u64);
        self.buf.push((key, vals));
        if self.buf.len() >= self.cfg.run_rows.max(1) {
            self.spill()?;
        }
        Ok(())
    }

    /// Sort the buffer and fold/check duplicate keys in it.
    fn sorted_buffer(&mut self) -> Result<Vec<EncodedRecord>> {
        let mut buf = std::mem::take(&mut self.buf);
        buf.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<EncodedRecord> = Vec::with_capacity(buf.len());
        for (k, v) in buf {
            match out.last_mut() {
                Some((lk, lv)) if *lk == k => match &self.combiner {
                    Some(c) => c.fold(lv, &v),
                    None => {
                        return Err(LaraError::DuplicateKey(format!(
                            "encoded key {k:02x?} written twice without an aggregator"
                        )))
                    }
                },
                _ => out.push((k, v)),
            }
        }
        out.retain(|(_, v)| *v != self.defaults);
        Ok(out)
    }

    fn spill(&mut self) -> Result<()> {
        let sorted = self.sorted_buffer()?;
        if self.tmp.is_none() {
            self.tmp = Some(tempfile::Builder::new().prefix("laradb-sort").tempdir()?);
        }
        let path = self
            .tmp
            .as_ref()
            .unwrap()
            .path()
            .join(format!("spill-{:04}.dat", self.spills.len()));
        let mut w = RunWriter::create(&path)?;
        for (k, v) in &sorted {
            w.push(k, &encode_values(v, self.cfg.encoding))?;
        }
        let meta = w.finish()?;
        Metrics::add(&self.metrics.tuples_materialized, meta.records);
        Metrics::add(&self.metrics.sort_runs, 1);
        self.spills.push(path);
        Ok(())
    }

    /// Sorted, folded, canonical output. Keeps the spill directory alive
    /// for as long as the iterator lives.
    pub fn finish(mut self) -> Result<SortedOutput> {
        let last = self.sorted_buffer()?;
        let mut sources: Vec<RecordSource> = Vec::new();
        for p in &self.spills {
            sources.push(run_source(p.clone(), self.val_types.clone(), self.cfg.encoding, None)?);
        }
        if !last.is_empty() {
            Metrics::add(&self.metrics.sort_runs, 1);
        }
        sources.push(Box::new(last.into_iter().map(Ok)));
        let merge = MergeIter::new(sources, self.combiner.clone(), self.defaults.clone());
        Ok(SortedOutput {
            merge,
            _tmp: self.tmp.take(),
        })
    }
}

pub struct SortedOutput {
    merge: MergeIter,
    _tmp: Option<tempfile::TempDir>,
}

impl Iterator for SortedOutput {
    type Item = Result<EncodedRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        self.merge.next()
    }
}
