//! Partitioned sorted stores and the on-disk catalog.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LaraError, Result};
use crate::metrics::Metrics;
use crate::schema::{Schema, TupleRow};
use crate::storage::encoding::{decode_key, encode_key, encode_values, ValueEncoding};
use crate::storage::run::{RunMeta, RunWriter};
use crate::storage::sort::{run_source, Combiner, EncodedRecord, ExternalSorter, MergeIter, RecordSource, SortConfig};
use crate::table::{AssociativeTable, KeyTuple, UdfList, ValueTuple};
use crate::udf::func::PlusFn;
use crate::value::{ScalarType, Value};

pub const MANIFEST: &str = "manifest";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionMeta {
    /// Inclusive lower bound (path order); `None` is unbounded.
    pub lower: Option<KeyTuple>,
    /// Exclusive upper bound; `None` is unbounded.
    pub upper: Option<KeyTuple>,
    pub runs: Vec<RunMeta>,
}

impl PartitionMeta {
    pub fn records(&self) -> u64 {
        self.runs.iter().map(|r| r.records).sum()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub records: u64,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    /// Keys listed in access-path order.
    pub schema: Schema,
    pub path: Vec<String>,
    pub encoding: ValueEncoding,
    pub partitions: Vec<PartitionMeta>,
    pub splits: Vec<KeyTuple>,
    pub stats: Stats,
    /// Bumped on every committed change to the table's data.
    pub version: u64,
    pub next_run: u64,
    /// Whether re-applying the compaction ⊕ to already-folded records is
    /// harmless (⊕ idempotent). Recorded only; no replay is performed.
    pub reapply_safe: bool,
    /// Deferred computation replayed on scan (opaque to storage).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub view: Option<serde_json::Value>,
}

impl Manifest {
    pub fn key_types(&self) -> Vec<ScalarType> {
        self.schema.keys.iter().map(|k| k.ty).collect()
    }

    pub fn value_types(&self) -> Vec<ScalarType> {
        self.schema.values.iter().map(|v| v.ty).collect()
    }

    fn recount(&mut self) {
        self.stats.records = self.partitions.iter().map(|p| p.records()).sum();
        self.stats.bytes = self
            .partitions
            .iter()
            .flat_map(|p| &p.runs)
            .map(|r| r.bytes)
            .sum();
    }
}

/// Options for writing a table.
#[derive(Clone, Debug, Default)]
pub struct WriteOptions {
    pub encoding: ValueEncoding,
    /// Fold duplicate keys with ⊕ instead of rejecting them.
    pub combiner: Option<Vec<(String, PlusFn)>>,
    /// Split keys (path order); partition i starts at split i-1.
    pub splits: Vec<KeyTuple>,
    pub run_rows: Option<usize>,
    pub metrics: Option<Arc<Metrics>>,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

fn sanitize(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect();
    if s.is_empty() || s.starts_with('.') {
        format!("t_{s}")
    } else {
        s
    }
}

fn run_name(n: u64) -> String {
    format!("run-{n:04}.dat")
}

/// Writes partition runs for an already sorted record stream.
struct PartitionedWriter {
    dir: PathBuf,
    enc: ValueEncoding,
    split_bytes: Vec<Vec<u8>>,
    partitions: Vec<PartitionMeta>,
    current: usize,
    writer: Option<RunWriter>,
    next_run: u64,
    last: Option<Vec<u8>>,
    metrics: Arc<Metrics>,
}

impl PartitionedWriter {
    fn new(dir: &Path, schema: &Schema, splits: &[KeyTuple], enc: ValueEncoding, next_run: u64, metrics: Arc<Metrics>) -> Result<Self> {
        let types: Vec<ScalarType> = schema.keys.iter().map(|k| k.ty).collect();
        let mut split_bytes = Vec::new();
        for s in splits {
            split_bytes.push(encode_key(s, &types)?);
        }
        if split_bytes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LaraError::usage("split points must be strictly increasing"));
        }
        let mut partitions = Vec::new();
        for i in 0..=splits.len() {
            partitions.push(PartitionMeta {
                lower: if i == 0 { None } else { Some(splits[i - 1].clone()) },
                upper: splits.get(i).cloned(),
                runs: vec![],
            });
        }
        Ok(PartitionedWriter {
            dir: dir.to_path_buf(),
            enc,
            split_bytes,
            partitions,
            current: 0,
            writer: None,
            next_run: next_run,
            last: None,
            metrics,
        })
    }

    fn close_current(&mut self) -> Result<()> {
        if let Some(w) = self.writer.take() {
            let meta = w.finish()?;
            self.partitions[self.current].runs.push(meta);
        }
        Ok(())
    }

    fn push(&mut self, key: &[u8], vals: &[Value]) -> Result<()> {
        if let Some(l) = &self.last {
            if key <= l.as_slice() {
                return Err(LaraError::OrderViolation(
                    "store input is not strictly increasing in its access path".into(),
                ));
            }
        }
        self.last = Some(key.to_vec());
        let mut target = self.current;
        while target < self.split_bytes.len() && key >= self.split_bytes[target].as_slice() {
            target += 1;
        }
        if target != self.current {
            self.close_current()?;
            self.current = target;
        }
        if self.writer.is_none() {
            let name = run_name(self.next_run);
            self.next_run += 1;
            self.writer = Some(RunWriter::create(&self.dir.join(name))?);
        }
        self.writer
            .as_mut()
            .unwrap()
            .push(key, &encode_values(vals, self.enc))?;
        Metrics::add(&self.metrics.tuples_materialized, 1);
        Ok(())
    }

    fn finish(mut self) -> Result<(Vec<PartitionMeta>, u64)> {
        self.close_current()?;
        Ok((self.partitions, self.next_run))
    }
}

/// A table materialized on disk, sorted by its access path.
#[derive(Clone, Debug)]
pub struct SortedTableStore {
    dir: PathBuf,
    manifest: Manifest,
}

impl SortedTableStore {
    pub fn open(dir: &Path) -> Result<SortedTableStore> {
        let text = fs::read_to_string(dir.join(MANIFEST))?;
        let manifest: Manifest = serde_json::from_str(&text)?;
        Ok(SortedTableStore {
            dir: dir.to_path_buf(),
            manifest,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn name(&self) -> &str {
        &self.manifest.name
    }

    pub fn schema(&self) -> &Schema {
        &self.manifest.schema
    }

    pub fn path(&self) -> &[String] {
        &self.manifest.path
    }

    pub fn records(&self) -> u64 {
        self.manifest.stats.records
    }

    pub fn splits(&self) -> &[KeyTuple] {
        &self.manifest.splits
    }

    pub fn partitions(&self) -> &[PartitionMeta] {
        &self.manifest.partitions
    }

    pub fn version(&self) -> u64 {
        self.manifest.version
    }

    fn partition_source(&self, i: usize, lo: Option<&[u8]>, combiner: Option<Arc<Combiner>>) -> Result<MergeIter> {
        let p = &self.manifest.partitions[i];
        let mut sources: Vec<RecordSource> = Vec::new();
        for r in &p.runs {
            sources.push(run_source(
                self.dir.join(&r.file),
                self.manifest.value_types(),
                self.manifest.encoding,
                lo.map(|l| l.to_vec()),
            )?);
        }
        Ok(MergeIter::new(sources, combiner, self.manifest.schema.defaults()))
    }

    fn encode_bound(&self, b: Option<&[Value]>) -> Result<Option<Vec<u8>>> {
        let Some(b) = b else { return Ok(None) };
        let types = self.manifest.key_types();
        if b.len() > types.len() {
            return Err(LaraError::usage(format!(
                "range bound has {} components but the path has {}",
                b.len(),
                types.len()
            )));
        }
        let coerced = b
            .iter()
            .zip(&types)
            .map(|(v, t)| t.coerce(v.clone()).map_err(|e| LaraError::usage(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Ok(Some(encode_key(&coerced, &types)?))
    }

    /// Raw records of partitions `range`, restricted to the encoded bounds.
    fn raw_scan(&self, parts: std::ops::Range<usize>, lo: Option<Vec<u8>>, hi: Option<Vec<u8>>) -> Result<StoreScan> {
        if let (Some(l), Some(h)) = (&lo, &hi) {
            if l > h && !l.starts_with(h) {
                return Ok(StoreScan::empty(self));
            }
        }
        let types = self.manifest.key_types();
        let mut iters = Vec::new();
        for i in parts {
            let p = &self.manifest.partitions[i];
            if let (Some(h), Some(lower)) = (&hi, &p.lower) {
                let lb = encode_key(lower, &types)?;
                if lb.as_slice() > h.as_slice() && !lb.starts_with(h) {
                    continue;
                }
            }
            if let (Some(l), Some(upper)) = (&lo, &p.upper) {
                if encode_key(upper, &types)?.as_slice() <= l.as_slice() {
                    continue;
                }
            }
            iters.push(self.partition_source(i, lo.as_deref(), None)?);
        }
        Ok(StoreScan {
            parts: iters.into_iter(),
            current: None,
            hi,
            key_types: types,
            metrics: None,
            done: false,
        })
    }

    pub fn scan(&self) -> Result<StoreScan> {
        self.raw_scan(0..self.manifest.partitions.len(), None, None)
    }

    /// Records whose path prefix lies in `[lo, hi]` (both inclusive, each a
    /// prefix of the access path).
    pub fn scan_range(&self, lo: Option<&[Value]>, hi: Option<&[Value]>) -> Result<StoreScan> {
        let lo = self.encode_bound(lo)?;
        let hi = self.encode_bound(hi)?;
        self.raw_scan(0..self.manifest.partitions.len(), lo, hi)
    }

    pub fn scan_partition(&self, i: usize) -> Result<StoreScan> {
        self.raw_scan(i..i + 1, None, None)
    }

    /// Hand each partition's stream to `f`, running at most `threads`
    /// partitions at once (all of them when `None`).
    pub fn scan_partitions_parallel<T, F>(&self, threads: Option<usize>, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize, StoreScan) -> Result<T> + Sync,
    {
        let n = self.manifest.partitions.len();
        let width = threads.unwrap_or(n).max(1);
        let mut out = Vec::with_capacity(n);
        for wave in (0..n).collect::<Vec<_>>().chunks(width) {
            let scans = wave.iter().map(|&i| Ok((i, self.scan_partition(i)?))).collect::<Result<Vec<_>>>()?;
            let results: Vec<Result<T>> = std::thread::scope(|s| {
                let handles: Vec<_> = scans
                    .into_iter()
                    .map(|(i, scan)| {
                        let f = &f;
                        s.spawn(move || f(i, scan))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("partition scan panicked"))
                    .collect()
            });
            for r in results {
                out.push(r?);
            }
        }
        Ok(out)
    }

    pub fn to_table(&self) -> Result<AssociativeTable> {
        let entries = self.scan()?.collect::<Result<Vec<_>>>()?;
        AssociativeTable::from_entries(self.manifest.schema.clone(), entries)
    }

    fn write_manifest(&mut self) -> Result<()> {
        self.manifest.recount();
        write_manifest_file(&self.dir, &self.manifest)
    }

    /// Replace all partitions with the output of `records`, split at `splits`.
    fn rewrite(&mut self, records: impl Iterator<Item = Result<EncodedRecord>>, splits: Vec<KeyTuple>, metrics: Arc<Metrics>) -> Result<()> {
        let old: Vec<String> = self
            .manifest
            .partitions
            .iter()
            .flat_map(|p| p.runs.iter().map(|r| r.file.clone()))
            .collect();
        let mut w = PartitionedWriter::new(
            &self.dir,
            &self.manifest.schema,
            &splits,
            self.manifest.encoding,
            self.manifest.next_run,
            metrics,
        )?;
        for r in records {
            let (k, v) = r?;
            w.push(&k, &v)?;
        }
        let (partitions, next_run) = w.finish()?;
        self.manifest.partitions = partitions;
        self.manifest.splits = splits;
        self.manifest.next_run = next_run;
        self.manifest.version += 1;
        self.write_manifest()?;
        for f in old {
            let _ = fs::remove_file(self.dir.join(f));
        }
        Ok(())
    }

    /// Pick split keys at equal record counts and repartition.
    pub fn choose_splits(&mut self, target: usize) -> Result<Vec<KeyTuple>> {
        if target == 0 {
            return Err(LaraError::usage("target partition count must be at least 1"));
        }
        let keys: Vec<Vec<u8>> = self
            .raw_scan(0..self.manifest.partitions.len(), None, None)?
            .raw()
            .map(|r| r.map(|(k, _)| k))
            .collect::<Result<_>>()?;
        let n = keys.len();
        let parts = target.min(n.max(1));
        let types = self.manifest.key_types();
        let mut splits = Vec::new();
        for i in 1..parts {
            let k = decode_key(&keys[i * n / parts], &types)?;
            if splits.last() != Some(&k) {
                splits.push(k);
            }
        }
        let records: Vec<EncodedRecord> = self
            .raw_scan(0..self.manifest.partitions.len(), None, None)?
            .raw()
            .collect::<Result<_>>()?;
        self.rewrite(records.into_iter().map(Ok), splits.clone(), Arc::default())?;
        Ok(splits)
    }

    /// Add one more sorted run per partition holding `entries` (keys in path
    /// order). Keys may repeat keys already stored; scans then require a
    /// compaction first.
    pub fn append_run(&mut self, entries: Vec<(KeyTuple, ValueTuple)>) -> Result<()> {
        let mut sorter = ExternalSorter::new(&self.manifest.schema, None, SortConfig::default(), Arc::default());
        for (k, v) in entries {
            sorter.push(&k, v)?;
        }
        let sorted: Vec<EncodedRecord> = sorter.finish()?.collect::<Result<_>>()?;
        let mut w = PartitionedWriter::new(
            &self.dir,
            &self.manifest.schema,
            &self.manifest.splits,
            self.manifest.encoding,
            self.manifest.next_run,
            Arc::default(),
        )?;
        for (k, v) in &sorted {
            w.push(k, v)?;
        }
        let (parts, next_run) = w.finish()?;
        for (p, new) in self.manifest.partitions.iter_mut().zip(parts) {
            p.runs.extend(new.runs);
        }
        self.manifest.next_run = next_run;
        self.manifest.version += 1;
        self.write_manifest()
    }

    /// Merge every partition's runs into one, folding equal keys with ⊕.
    pub fn compact_with_agg(&mut self, plus: &UdfList<PlusFn>) -> Result<()> {
        let c = Combiner::new(&self.manifest.schema, plus)?;
        if !c.associative() {
            return Err(LaraError::plan(
                "compaction needs an associative ⊕ to combine partial sums across runs",
            ));
        }
        let reapply_safe = c.fns.iter().all(|f| f.idempotent);
        let c = Arc::new(c);
        let mut records: Vec<EncodedRecord> = Vec::new();
        for i in 0..self.manifest.partitions.len() {
            for r in self.partition_source(i, None, Some(c.clone()))? {
                records.push(r?);
            }
        }
        let splits = self.manifest.splits.clone();
        self.manifest.reapply_safe = reapply_safe;
        self.rewrite(records.into_iter().map(Ok), splits, Arc::default())
    }

    pub fn set_view(&mut self, view: Option<serde_json::Value>) -> Result<()> {
        self.manifest.view = view;
        write_manifest_file(&self.dir, &self.manifest)
    }
}

fn write_manifest_file(dir: &Path, m: &Manifest) -> Result<()> {
    let tmp = dir.join(format!("{MANIFEST}.tmp"));
    fs::write(&tmp, serde_json::to_string_pretty(m)?)?;
    fs::rename(&tmp, dir.join(MANIFEST))?;
    Ok(())
}

/// Ordered decoded records of a store.
pub struct StoreScan {
    parts: std::vec::IntoIter<MergeIter>,
    current: Option<MergeIter>,
    hi: Option<Vec<u8>>,
    key_types: Vec<ScalarType>,
    metrics: Option<Arc<Metrics>>,
    done: bool,
}

impl StoreScan {
    fn empty(store: &SortedTableStore) -> StoreScan {
        StoreScan {
            parts: Vec::new().into_iter(),
            current: None,
            hi: None,
            key_types: store.manifest.key_types(),
            metrics: None,
            done: true,
        }
    }

    pub fn with_metrics(mut self, m: Arc<Metrics>) -> StoreScan {
        self.metrics = Some(m);
        self
    }

    fn next_raw(&mut self) -> Option<Result<EncodedRecord>> {
        if self.done {
            return None;
        }
        loop {
            if self.current.is_none() {
                match self.parts.next() {
                    Some(p) => self.current = Some(p),
                    None => {
                        self.done = true;
                        return None;
                    }
                }
            }
            match self.current.as_mut().unwrap().next() {
                None => self.current = None,
                Some(Err(e)) => {
                    self.done = true;
                    return Some(Err(e));
                }
                Some(Ok((k, v))) => {
                    if let Some(h) = &self.hi {
                        if k.as_slice() > h.as_slice() && !k.starts_with(h) {
                            self.done = true;
                            return None;
                        }
                    }
                    if let Some(m) = &self.metrics {
                        Metrics::add(&m.records_scanned, 1);
                    }
                    return Some(Ok((k, v)));
                }
            }
        }
    }

    /// Records with their encoded keys.
    pub fn raw(self) -> RawScan {
        RawScan(self)
    }
}

pub struct RawScan(StoreScan);

impl Iterator for RawScan {
    type Item = Result<EncodedRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        self.0.next_raw()
    }
}

impl Iterator for StoreScan {
    type Item = Result<(KeyTuple, ValueTuple)>;

    fn next(&mut self) -> Option<Self::Item> {
        let r = self.next_raw()?;
        Some(r.and_then(|(k, v)| Ok((decode_key(&k, &self.key_types)?, v))))
    }
}

/// Directory of tables, one subdirectory each.
#[derive(Clone, Debug)]
pub struct Catalog {
    root: PathBuf,
}

impl Catalog {
    pub fn open(root: impl Into<PathBuf>) -> Result<Catalog> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Catalog { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn table_dir(&self, name: &str) -> PathBuf {
        self.root.join(sanitize(name))
    }

    pub fn exists(&self, name: &str) -> bool {
        self.table_dir(name).join(MANIFEST).is_file()
    }

    pub fn list(&self) -> Result<Vec<String>> {
        let mut out = Vec::new();
        for e in fs::read_dir(&self.root)? {
            let e = e?;
            let name = e.file_name().to_string_lossy().into_owned();
            if name.starts_with('.') || !e.path().join(MANIFEST).is_file() {
                continue;
            }
            out.push(SortedTableStore::open(&e.path())?.manifest.name.clone());
        }
        out.sort();
        Ok(out)
    }

    pub fn store(&self, name: &str) -> Result<SortedTableStore> {
        if !self.exists(name) {
            return Err(LaraError::UnknownTable(name.to_string()));
        }
        SortedTableStore::open(&self.table_dir(name))
    }

    pub fn drop_table(&self, name: &str) -> Result<()> {
        let dir = self.table_dir(name);
        if dir.exists() {
            fs::remove_dir_all(dir)?;
        }
        Ok(())
    }

    /// Sort arbitrary records (keys in `schema` key order) into a new store
    /// under access path `path`.
    pub fn sort_write<I>(&self, name: &str, schema: &Schema, path: &[String], rows: I, opts: &WriteOptions) -> Result<SortedTableStore>
    where
        I: IntoIterator<Item = (KeyTuple, ValueTuple)>,
    {
        let target = schema.with_key_order(path)?;
        let perm = schema.key_permutation(path)?;
        let metrics = opts.metrics.clone().unwrap_or_default();
        let combiner = match &opts.combiner {
            Some(p) => Some(Arc::new(Combiner::new(&target, p)?)),
            None => None,
        };
        let mut sorter = ExternalSorter::new(
            &target,
            combiner,
            SortConfig {
                run_rows: opts.run_rows.unwrap_or(crate::storage::sort::DEFAULT_RUN_ROWS),
                encoding: opts.encoding,
            },
            metrics.clone(),
        );
        let val_types: Vec<ScalarType> = target.values.iter().map(|v| v.ty).collect();
        for (k, v) in rows {
            if k.len() != perm.len() || v.len() != val_types.len() {
                return Err(LaraError::usage(format!("record arity does not match {schema}")));
            }
            let key: Vec<Value> = perm.iter().map(|&i| k[i].clone()).collect();
            let key = key
                .into_iter()
                .zip(&target.keys)
                .map(|(x, a)| a.ty.coerce(x).map_err(|e| LaraError::usage(e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            let v = v
                .into_iter()
                .zip(&val_types)
                .map(|(x, t)| t.coerce(x).map_err(|e| LaraError::usage(e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            sorter.push(&key, v)?;
        }
        let sorted = sorter.finish()?;
        self.write_sorted(name, &target, sorted, opts)
    }

    /// Named-row form of `sort_write`.
    pub fn sort_write_rows(&self, name: &str, schema: &Schema, path: &[String], rows: Vec<TupleRow>, opts: &WriteOptions) -> Result<SortedTableStore> {
        let t = AssociativeTable::from_rows(schema.clone(), rows)?;
        self.sort_write(name, schema, path, t.entries(), opts)
    }

    /// Write records that already arrive in increasing encoded-key order.
    /// `schema` lists keys in path order.
    pub fn write_sorted<I>(&self, name: &str, schema: &Schema, records: I, opts: &WriteOptions) -> Result<SortedTableStore>
    where
        I: IntoIterator<Item = Result<EncodedRecord>>,
    {
        let metrics = opts.metrics.clone().unwrap_or_default();
        let version = match self.store(name) {
            Ok(s) => s.manifest.version + 1,
            Err(_) => 1,
        };
        let tmp = self.root.join(format!(
            ".tmp-{}-{}-{}",
            sanitize(name),
            std::process::id(),
            TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        fs::create_dir_all(&tmp)?;
        let guard = TmpDirGuard(Some(tmp.clone()));
        let defaults = schema.defaults();
        let mut w = PartitionedWriter::new(&tmp, schema, &opts.splits, opts.encoding, 0, metrics)?;
        for r in records {
            let (k, v) = r?;
            if v == defaults {
                continue;
            }
            w.push(&k, &v)?;
        }
        let (partitions, next_run) = w.finish()?;
        let mut manifest = Manifest {
            name: name.to_string(),
            schema: schema.clone(),
            path: schema.key_names(),
            encoding: opts.encoding,
            partitions,
            splits: opts.splits.clone(),
            stats: Stats::default(),
            version,
            next_run,
            reapply_safe: false,
            view: None,
        };
        manifest.recount();
        write_manifest_file(&tmp, &manifest)?;
        let dest = self.table_dir(name);
        if dest.exists() {
            let old = self.root.join(format!(
                ".old-{}-{}",
                sanitize(name),
                TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
            ));
            fs::rename(&dest, &old)?;
            fs::rename(&tmp, &dest)?;
            let _ = fs::remove_dir_all(old);
        } else {
            fs::rename(&tmp, &dest)?;
        }
        guard.disarm();
        SortedTableStore::open(&dest)
    }

    /// Materialize an in-memory table.
    pub fn write_table(&self, name: &str, table: &AssociativeTable, path: &[String], opts: &WriteOptions) -> Result<SortedTableStore> {
        self.sort_write(name, table.schema(), path, table.entries(), opts)
    }
}

/// Removes a half-written table directory unless disarmed.
struct TmpDirGuard(Option<PathBuf>);

impl TmpDirGuard {
    fn disarm(mut self) {
        self.0 = None;
    }
}

impl Drop for TmpDirGuard {
    fn drop(&mut self) {
        if let Some(p) = self.0.take() {
            let _ = fs::remove_dir_all(p);
        }
    }
}
