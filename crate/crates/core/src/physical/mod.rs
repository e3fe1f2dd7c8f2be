//! Streaming merge-scan operators over sorted record streams.

mod buffer;
mod ops;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::error::{LaraError, Result};
use crate::metrics::Metrics;
use crate::schema::Schema;
use crate::storage::store::Catalog;
use crate::table::{AssociativeTable, KeyTuple, ValueTuple};

pub use ops::{
    ext_map_stream, ext_schema, load_range, merge_agg, merge_agg_schema, merge_join, merge_join_schema,
    merge_union, merge_union_schema, rename_stream, scan_store, sort_agg, sort_agg_schema, sort_stream, spool_stream, store_stream,
    JoinOptions, MaterializeOptions,
};

/// One record of a stream; `key` follows the stream's access path.
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub key: KeyTuple,
    pub vals: ValueTuple,
}

pub type RecordIter = Box<dyn Iterator<Item = Result<Record>> + Send>;

/// An ordered, pull-based stream. `schema` lists keys in path order.
pub struct RowStream {
    pub schema: Schema,
    iter: RecordIter,
}

impl RowStream {
    /// Wraps `iter` in a check that keys strictly increase.
    pub fn new(schema: Schema, iter: RecordIter) -> RowStream {
        let label = schema.key_names();
        let checked = OrderCheck {
            inner: iter,
            last: None,
            label,
            failed: false,
        };
        RowStream {
            schema,
            iter: Box::new(checked),
        }
    }

    pub fn from_table(table: &AssociativeTable, path: &[String]) -> Result<RowStream> {
        let t = table.with_key_order(path)?;
        let recs: Vec<Result<Record>> = t
            .entries()
            .into_iter()
            .map(|(key, vals)| Ok(Record { key, vals }))
            .collect();
        Ok(RowStream::new(t.schema().clone(), Box::new(recs.into_iter())))
    }

    pub fn path(&self) -> Vec<String> {
        self.schema.key_names()
    }

    pub fn into_iter(self) -> RecordIter {
        self.iter
    }

    pub fn collect_table(self) -> Result<AssociativeTable> {
        let schema = self.schema.clone();
        let entries = self
            .iter
            .map(|r| r.map(|r| (r.key, r.vals)))
            .collect::<Result<Vec<_>>>()?;
        AssociativeTable::from_entries(schema, entries)
    }
}

impl Iterator for RowStream {
    type Item = Result<Record>;

    fn next(&mut self) -> Option<Self::Item> {
        self.iter.next()
    }
}

struct OrderCheck {
    inner: RecordIter,
    last: Option<KeyTuple>,
    label: Vec<String>,
    failed: bool,
}

impl Iterator for OrderCheck {
    type Item = Result<Record>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let r = self.inner.next()?;
        if let Ok(rec) = &r {
            if let Some(l) = &self.last {
                if rec.key <= *l {
                    self.failed = true;
                    return Some(Err(LaraError::OrderViolation(format!(
                        "key {:?} follows {:?} on path {:?}",
                        rec.key, l, self.label
                    ))));
                }
            }
            self.last = Some(rec.key.clone());
        } else {
            self.failed = true;
        }
        Some(r)
    }
}

pub const DEFAULT_JOIN_BUDGET: usize = 64 * 1024;

/// Shared execution settings: catalogs, counters and law checking.
#[derive(Clone)]
pub struct ExecContext {
    pub catalog: Catalog,
    /// Where Sort and SortAgg materialize their output.
    pub scratch: Catalog,
    _scratch_dir: Option<Arc<tempfile::TempDir>>,
    pub metrics: Arc<Metrics>,
    /// Spot-check UDF laws on live data.
    pub check_laws: bool,
    pub join_budget: usize,
    pub run_rows: Option<usize>,
    counter: Arc<AtomicU64>,
}

impl ExecContext {
    pub fn new(catalog: Catalog) -> Result<ExecContext> {
        let dir = tempfile::Builder::new().prefix("laradb-scratch").tempdir()?;
        let scratch = Catalog::open(dir.path())?;
        Ok(ExecContext {
            catalog,
            scratch,
            _scratch_dir: Some(Arc::new(dir)),
            metrics: Arc::default(),
            check_laws: true,
            join_budget: DEFAULT_JOIN_BUDGET,
            run_rows: None,
            counter: Arc::default(),
        })
    }

    pub fn scratch_name(&self, label: &str) -> String {
        format!("{label}-{}", self.counter.fetch_add(1, Ordering::Relaxed))
    }
}

/// How often operators spot-check UDF laws on real data.
pub(crate) const SPOT_CHECK_EVERY: u64 = 16;
