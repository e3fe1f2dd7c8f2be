//! Runtime counters shared by storage and the physical operators.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

#[derive(Debug, Default)]
pub struct Metrics {
    pub rows_in: AtomicU64,
    pub rows_out: AtomicU64,
    /// Records written to any sorted run, including sort spills.
    pub tuples_materialized: AtomicU64,
    pub bytes_sorted: AtomicU64,
    pub sort_runs: AtomicU64,
    /// ⊗ applications performed by merge joins.
    pub partial_products: AtomicU64,
    pub records_scanned: AtomicU64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MetricsSnapshot {
    pub rows_in: u64,
    pub rows_out: u64,
    pub tuples_materialized: u64,
    pub bytes_sorted: u64,
    pub sort_runs: u64,
    pub partial_products: u64,
    pub records_scanned: u64,
}

impl Metrics {
    pub fn add(counter: &AtomicU64, n: u64) {
        counter.fetch_add(n, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> MetricsSnapshot {
        let g = |c: &AtomicU64| c.load(Ordering::Relaxed);
        MetricsSnapshot {
            rows_in: g(&self.rows_in),
            rows_out: g(&self.rows_out),
            tuples_materialized: g(&self.tuples_materialized),
            bytes_sorted: g(&self.bytes_sorted),
            sort_runs: g(&self.sort_runs),
            partial_products: g(&self.partial_products),
            records_scanned: g(&self.records_scanned),
        }
    }
}

impl MetricsSnapshot {
    pub fn since(&self, earlier: &MetricsSnapshot) -> MetricsSnapshot {
        MetricsSnapshot {
            rows_in: self.rows_in - earlier.rows_in,
            rows_out: self.rows_out - earlier.rows_out,
            tuples_materialized: self.tuples_materialized - earlier.tuples_materialized,
            bytes_sorted: self.bytes_sorted - earlier.bytes_sorted,
            sort_runs: self.sort_runs - earlier.sort_runs,
            partial_products: self.partial_products - earlier.partial_products,
            records_scanned: self.records_scanned - earlier.records_scanned,
        }
    }

    pub fn fields(&self) -> [(&'static str, u64); 7] {
        [
            ("rows_in", self.rows_in),
            ("rows_out", self.rows_out),
            ("tuples_materialized", self.tuples_materialized),
            ("bytes_sorted", self.bytes_sorted),
            ("sort_runs", self.sort_runs),
            ("partial_products", self.partial_products),
            ("records_scanned", self.records_scanned),
        ]
    }
}

impl fmt::Display for MetricsSnapshot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, v) in self.fields() {
            writeln!(f, "{name:<20} {v:>12}")?;
        }
        Ok(())
    }
}
