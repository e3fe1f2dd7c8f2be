//! Sorted-map persistence: key encoding, run files, external sort, stores
//! and the catalog.

pub mod encoding;
pub mod run;
pub mod sort;
pub mod store;

pub use encoding::{decode_key, encode_key, encode_key_tuple, ValueEncoding};
pub use sort::{Combiner, ExternalSorter, MergeIter, SortConfig};
pub use store::{Catalog, Manifest, PartitionMeta, SortedTableStore, StoreScan, WriteOptions};
