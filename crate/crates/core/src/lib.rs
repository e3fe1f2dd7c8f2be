//! An embedded query kernel over associative tables.

pub mod error;
pub mod frontend;
pub mod metrics;
pub mod physical;
pub mod planner;
pub mod schema;
pub mod storage;
pub mod table;
pub mod udf;
pub mod value;

pub use error::{LaraError, Result};
pub use schema::{AttributeKind, AttributeSchema, Schema, TupleRow};
pub use value::{ScalarType, Value};
pub use table::{oracle_agg, oracle_ext, oracle_join, oracle_map, oracle_rename, oracle_union, AssociativeTable};
