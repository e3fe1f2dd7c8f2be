#![allow(dead_code)]

use std::collections::BTreeMap;

use laradb_core::storage::store::{Catalog, WriteOptions};
use laradb_core::{AssociativeTable, ScalarType, Schema, Value};

pub const SENSOR: &str = include_str!("../../../bench/plans/sensor.lara");

pub fn sensor_schema() -> Schema {
    Schema::build(
        &[("t", ScalarType::Int64), ("c", ScalarType::Utf8)],
        &[("v", ScalarType::Float64, Value::Null)],
    )
}

pub fn sensors() -> BTreeMap<String, Schema> {
    let s = sensor_schema();
    [("s1".to_string(), s.clone()), ("s2".to_string(), s)].into_iter().collect()
}

pub fn readings(rows: &[(i64, &str, f64)]) -> AssociativeTable {
    let entries = rows
        .iter()
        .map(|&(t, c, v)| (vec![Value::Int(t), Value::Str(c.into())], vec![Value::Float(v)]))
        .collect();
    AssociativeTable::from_entries(sensor_schema(), entries).unwrap()
}

/// s1 is the six-row table of measurements; s2 is chosen so that the
/// binned difference gives the residual table X.
pub fn fig_data() -> BTreeMap<String, AssociativeTable> {
    let mut data = BTreeMap::new();
    data.insert(
        "s1".to_string(),
        readings(&[(440, "hum", 38.6), (466, "temp", 55.2), (466, "hum", 40.1), (492, "temp", 56.3), (492, "hum", 35.0), (528, "temp", 56.5)]),
    );
    data.insert(
        "s2".to_string(),
        readings(&[(470, "temp", 58.3), (461, "hum", 38.5), (515, "temp", 60.4), (530, "hum", 35.8), (900, "temp", 1.0)]),
    );
    data
}

pub fn write_all(cat: &Catalog, data: &BTreeMap<String, AssociativeTable>) {
    for (name, t) in data {
        cat.write_table(name, t, &t.schema().key_names(), &WriteOptions::default()).unwrap();
    }
}
