//! Data generators, the sensor and matmul workloads, plan fuzzing, and the
//! `laradb` command line.

pub mod cli;
pub mod fuzz;
pub mod gen;
pub mod workload;

/// The sensor quality-control plan.
pub const SENSOR_PLAN: &str = include_str!("../plans/sensor.lara");
