//! Seeded data generators: two-sensor environmental readings and R-MAT
//! power-law matrices.

use std::collections::BTreeMap;

use anyhow::{ensure, Result};
use laradb_core::storage::store::{Catalog, WriteOptions};
use laradb_core::{AssociativeTable, ScalarType, Schema, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Three days, in seconds.
pub const DEFAULT_SEGMENT: i64 = 3 * 24 * 3600;

#[derive(Clone, Debug)]
pub struct ClassSpec {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    /// Amplitude of the slow daily swing shared by every sensor.
    pub swing: f64,
}

#[derive(Clone, Debug)]
pub struct SensorGenConfig {
    pub sensors: usize,
    pub start: i64,
    pub span: i64,
    pub mean_gap: f64,
    /// Sensor k samples every `mean_gap * (1 + rate_spread * k)` seconds on
    /// average.
    pub rate_spread: f64,
    pub classes: Vec<ClassSpec>,
    /// Per-sensor, per-class calibration offset scale.
    pub bias: f64,
    pub drop_prob: f64,
    /// Partition length along t.
    pub segment: i64,
    pub seed: u64,
}

impl Default for SensorGenConfig {
    fn default() -> Self {
        SensorGenConfig {
            sensors: 2,
            start: 0,
            span: 3600,
            mean_gap: 26.0,
            rate_spread: 0.0,
            classes: vec![
                ClassSpec {
                    name: "temp".into(),
                    mean: 56.0,
                    sd: 0.8,
                    swing: 4.0,
                },
                ClassSpec {
                    name: "hum".into(),
                    mean: 38.0,
                    sd: 1.5,
                    swing: 6.0,
                },
            ],
            bias: 2.0,
            drop_prob: 0.05,
            segment: DEFAULT_SEGMENT,
            seed: 1,
        }
    }
}

pub fn sensor_schema() -> Schema {
    Schema::build(
        &[("t", ScalarType::Int64), ("c", ScalarType::Utf8)],
        &[("v", ScalarType::Float64, Value::Null)],
    )
}

/// Sample times for one sensor: gaps uniform on [gap/2, 3gap/2], rounded
/// to whole seconds, starting at a random phase.
fn sample_times(rng: &mut ChaCha8Rng, cfg: &SensorGenConfig, gap: f64) -> Vec<i64> {
    let mut out = Vec::new();
    let end = cfg.start + cfg.span;
    let mut t = cfg.start as f64 + rng.random_range(0.0..gap);
    while (t.round() as i64) < end {
        let ts = t.round() as i64;
        if out.last() != Some(&ts) {
            out.push(ts);
        }
        t += rng.random_range(0.5 * gap..1.5 * gap);
    }
    out
}

/// Readings for every sensor, in memory. Sensor k is `s{k+1}`.
pub fn sensor_tables(cfg: &SensorGenConfig) -> Result<BTreeMap<String, AssociativeTable>> {
    ensure!(cfg.mean_gap >= 1.0, "mean gap must be at least one second");
    ensure!((0.0..=1.0).contains(&cfg.drop_prob), "drop probability must lie in [0, 1]");
    let mut out = BTreeMap::new();
    for k in 0..cfg.sensors {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9e37_79b9).wrapping_add(k as u64));
        let gap = cfg.mean_gap * (1.0 + cfg.rate_spread * k as f64);
        let times = sample_times(&mut rng, cfg, gap);
        let biases: Vec<f64> = cfg.classes.iter().map(|_| rng.random_range(-cfg.bias..=cfg.bias)).collect();
        let mut entries = Vec::new();
        for &t in &times {
            let phase = 2.0 * std::f64::consts::PI * (t - cfg.start) as f64 / 86_400.0;
            for (c, b) in cfg.classes.iter().zip(&biases) {
                if rng.random_bool(cfg.drop_prob) {
                    continue;
                }
                let noise = Normal::new(0.0, c.sd)?.sample(&mut rng);
                let v = c.mean + c.swing * phase.sin() + b + noise;
                // one decimal, as the sensors report
                let v = (v * 10.0).round() / 10.0;
                entries.push((vec![Value::Int(t), Value::Str(c.name.clone())], vec![Value::Float(v)]));
            }
        }
        out.insert(format!("s{}", k + 1), AssociativeTable::from_entries(sensor_schema(), entries)?);
    }
    Ok(out)
}

/// Split points every `segment` seconds after `start`.
pub fn segment_splits(cfg: &SensorGenConfig) -> Vec<Vec<Value>> {
    let mut out = Vec::new();
    let mut t = cfg.start + cfg.segment;
    while cfg.segment > 0 && t < cfg.start + cfg.span {
        out.push(vec![Value::Int(t), Value::Str(String::new())]);
        t += cfg.segment;
    }
    out
}

/// Generate and store `s1`, `s2`, ... with path [t, c].
pub fn gen_sensor_data(cfg: &SensorGenConfig, catalog: &Catalog) -> Result<Vec<String>> {
    let tables = sensor_tables(cfg)?;
    let opts = WriteOptions {
        splits: segment_splits(cfg),
        ..WriteOptions::default()
    };
    for (name, t) in &tables {
        catalog.write_table(name, t, &["t".to_string(), "c".to_string()], &opts)?;
    }
    Ok(tables.into_keys().collect())
}

#[derive(Clone, Debug)]
pub struct RmatGenConfig {
    pub scale: u32,
    pub edges_per_row: usize,
    /// Quadrant probabilities; the fourth is 1 - a - b - c.
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Values are drawn uniformly from 1..=max_value.
    pub max_value: i64,
    pub seed: u64,
}

impl Default for RmatGenConfig {
    fn default() -> Self {
        RmatGenConfig {
            scale: 10,
            edges_per_row: 16,
            a: 0.57,
            b: 0.19,
            c: 0.19,
            max_value: 9,
            seed: 1,
        }
    }
}

/// Matrix schema with row key `row`, column key `col`, value `v` (default 0).
pub fn matrix_schema(row: &str, col: &str) -> Schema {
    Schema::build(
        &[(row, ScalarType::Int64), (col, ScalarType::Int64)],
        &[("v", ScalarType::Int64, Value::Int(0))],
    )
}

/// Sparse 2^scale square matrix with exactly `edges_per_row * 2^scale`
/// distinct nonzeros, placed by recursive quadrant choice.
pub fn gen_rmat(cfg: &RmatGenConfig, row: &str, col: &str) -> Result<AssociativeTable> {
    ensure!(cfg.scale >= 4, "R-MAT scale must be at least 4");
    ensure!(cfg.scale <= 30, "R-MAT scale above 30 is not supported");
    let d = 1.0 - cfg.a - cfg.b - cfg.c;
    ensure!(cfg.a > 0.0 && cfg.b >= 0.0 && cfg.c >= 0.0 && d >= 0.0, "quadrant probabilities must sum to at most 1");
    let n = 1u64 << cfg.scale;
    let target = (cfg.edges_per_row as u64 * n).min(n * n);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut cells: BTreeMap<(u64, u64), i64> = BTreeMap::new();
    while (cells.len() as u64) < target {
        let (mut i, mut j) = (0u64, 0u64);
        for level in (0..cfg.scale).rev() {
            let r: f64 = rng.random();
            let (di, dj) = if r < cfg.a {
                (0, 0)
            } else if r < cfg.a + cfg.b {
                (0, 1)
            } else if r < cfg.a + cfg.b + cfg.c {
                (1, 0)
            } else {
                (1, 1)
            };
            i |= di << level;
            j |= dj << level;
        }
        let v = rng.random_range(1..=cfg.max_value.max(1));
        cells.entry((i, j)).or_insert(v);
    }
    let entries = cells
        .into_iter()
        .map(|((i, j), v)| (vec![Value::Int(i as i64), Value::Int(j as i64)], vec![Value::Int(v)]))
        .collect();
    Ok(AssociativeTable::from_entries(matrix_schema(row, col), entries)?)
}

/// Nonzeros per value of the key at `pos`.
pub fn degrees(t: &AssociativeTable, pos: usize) -> BTreeMap<i64, u64> {
    let mut out = BTreeMap::new();
    for (k, _) in t.iter() {
        if let Value::Int(x) = k[pos] {
            *out.entry(x).or_insert(0) += 1;
        }
    }
    out
}
