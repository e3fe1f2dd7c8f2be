//! The two workloads: the sensor quality-control plan and outer-product
//! matrix multiplication, with counters for rule on/off comparisons.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use anyhow::{ensure, Context, Result};
use laradb_core::frontend::matmul_outer_plan_with;
use laradb_core::metrics::MetricsSnapshot;
use laradb_core::physical::ExecContext;
use laradb_core::planner::{execute, explain, lower, optimize, parse_plan, read_outputs, OptimizeReport, Rule, RuleOptions};
use laradb_core::storage::store::{Catalog, WriteOptions};
use laradb_core::{AssociativeTable, Value};

use crate::gen::{degrees, gen_rmat, RmatGenConfig};
use crate::SENSOR_PLAN;

/// Wall time and records of one group of plan lines.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Segment {
    pub name: &'static str,
    pub time: Duration,
    pub records: u64,
}

#[derive(Debug)]
pub struct SensorReport {
    pub rules: Vec<Rule>,
    pub optimize: OptimizeReport,
    pub explain: String,
    pub elapsed: Duration,
    pub metrics: MetricsSnapshot,
    pub segments: Vec<Segment>,
    pub outputs: BTreeMap<String, AssociativeTable>,
}

const SEGMENTS: [&str; 3] = ["scan->X", "X->U", "U->C"];

fn segment_of(label: &str) -> usize {
    let line: f64 = label.parse().unwrap_or(0.0);
    if line <= 7.0 {
        0
    } else if line <= 14.0 {
        1
    } else {
        2
    }
}

/// Run the sensor plan over the stored `s1` and `s2` with `rules` enabled.
pub fn run_sensor_pipeline(ctx: &ExecContext, rules: &[Rule]) -> Result<SensorReport> {
    run_plan_text(SENSOR_PLAN, ctx, rules)
}

/// Run any plan text, grouping stage timings by the sensor plan's segments.
pub fn run_plan_text(text: &str, ctx: &ExecContext, rules: &[Rule]) -> Result<SensorReport> {
    let logical = parse_plan(text, &ctx.catalog)?;
    let mut pp = lower(&logical)?;
    let optimize = optimize(&mut pp, rules, RuleOptions::default());
    let rep = execute(&pp, ctx)?;
    let mut segments: Vec<Segment> = SEGMENTS
        .iter()
        .map(|name| Segment {
            name,
            ..Segment::default()
        })
        .collect();
    for st in &rep.stages {
        let s = &mut segments[segment_of(&st.label)];
        s.time += st.exclusive;
        s.records += st.records;
    }
    Ok(SensorReport {
        rules: rules.to_vec(),
        optimize,
        explain: explain(&pp, None),
        elapsed: rep.elapsed,
        metrics: rep.metrics,
        segments,
        outputs: read_outputs(&pp, ctx)?,
    })
}

#[derive(Clone, Debug)]
pub struct MatmulRow {
    pub scale: u32,
    pub rules: Vec<Rule>,
    pub nnz_a: usize,
    pub nnz_b: usize,
    pub nnz_c: usize,
    /// Σ_j deg_A(j) · deg_B(j) over the shared dimension.
    pub predicted_products: u64,
    pub elapsed: Duration,
    pub metrics: MetricsSnapshot,
    /// None above the oracle scale limit.
    pub correct: Option<bool>,
}

/// Largest scale checked against the in-memory oracle.
pub const ORACLE_MAX_SCALE: u32 = 12;

/// C[i,k] = Σ_j A[j,i] · B[j,k], grouped by j.
pub fn matmul_oracle(a: &AssociativeTable, b: &AssociativeTable) -> BTreeMap<(i64, i64), i64> {
    let group = |t: &AssociativeTable| {
        let mut m: BTreeMap<i64, Vec<(i64, i64)>> = BTreeMap::new();
        for (k, v) in t.iter() {
            if let (Value::Int(j), Value::Int(x), Value::Int(val)) = (&k[0], &k[1], &v[0]) {
                m.entry(*j).or_default().push((*x, *val));
            }
        }
        m
    };
    let (ga, gb) = (group(a), group(b));
    let mut c: BTreeMap<(i64, i64), i64> = BTreeMap::new();
    for (j, row_a) in &ga {
        let Some(row_b) = gb.get(j) else { continue };
        for &(i, x) in row_a {
            for &(k, y) in row_b {
                *c.entry((i, k)).or_insert(0) += x * y;
            }
        }
    }
    c.retain(|_, v| *v != 0);
    c
}

fn as_cells(t: &AssociativeTable) -> BTreeMap<(i64, i64), i64> {
    t.iter()
        .filter_map(|(k, v)| match (&k[0], &k[1], &v[0]) {
            (Value::Int(i), Value::Int(j), Value::Int(x)) => Some(((*i, *j), *x)),
            _ => None,
        })
        .collect()
}

/// Generate A and B at `scale` (unless present) stored with the shared
/// dimension j first.
pub fn ensure_matmul_inputs(catalog: &Catalog, scale: u32, seed: u64) -> Result<(String, String)> {
    let (a, b) = (format!("mA{scale}"), format!("mB{scale}"));
    for (name, col, s) in [(&a, "i", seed), (&b, "k", seed.wrapping_add(1))] {
        if catalog.exists(name) {
            continue;
        }
        let cfg = RmatGenConfig {
            scale,
            seed: s,
            ..RmatGenConfig::default()
        };
        let t = gen_rmat(&cfg, "j", col)?;
        catalog.write_table(name, &t, &["j".to_string(), col.to_string()], &WriteOptions::default())?;
    }
    Ok((a, b))
}

/// Multiply A^T B at each scale with `rules`, checking small scales
/// against the oracle.
pub fn run_matmul_bench(ctx: &ExecContext, scales: &[u32], rules: &[Rule], seed: u64) -> Result<Vec<MatmulRow>> {
    let mut out = Vec::new();
    for &scale in scales {
        let (a, b) = ensure_matmul_inputs(&ctx.catalog, scale, seed)?;
        let c = format!("mC{scale}");
        let pp = matmul_outer_plan_with(&a, &b, &c, rules, &ctx.catalog)?;
        let start = Instant::now();
        let rep = execute(&pp, ctx)?;
        let elapsed = start.elapsed();
        let ta = ctx.catalog.store(&a)?.to_table()?;
        let tb = ctx.catalog.store(&b)?.to_table()?;
        let got = read_outputs(&pp, ctx)?.remove(&c).context("matmul produced no output")?;
        let (da, db) = (degrees(&ta, 0), degrees(&tb, 0));
        let predicted_products = da.iter().map(|(j, x)| x * db.get(j).copied().unwrap_or(0)).sum();
        let correct = (scale <= ORACLE_MAX_SCALE).then(|| as_cells(&got) == matmul_oracle(&ta, &tb));
        out.push(MatmulRow {
            scale,
            rules: rules.to_vec(),
            nnz_a: ta.len(),
            nnz_b: tb.len(),
            nnz_c: got.len(),
            predicted_products,
            elapsed,
            metrics: rep.metrics,
            correct,
        });
    }
    Ok(out)
}

pub fn rule_list(rules: &[Rule]) -> String {
    if rules.is_empty() {
        return "-".into();
    }
    rules.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",")
}

const MATMUL_COLUMNS: [&str; 10] = [
    "scale",
    "rules",
    "nnz_a",
    "nnz_b",
    "nnz_c",
    "predicted_products",
    "partial_products",
    "tuples_materialized",
    "seconds",
    "correct",
];

fn matmul_cells(r: &MatmulRow) -> Vec<String> {
    vec![
        r.scale.to_string(),
        rule_list(&r.rules),
        r.nnz_a.to_string(),
        r.nnz_b.to_string(),
        r.nnz_c.to_string(),
        r.predicted_products.to_string(),
        r.metrics.partial_products.to_string(),
        r.metrics.tuples_materialized.to_string(),
        format!("{:.3}", r.elapsed.as_secs_f64()),
        match r.correct {
            Some(true) => "yes".into(),
            Some(false) => "NO".into(),
            None => "-".into(),
        },
    ]
}

/// Left-aligned columns separated by two spaces.
pub fn aligned(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let mut s = String::new();
    let mut line = |cells: Vec<&str>| {
        let parts: Vec<String> = cells.iter().zip(&width).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(s, "{}", parts.join("  ").trim_end());
    };
    line(header.to_vec());
    for r in rows {
        line(r.iter().map(String::as_str).collect());
    }
    s
}

pub fn tsv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join("\t");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join("\t"));
        s.push('\n');
    }
    s
}

pub fn matmul_table(rows: &[MatmulRow]) -> (String, String) {
    let cells: Vec<Vec<String>> = rows.iter().map(matmul_cells).collect();
    (aligned(&MATMUL_COLUMNS, &cells), tsv(&MATMUL_COLUMNS, &cells))
}

const SENSOR_COLUMNS: [&str; 10] = [
    "rules",
    "seconds",
    "scan->X",
    "X->U",
    "U->C",
    "rows_in",
    "tuples_materialized",
    "bytes_sorted",
    "sort_runs",
    "partial_products",
];

pub fn sensor_table(reports: &[SensorReport]) -> (String, String) {
    let cells: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let mut row = vec![rule_list(&r.rules), format!("{:.4}", r.elapsed.as_secs_f64())];
            row.extend(r.segments.iter().map(|s| format!("{:.4}", s.time.as_secs_f64())));
            let m = &r.metrics;
            row.extend(
                [m.rows_in, m.tuples_materialized, m.bytes_sorted, m.sort_runs, m.partial_products]
                    .iter()
                    .map(u64::to_string),
            );
            row
        })
        .collect();
    (aligned(&SENSOR_COLUMNS, &cells), tsv(&SENSOR_COLUMNS, &cells))
}

/// Check that every report stored the same tables with the same contents.
pub fn same_outputs(reports: &[SensorReport], tol: f64) -> Result<()> {
    let Some(first) = reports.first() else { return Ok(()) };
    for r in &reports[1..] {
        ensure!(
            first.outputs.keys().eq(r.outputs.keys()),
            "rule sets {} and {} store different tables",
            rule_list(&first.rules),
            rule_list(&r.rules)
        );
        for (name, t) in &first.outputs {
            if let Some(d) = t.diff(&r.outputs[name], tol) {
                anyhow::bail!("{name} differs between rules {} and {}: {d}", rule_list(&first.rules), rule_list(&r.rules));
            }
        }
    }
    Ok(())
}
