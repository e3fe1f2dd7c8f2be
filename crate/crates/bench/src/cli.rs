//! The `laradb` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use laradb_core::physical::ExecContext;
use laradb_core::planner::{explain, lower, optimize, parse_plan, LogicalOp, Rule, RuleOptions, PRIORITY};
use laradb_core::storage::store::{Catalog, WriteOptions};
use laradb_core::udf::{verify_ext, verify_plus, verify_times, VerifyConfig};
use laradb_core::{AssociativeTable, LaraError, ScalarType, Schema, Value};

use crate::gen::{gen_sensor_data, SensorGenConfig};
use crate::workload::{matmul_table, run_matmul_bench, run_plan_text, same_outputs, sensor_table, SensorReport};

#[derive(Parser, Debug)]
#[command(name = "laradb", version, about = "Associative-table query engine")]
pub struct Cli {
    /// Catalog directory.
    #[arg(long, env = "LARADB_DATA_DIR", default_value = "laradb-data", global = true)]
    pub data_dir: PathBuf,
    /// Partitions scanned at once (default: all of them).
    #[arg(long, global = true)]
    pub parallelism: Option<usize>,
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Load a CSV file into a table.
    Ingest(IngestArgs),
    /// Optimize and execute a plan file.
    Run(RunArgs),
    /// Print the physical plan with access paths.
    Explain(ExplainArgs),
    #[command(subcommand)]
    Bench(BenchCmd),
    #[command(subcommand)]
    Catalog(CatalogCmd),
    /// Sample-check the algebraic laws of every UDF in a plan.
    VerifyUdfs(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    pub csv: PathBuf,
    #[arg(long)]
    pub table: String,
    /// `k1:type, k2:type -> v1:type[=default], ...`; defaults are null
    /// unless given. Without it, header hints and --keys are used.
    #[arg(long)]
    pub schema: Option<String>,
    /// Key columns when the schema comes from header hints.
    #[arg(long, value_delimiter = ',')]
    pub keys: Vec<String>,
    /// Access path; defaults to the key order.
    #[arg(long, value_delimiter = ',')]
    pub path: Vec<String>,
    /// Target partition count.
    #[arg(long, default_value_t = 1)]
    pub partitions: usize,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    pub plan: PathBuf,
    /// Comma-separated rules (A,F,M,Z,R,P,S,D,E or `all`).
    #[arg(long, default_value = "all")]
    pub rules: String,
    #[arg(long)]
    pub no_opt: bool,
    /// Also print the optimized plan.
    #[arg(long)]
    pub explain: bool,
}

#[derive(Args, Debug)]
pub struct ExplainArgs {
    pub plan: PathBuf,
    /// Optimize with these rules first.
    #[arg(long)]
    pub rules: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum BenchCmd {
    /// Generate sensor data and run the sensor plan under several rule sets.
    Sensor {
        #[arg(long, default_value_t = 86_400)]
        span: i64,
        #[arg(long, default_value_t = 26.0)]
        gap: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Regenerate s1 and s2 even if present.
        #[arg(long)]
        regen: bool,
        /// Rule sets to compare, separated by `;` (`none` for no rules).
        #[arg(long, default_value = "none;F;M;S;A;D;all")]
        sets: String,
        /// TSV output; defaults to bench_sensor.tsv in the data directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Multiply power-law matrices at the given scales, with and without rule A.
    Matmul {
        #[arg(long, value_delimiter = ',', default_value = "8,10")]
        scales: Vec<u32>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum CatalogCmd {
    Ls,
    Describe { table: String },
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    pub plan: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
}

/// Parse `argv` and run; returns the process exit status.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            match e.downcast_ref::<LaraError>() {
                Some(LaraError::Usage(_)) => 1,
                _ => 2,
            }
        }
    }
}

fn context(cli: &Cli) -> Result<ExecContext> {
    fs::create_dir_all(&cli.data_dir).with_context(|| format!("creating {}", cli.data_dir.display()))?;
    Ok(ExecContext::new(Catalog::open(&cli.data_dir)?)?)
}

fn rules_arg(s: &str) -> Result<Vec<Rule>> {
    Ok(Rule::parse_list(s)?)
}

fn read_plan(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.cmd {
        Command::Ingest(a) => ingest(cli, a, out),
        Command::Run(a) => {
            let rules = if a.no_opt { vec![] } else { rules_arg(&a.rules)? };
            let ctx = context(cli)?;
            let rep = run_plan_text(&read_plan(&a.plan)?, &ctx, &rules)?;
            print_run(&rep, a.explain, out)
        }
        Command::Explain(a) => {
            let ctx = context(cli)?;
            let mut pp = lower(&parse_plan(&read_plan(&a.plan)?, &ctx.catalog)?)?;
            if let Some(r) = &a.rules {
                let rep = optimize(&mut pp, &rules_arg(r)?, RuleOptions::default());
                write!(out, "{rep}")?;
            }
            write!(out, "{}", explain(&pp, None))?;
            Ok(())
        }
        Command::Bench(b) => bench(cli, b, out),
        Command::Catalog(CatalogCmd::Ls) => {
            let ctx = context(cli)?;
            for name in ctx.catalog.list()? {
                let st = ctx.catalog.store(&name)?;
                writeln!(out, "{name}\t{}\t{} records", st.schema(), st.records())?;
            }
            Ok(())
        }
        Command::Catalog(CatalogCmd::Describe { table }) => describe(cli, table, out),
        Command::VerifyUdfs(a) => verify(cli, a, out),
    }
}

fn print_run(rep: &SensorReport, show_plan: bool, out: &mut dyn Write) -> Result<()> {
    write!(out, "{}", rep.optimize)?;
    if show_plan {
        write!(out, "{}", rep.explain)?;
    }
    for (name, t) in &rep.outputs {
        writeln!(out, "{name}: {} rows", t.len())?;
        write!(out, "{t}")?;
    }
    writeln!(out, "elapsed {:.4}s", rep.elapsed.as_secs_f64())?;
    for (k, v) in rep.metrics.fields() {
        writeln!(out, "  {k:<20} {v}")?;
    }
    Ok(())
}

/// `name:type` or `name:type=default`.
fn parse_attr(s: &str, allow_default: bool) -> Result<(String, ScalarType, Option<Value>)> {
    let (name, rest) = s.split_once(':').ok_or_else(|| usage(format!("`{s}` needs a `:type`")))?;
    let (ty, default) = match rest.split_once('=') {
        Some((t, d)) if allow_default => (t, Some(d.trim())),
        Some(_) => return Err(usage(format!("key `{name}` cannot have a default"))),
        None => (rest, None),
    };
    let ty = ScalarType::parse(ty.trim()).ok_or_else(|| usage(format!("unknown type `{}`", ty.trim())))?;
    let default = default.map(|d| parse_cell(d, ty)).transpose()?;
    Ok((name.trim().to_string(), ty, default))
}

fn usage(msg: String) -> anyhow::Error {
    LaraError::Usage(msg).into()
}

/// Parse `keys -> values`.
pub fn parse_schema_spec(spec: &str) -> Result<Schema> {
    let (ks, vs) = spec.split_once("->").ok_or_else(|| usage("schema must look like `keys -> values`".into()))?;
    let list = |s: &str| -> Vec<String> { s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(String::from).collect() };
    let mut keys = Vec::new();
    for k in list(ks) {
        let (n, t, _) = parse_attr(&k, false)?;
        keys.push(laradb_core::schema::AttributeSchema::key(n, t));
    }
    let mut values = Vec::new();
    for v in list(vs) {
        let (n, t, d) = parse_attr(&v, true)?;
        values.push(laradb_core::schema::AttributeSchema::value(n, t, d.unwrap_or(Value::Null)));
    }
    Ok(Schema::new(keys, values)?)
}

/// One CSV cell; empty cells and `null` are ⊥.
pub fn parse_cell(s: &str, ty: ScalarType) -> Result<Value> {
    if s.is_empty() || s.eq_ignore_ascii_case("null") {
        return Ok(Value::Null);
    }
    let bad = || anyhow!("`{s}` is not a valid {ty}");
    Ok(match ty {
        ScalarType::Int64 => Value::Int(s.trim().parse().map_err(|_| bad())?),
        ScalarType::Float64 => Value::Float(s.trim().parse().map_err(|_| bad())?),
        ScalarType::Bool => Value::Bool(match s.trim().to_ascii_lowercase().as_str() {
            "true" | "1" => true,
            "false" | "0" => false,
            _ => return Err(bad()),
        }),
        ScalarType::Utf8 => Value::Str(s.to_string()),
    })
}

/// Read a CSV whose header names (optionally `name:type`) the attributes.
pub fn read_csv(path: &Path, schema: Option<Schema>, keys: &[String]) -> Result<AssociativeTable> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let header: Vec<(String, Option<ScalarType>)> = rdr
        .headers()?
        .iter()
        .map(|h| match h.split_once(':') {
            Some((n, t)) => ScalarType::parse(t.trim())
                .map(|ty| (n.trim().to_string(), Some(ty)))
                .ok_or_else(|| usage(format!("unknown type hint `{h}`"))),
            None => Ok((h.trim().to_string(), None)),
        })
        .collect::<Result<_>>()?;
    let schema = match schema {
        Some(s) => s,
        None => {
            if keys.is_empty() {
                bail!(usage("give --schema, or --keys with typed header columns".into()));
            }
            let typed = |n: &str| -> Result<ScalarType> {
                header
                    .iter()
                    .find(|(h, _)| h == n)
                    .and_then(|(_, t)| *t)
                    .ok_or_else(|| usage(format!("column `{n}` has no type hint")))
            };
            let mut ks = Vec::new();
            for k in keys {
                ks.push(laradb_core::schema::AttributeSchema::key(k.clone(), typed(k)?));
            }
            let mut vs = Vec::new();
            for (h, _) in header.iter().filter(|(h, _)| !keys.contains(h)) {
                vs.push(laradb_core::schema::AttributeSchema::value(h.clone(), typed(h)?, Value::Null));
            }
            Schema::new(ks, vs)?
        }
    };
    let col = |n: &str| -> Result<usize> {
        header
            .iter()
            .position(|(h, _)| h == n)
            .ok_or_else(|| usage(format!("CSV has no column `{n}`")))
    };
    let key_cols: Vec<(usize, ScalarType)> = schema.keys.iter().map(|a| Ok((col(&a.name)?, a.ty))).collect::<Result<_>>()?;
    let val_cols: Vec<(usize, ScalarType)> = schema.values.iter().map(|a| Ok((col(&a.name)?, a.ty))).collect::<Result<_>>()?;
    let mut entries = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let cell = |(i, ty): &(usize, ScalarType)| parse_cell(rec.get(*i).unwrap_or(""), *ty).with_context(|| format!("CSV record {}", line + 1));
        let k: Vec<Value> = key_cols.iter().map(cell).collect::<Result<_>>()?;
        if k.iter().any(Value::is_null) {
            bail!("CSV record {} has an empty key", line + 1);
        }
        entries.push((k, val_cols.iter().map(cell).collect::<Result<_>>()?));
    }
    Ok(AssociativeTable::from_entries(schema, entries)?)
}

fn ingest(cli: &Cli, a: &IngestArgs, out: &mut dyn Write) -> Result<()> {
    let schema = a.schema.as_deref().map(parse_schema_spec).transpose()?;
    let table = read_csv(&a.csv, schema, &a.keys)?;
    let path = if a.path.is_empty() { table.schema().key_names() } else { a.path.clone() };
    let ctx = context(cli)?;
    let mut st = ctx.catalog.write_table(&a.table, &table, &path, &WriteOptions::default())?;
    if a.partitions > 1 {
        let splits = st.choose_splits(a.partitions)?;
        let opts = WriteOptions {
            splits,
            ..WriteOptions::default()
        };
        st = ctx.catalog.write_table(&a.table, &table, &path, &opts)?;
    }
    writeln!(out, "{}: {} records, {} partitions, path [{}]", a.table, st.records(), st.partitions().len(), path.join(","))?;
    Ok(())
}

fn describe(cli: &Cli, name: &str, out: &mut dyn Write) -> Result<()> {
    let ctx = context(cli)?;
    let st = ctx.catalog.store(name)?;
    let m = st.manifest();
    writeln!(out, "table     {name}")?;
    writeln!(out, "schema    {}", m.schema)?;
    writeln!(out, "path      [{}]", m.path.join(","))?;
    writeln!(out, "encoding  {:?}", m.encoding)?;
    writeln!(out, "version   {}", m.version)?;
    writeln!(out, "records   {}", m.stats.records)?;
    writeln!(out, "bytes     {}", m.stats.bytes)?;
    if m.view.is_some() {
        writeln!(out, "deferred  yes")?;
    }
    let counts = st.scan_partitions_parallel(cli.parallelism, |_, scan| -> laradb_core::Result<usize> {
        let mut n = 0;
        for r in scan {
            r?;
            n += 1;
        }
        Ok(n)
    })?;
    for (i, (p, n)) in m.partitions.iter().zip(counts).enumerate() {
        let fmt = |k: &Option<Vec<Value>>| match k {
            Some(k) => format!("({})", k.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")),
            None => "-".into(),
        };
        writeln!(out, "partition {i}: {} runs, {n} records, {} .. {}", p.runs.len(), fmt(&p.lower), fmt(&p.upper))?;
    }
    Ok(())
}

fn verify(cli: &Cli, a: &VerifyArgs, out: &mut dyn Write) -> Result<()> {
    let ctx = context(cli)?;
    let plan = parse_plan(&read_plan(&a.plan)?, &ctx.catalog)?;
    let cfg = VerifyConfig::with_samples(a.samples);
    let mut failed = 0;
    for node in &plan.nodes {
        let mut reports = Vec::new();
        match &node.op {
            LogicalOp::Agg { plus, .. } | LogicalOp::Union { plus, .. } => {
                reports.extend(plus.iter().map(|(_, p)| verify_plus(p, cfg)));
            }
            LogicalOp::Join { times, .. } => {
                reports.extend(times.iter().map(|(_, t)| verify_times(t, None, cfg)));
            }
            LogicalOp::Map { input, f } | LogicalOp::Ext { input, f } => {
                reports.push(verify_ext(f, plan.schema(*input), cfg));
            }
            _ => {}
        }
        for r in reports {
            failed += r.failures().len();
            write!(out, "{} ({}): {r}", node.name, node.label)?;
        }
    }
    writeln!(out, "{failed} failed checks")?;
    Ok(())
}

fn bench(cli: &Cli, b: &BenchCmd, out: &mut dyn Write) -> Result<()> {
    let ctx = context(cli)?;
    match b {
        BenchCmd::Sensor {
            span,
            gap,
            seed,
            regen,
            sets,
            out: tsv_path,
        } => {
            if *regen || !ctx.catalog.exists("s1") || !ctx.catalog.exists("s2") {
                let cfg = SensorGenConfig {
                    span: *span,
                    mean_gap: *gap,
                    seed: *seed,
                    rate_spread: 0.2,
                    ..SensorGenConfig::default()
                };
                gen_sensor_data(&cfg, &ctx.catalog)?;
            }
            let mut reports = Vec::new();
            for set in sets.split(';').map(str::trim).filter(|s| !s.is_empty()) {
                let rules = if set.eq_ignore_ascii_case("none") { vec![] } else { rules_arg(set)? };
                reports.push(run_plan_text(crate::SENSOR_PLAN, &ctx, &rules)?);
            }
            same_outputs(&reports, 1e-9)?;
            let (text, tsv) = sensor_table(&reports);
            write!(out, "{text}")?;
            let p = tsv_path.clone().unwrap_or_else(|| cli.data_dir.join("bench_sensor.tsv"));
            fs::write(&p, tsv)?;
            writeln!(out, "outputs identical across rule sets; wrote {}", p.display())?;
        }
        BenchCmd::Matmul { scales, seed, out: tsv_path } => {
            let all: Vec<Rule> = PRIORITY.to_vec();
            let no_a: Vec<Rule> = PRIORITY.iter().copied().filter(|r| *r != Rule::A).collect();
            let mut rows = Vec::new();
            for &s in scales {
                for rules in [&no_a, &all] {
                    rows.extend(run_matmul_bench(&ctx, &[s], rules, *seed)?);
                }
            }
            if let Some(r) = rows.iter().find(|r| r.correct == Some(false)) {
                bail!("scale {} result differs from the oracle", r.scale);
            }
            let (text, tsv) = matmul_table(&rows);
            write!(out, "{text}")?;
            let p = tsv_path.clone().unwrap_or_else(|| cli.data_dir.join("bench_matmul.tsv"));
            fs::write(&p, tsv)?;
            writeln!(out, "wrote {}", p.display())?;
        }
    }
    Ok(())
}
