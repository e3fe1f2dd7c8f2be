//! Seeded random plans and data for equivalence testing: general
//! pipelines, instances shaped so a given rewrite rule fires, and
//! guard-violating instances for the ntz rules.

use std::collections::BTreeMap;

use anyhow::{anyhow, Result};
use laradb_core::metrics::MetricsSnapshot;
use laradb_core::physical::ExecContext;
use laradb_core::planner::{execute, read_outputs, Label, LogicalOp, LogicalPlan, NodeId, PhysicalPlan, Rule};
use laradb_core::storage::store::{Catalog, WriteOptions};
use laradb_core::udf::expr::{BinOp, Func, ScalarExpr};
use laradb_core::udf::func::{BinaryFn, Builtin, ExtFn, PlusFn, TableauRow, TimesFn};
use laradb_core::{AssociativeTable, ScalarType, Schema, Value};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Tables = BTreeMap<String, AssociativeTable>;

/// A logical plan plus the tables it loads.
#[derive(Clone, Debug)]
pub struct Case {
    pub plan: LogicalPlan,
    pub data: Tables,
    /// Split points each table is written with.
    pub splits: BTreeMap<String, Vec<Vec<Value>>>,
}

impl Case {
    pub fn oracle(&self) -> Result<Tables> {
        Ok(self.plan.evaluate(&self.data)?)
    }

    /// Execute `pp` against a fresh catalog holding this case's tables.
    pub fn run(&self, pp: &PhysicalPlan, check_laws: bool) -> Result<(Tables, MetricsSnapshot)> {
        let dir = tempfile::tempdir()?;
        let cat = Catalog::open(dir.path())?;
        for (name, t) in &self.data {
            let opts = WriteOptions {
                splits: self.splits.get(name).cloned().unwrap_or_default(),
                ..WriteOptions::default()
            };
            cat.write_table(name, t, &t.schema().key_names(), &opts)?;
        }
        let mut ctx = ExecContext::new(cat)?;
        ctx.check_laws = check_laws;
        let rep = execute(pp, &ctx)?;
        Ok((read_outputs(pp, &ctx)?, rep.metrics))
    }
}

/// First table-level difference between two sets of outputs.
pub fn compare(got: &Tables, want: &Tables, tol: f64) -> Option<String> {
    if got.keys().ne(want.keys()) {
        return Some(format!("tables {:?} vs {:?}", got.keys().collect::<Vec<_>>(), want.keys().collect::<Vec<_>>()));
    }
    got.iter().find_map(|(n, t)| t.diff(&want[n], tol).map(|d| format!("{n}: {d}")))
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub max_depth: usize,
    pub tables: usize,
    pub max_rows: usize,
    pub domain: i64,
    /// Oracle results larger than this are rejected and regenerated.
    pub max_support: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            max_depth: 5,
            tables: 3,
            max_rows: 10,
            domain: 4,
            max_support: 2000,
        }
    }
}

const KEY_POOL: [&str; 6] = ["a", "b", "c", "d", "r", "s"];

fn int_schema(keys: &[&str], vals: &[&str], default: Value) -> Schema {
    let k: Vec<(&str, ScalarType)> = keys.iter().map(|k| (*k, ScalarType::Int64)).collect();
    let v: Vec<(&str, ScalarType, Value)> = vals.iter().map(|v| (*v, ScalarType::Int64, default.clone())).collect();
    Schema::build(&k, &v)
}

/// Up to `rows` entries with keys in `0..domain` and values drawn by `val`.
fn random_table(rng: &mut ChaCha8Rng, schema: Schema, rows: usize, domain: i64, val: &mut dyn FnMut(&mut ChaCha8Rng) -> i64) -> AssociativeTable {
    let mut m = BTreeMap::new();
    for _ in 0..rows {
        let k: Vec<Value> = schema.keys.iter().map(|_| Value::Int(rng.random_range(0..domain))).collect();
        let v: Vec<Value> = schema.values.iter().map(|_| Value::Int(val(rng))).collect();
        m.insert(k, v);
    }
    AssociativeTable::from_entries(schema, m.into_iter().collect()).expect("generated table is well formed")
}

/// Zero to two split points taken from the table's own keys.
fn random_splits(rng: &mut ChaCha8Rng, t: &AssociativeTable) -> Vec<Vec<Value>> {
    let keys: Vec<Vec<Value>> = t.iter().map(|(k, _)| k.clone()).collect();
    let n = rng.random_range(0..=2usize).min(keys.len());
    let mut picked: Vec<Vec<Value>> = keys.choose_multiple(rng, n).cloned().collect();
    picked.sort();
    picked.dedup();
    picked
}

fn attr(n: &str) -> ScalarExpr {
    ScalarExpr::attr(n)
}

fn int(v: i64) -> ScalarExpr {
    ScalarExpr::lit(Value::Int(v))
}

fn bin(op: BinOp, l: ScalarExpr, r: ScalarExpr) -> ScalarExpr {
    ScalarExpr::binary(op, l, r)
}

fn sum(identity: Value) -> PlusFn {
    PlusFn::sum(identity, ScalarType::Int64)
}

fn times(zero: Value) -> TimesFn {
    TimesFn::builtin(Builtin::Times, (zero.clone(), zero), ScalarType::Int64, ScalarType::Int64)
}

/// Nonnegative-preserving maps with f(0) = 0.
fn value_expr(rng: &mut ChaCha8Rng, x: &str) -> ScalarExpr {
    match rng.random_range(0..5) {
        0 => attr(x),
        1 => bin(BinOp::Mul, attr(x), int(2)),
        2 => bin(BinOp::Mul, attr(x), attr(x)),
        3 => ScalarExpr::if_else(bin(BinOp::Gt, attr(x), int(2)), attr(x), int(0)),
        _ => bin(BinOp::Add, attr(x), attr(x)),
    }
}

struct Gen<'a> {
    rng: &'a mut ChaCha8Rng,
    cfg: &'a PipelineConfig,
    plan: LogicalPlan,
    schemas: BTreeMap<String, Schema>,
    depth: Vec<usize>,
    fresh: usize,
}

impl Gen<'_> {
    fn add(&mut self, op: LogicalOp, depth: usize) -> Result<NodeId> {
        let n = self.plan.nodes.len();
        let id = self.plan.add(format!("N{n}"), Label::whole(n as u32 + 1), op, &self.schemas)?;
        self.depth.push(depth);
        Ok(id)
    }

    fn fresh_name(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{prefix}{}", self.fresh)
    }

    fn load(&mut self) -> Result<NodeId> {
        let names: Vec<String> = self.schemas.keys().cloned().collect();
        let table = names.choose(self.rng).unwrap().clone();
        let bounded = self.rng.random_bool(0.15);
        let (from, to) = if bounded {
            let lo = self.rng.random_range(0..self.cfg.domain);
            (Some(Value::Int(lo)), Some(Value::Int(self.rng.random_range(lo..self.cfg.domain))))
        } else {
            (None, None)
        };
        let l = self.add(LogicalOp::Load { table, from, to }, 0)?;
        if self.rng.random_bool(0.3) {
            return self.select_first_key(l);
        }
        Ok(l)
    }

    /// A range filter on the first key, written as a map to defaults.
    fn select_first_key(&mut self, input: NodeId) -> Result<NodeId> {
        let s = self.plan.schema(input).clone();
        let k0 = s.keys[0].name.clone();
        let lo = self.rng.random_range(0..self.cfg.domain);
        let hi = self.rng.random_range(lo..self.cfg.domain);
        let cond = bin(BinOp::And, bin(BinOp::Le, int(lo), attr(&k0)), bin(BinOp::Le, attr(&k0), int(hi)));
        let vals = s
            .values
            .iter()
            .map(|v| (v.name.clone(), ScalarExpr::if_else(cond.clone(), attr(&v.name), ScalarExpr::lit(v.default_value().clone()))))
            .collect();
        let d = self.depth[input] + 1;
        self.add(
            LogicalOp::Map {
                input,
                f: ExtFn::map(vals)?,
            },
            d,
        )
    }

    fn node(&mut self, budget: usize) -> NodeId {
        for _ in 0..20 {
            let mark = self.plan.nodes.len();
            match self.try_node(budget) {
                Ok(id) => return id,
                Err(_) => {
                    self.plan.nodes.truncate(mark);
                    self.depth.truncate(mark);
                }
            }
        }
        loop {
            let mark = self.plan.nodes.len();
            let l = self.add(
                LogicalOp::Load {
                    table: self.schemas.keys().next().unwrap().clone(),
                    from: None,
                    to: None,
                },
                0,
            );
            match l {
                Ok(id) => return id,
                Err(_) => self.plan.nodes.truncate(mark),
            }
        }
    }

    fn try_node(&mut self, budget: usize) -> Result<NodeId> {
        if budget == 0 || self.rng.random_bool(0.15) {
            return self.load();
        }
        let reusable: Vec<NodeId> = (0..self.plan.nodes.len())
            .filter(|&i| self.depth[i] <= budget && !matches!(self.plan.nodes[i].op, LogicalOp::Store { .. }))
            .collect();
        if !reusable.is_empty() && self.rng.random_bool(0.1) {
            return Ok(*reusable.choose(self.rng).unwrap());
        }
        let kind = self.rng.random_range(0..8);
        if kind == 4 || kind == 5 {
            let a = self.node(budget - 1);
            let b = self.node(budget - 1);
            let d = self.depth[a].max(self.depth[b]) + 1;
            let (sa, sb) = (self.plan.schema(a).clone(), self.plan.schema(b).clone());
            return if kind == 4 {
                let mut names = sa.value_names();
                names.extend(sb.value_names().into_iter().filter(|v| !sa.has_value(v)));
                let plus = names.into_iter().map(|n| (n, sum(Value::Int(0)))).collect();
                self.add(LogicalOp::Union { a, b, plus }, d)
            } else {
                let t = sa
                    .value_names()
                    .into_iter()
                    .filter(|v| sb.has_value(v))
                    .map(|n| (n, times(Value::Int(0))))
                    .collect();
                self.add(LogicalOp::Join { a, b, times: t }, d)
            };
        }
        let input = self.node(budget - 1);
        let d = self.depth[input] + 1;
        let s = self.plan.schema(input).clone();
        match kind {
            0 => {
                let vals = s.value_names().iter().map(|v| (v.clone(), value_expr(self.rng, v))).collect();
                self.add(
                    LogicalOp::Map {
                        input,
                        f: ExtFn::map(vals)?,
                    },
                    d,
                )
            }
            1 => {
                let k = s.key_names().choose(self.rng).cloned().ok_or_else(|| anyhow!("no key"))?;
                let e = self.fresh_name("e");
                let vals: Vec<(String, ScalarExpr)> = s.value_names().iter().map(|v| (v.clone(), attr(v))).collect();
                let rows = if self.rng.random_bool(0.5) {
                    vec![TableauRow {
                        keys: vec![(e, ScalarExpr::call(Func::Mod, vec![attr(&k), int(2)]))],
                        vals,
                    }]
                } else {
                    vec![
                        TableauRow {
                            keys: vec![(e.clone(), attr(&k))],
                            vals: vals.clone(),
                        },
                        TableauRow {
                            keys: vec![(e, bin(BinOp::Add, attr(&k), int(1)))],
                            vals,
                        },
                    ]
                };
                self.add(
                    LogicalOp::Ext {
                        input,
                        f: ExtFn::new(rows, vec![])?,
                    },
                    d,
                )
            }
            2 | 3 => {
                let mut on = s.key_names();
                on.shuffle(self.rng);
                on.truncate(self.rng.random_range(0..=on.len()));
                let plus = s
                    .value_names()
                    .into_iter()
                    .map(|n| {
                        let p = if self.rng.random_bool(0.3) {
                            PlusFn::builtin(Builtin::Max, Value::Int(0), ScalarType::Int64)
                        } else {
                            sum(Value::Int(0))
                        };
                        (n, p)
                    })
                    .collect();
                self.add(LogicalOp::Agg { input, on, plus }, d)
            }
            6 => {
                let from = s.key_names().choose(self.rng).cloned().ok_or_else(|| anyhow!("no key"))?;
                let free: Vec<&str> = KEY_POOL.iter().copied().filter(|k| !s.has_key(k) && !s.has_value(k)).collect();
                let to = free.choose(self.rng).ok_or_else(|| anyhow!("no free name"))?.to_string();
                self.add(LogicalOp::Rename { input, from, to }, d)
            }
            _ => {
                let mut path = s.key_names();
                path.shuffle(self.rng);
                self.add(LogicalOp::Sort { input, path }, d)
            }
        }
    }
}

fn base_tables(rng: &mut ChaCha8Rng, cfg: &PipelineConfig, default: Value, vals: &mut dyn FnMut(&mut ChaCha8Rng) -> i64) -> Case {
    let mut data = BTreeMap::new();
    let mut splits = BTreeMap::new();
    for t in 0..cfg.tables {
        let mut keys: Vec<&str> = KEY_POOL[..4].to_vec();
        keys.shuffle(rng);
        keys.truncate(rng.random_range(1..=3));
        let values: &[&str] = if rng.random_bool(0.3) { &["v", "w"] } else { &["v"] };
        let rows = rng.random_range(0..=cfg.max_rows);
        let table = random_table(rng, int_schema(&keys, values, default.clone()), rows, cfg.domain, vals);
        let name = format!("t{t}");
        if rng.random_bool(0.5) {
            splits.insert(name.clone(), random_splits(rng, &table));
        }
        data.insert(name, table);
    }
    Case {
        plan: LogicalPlan::new(),
        data,
        splits,
    }
}

/// A random DAG of at most `max_depth` operators on any path, ending in
/// one or two Stores.
pub fn random_pipeline(rng: &mut ChaCha8Rng, cfg: &PipelineConfig) -> Case {
    loop {
        let mut case = base_tables(rng, cfg, Value::Int(0), &mut |r| r.random_range(1..=5));
        let schemas = case.data.iter().map(|(n, t)| (n.clone(), t.schema().clone())).collect();
        let mut g = Gen {
            rng,
            cfg,
            plan: LogicalPlan::new(),
            schemas,
            depth: vec![],
            fresh: 0,
        };
        let root = g.node(cfg.max_depth);
        let mut outs = vec![root];
        if g.rng.random_bool(0.3) {
            outs.push(g.node(cfg.max_depth));
        }
        for (i, &o) in outs.iter().enumerate() {
            let d = g.depth[o];
            let table = format!("out{i}");
            g.add(LogicalOp::Store { input: o, table, upper: None }, d).expect("store is always valid");
        }
        case.plan = g.plan;
        let ok = case
            .plan
            .evaluate_nodes(&case.data)
            .map(|v| v.iter().all(|t| t.len() <= cfg.max_support))
            .unwrap_or(false);
        if ok {
            return case;
        }
    }
}

fn null() -> Value {
    Value::Null
}

/// Small integer values with default ⊥, including explicit zeros.
fn nullable_table(rng: &mut ChaCha8Rng, keys: &[&str], rows: usize) -> AssociativeTable {
    random_table(rng, int_schema(keys, &["v"], null()), rows, 4, &mut |r| r.random_range(-3..=3))
}

fn single(name: &str, t: AssociativeTable) -> Tables {
    [(name.to_string(), t)].into_iter().collect()
}

fn plan_from(ops: Vec<LogicalOp>, data: &Tables) -> Result<LogicalPlan> {
    let schemas: BTreeMap<String, Schema> = data.iter().map(|(n, t)| (n.clone(), t.schema().clone())).collect();
    let mut p = LogicalPlan::new();
    for (i, op) in ops.into_iter().enumerate() {
        let name = match &op {
            LogicalOp::Store { table, .. } => table.clone(),
            _ => format!("N{i}"),
        };
        p.add(name, Label::whole(i as u32 + 1), op, &schemas)?;
    }
    Ok(p)
}

fn ntz_map(vals: &[&str]) -> ExtFn {
    ExtFn::map(vals.iter().map(|v| (v.to_string(), ScalarExpr::ntz(attr(v)))).collect()).unwrap()
}

fn store(input: NodeId) -> LogicalOp {
    LogicalOp::Store {
        input,
        table: "out".into(),
        upper: None,
    }
}

fn load(t: &str) -> LogicalOp {
    LogicalOp::Load {
        table: t.into(),
        from: None,
        to: None,
    }
}

fn shuffled_keys(rng: &mut ChaCha8Rng, n: usize) -> Vec<&'static str> {
    let mut k: Vec<&str> = KEY_POOL[..4].to_vec();
    k.shuffle(rng);
    k.truncate(n);
    k
}

/// Sensor-like table (t, c) with an Ext binning t, monotone in t, and an
/// aggregation whose key order needs a Sort.
fn m_case(rng: &mut ChaCha8Rng) -> Result<Case> {
    let schema = Schema::build(
        &[("t", ScalarType::Int64), ("c", ScalarType::Int64)],
        &[("v", ScalarType::Int64, Value::Int(0))],
    );
    let rows = rng.random_range(0..30);
    let t = random_table(rng, schema, rows, 40, &mut |r| r.random_range(1..=9));
    let t = {
        // spread t over 0..200 so bins hold several samples
        let e = t.iter().map(|(k, v)| (vec![Value::Int(k[0].as_i64().unwrap() * 5), k[1].clone()], v.clone())).collect();
        AssociativeTable::from_entries(t.schema().clone(), e)?
    };
    let step = *[10i64, 20, 60].choose(rng).unwrap();
    let f = ExtFn::new(
        vec![TableauRow {
            keys: vec![("b".into(), ScalarExpr::call(Func::Snap, vec![attr("t"), int(step), int(0)]))],
            vals: vec![("v".into(), attr("v"))],
        }],
        vec!["t".into()],
    )?;
    let on: Vec<String> = match rng.random_range(0..3) {
        0 => vec!["b".into(), "c".into()],
        1 => vec!["c".into(), "b".into()],
        _ => vec!["b".into(), "t".into()],
    };
    let plus = vec![("v".to_string(), sum(Value::Int(0)))];
    let data = single("s", t);
    let ops = vec![
        load("s"),
        LogicalOp::Ext { input: 0, f },
        LogicalOp::Agg { input: 1, on, plus },
        store(2),
    ];
    Ok(Case {
        plan: plan_from(ops, &data)?,
        data,
        splits: BTreeMap::new(),
    })
}

/// X ⋈ rename(X), summed to the pair of classes, stored as the upper triangle.
fn s_case(rng: &mut ChaCha8Rng) -> Result<Case> {
    let schema = Schema::build(
        &[("t", ScalarType::Int64), ("c", ScalarType::Int64)],
        &[("v", ScalarType::Float64, Value::Float(0.0))],
    );
    let rows = rng.random_range(0..20);
    let mut m = BTreeMap::new();
    for _ in 0..rows {
        let k = vec![Value::Int(rng.random_range(0..5)), Value::Int(rng.random_range(0..4))];
        m.insert(k, vec![Value::Float(rng.random_range(-20..=20) as f64 / 4.0)]);
    }
    let data = single("x", AssociativeTable::from_entries(schema, m.into_iter().collect())?);
    let fsum = PlusFn::sum(Value::Float(0.0), ScalarType::Float64);
    let ftimes = TimesFn::builtin(
        Builtin::Times,
        (Value::Float(0.0), Value::Float(0.0)),
        ScalarType::Float64,
        ScalarType::Float64,
    );
    let mut ops = vec![load("x")];
    if rng.random_bool(0.5) {
        ops.push(LogicalOp::Map {
            input: 0,
            f: ExtFn::map(vec![("v".into(), bin(BinOp::Mul, attr("v"), ScalarExpr::lit(Value::Float(0.5))))])?,
        });
    }
    let x = ops.len() - 1;
    ops.push(LogicalOp::Rename {
        input: x,
        from: "c".into(),
        to: "c'".into(),
    });
    ops.push(LogicalOp::Join {
        a: x,
        b: x + 1,
        times: vec![("v".into(), ftimes)],
    });
    ops.push(LogicalOp::Agg {
        input: x + 2,
        on: vec!["c".into(), "c'".into()],
        plus: vec![("v".into(), fsum)],
    });
    ops.push(LogicalOp::Store {
        input: x + 3,
        table: "out".into(),
        upper: Some(("c".into(), "c'".into())),
    });
    Ok(Case {
        plan: plan_from(ops, &data)?,
        data,
        splits: BTreeMap::new(),
    })
}

/// One of the ntz patterns over data with default ⊥.
fn z_case(rng: &mut ChaCha8Rng, rule: Rule) -> Result<Case> {
    let nk = rng.random_range(1..=3);
    let keys = shuffled_keys(rng, nk);
    let rows = rng.random_range(0..12);
    let mut data = single("t0", nullable_table(rng, &keys, rows));
    let ops = match rule {
        Rule::ZSort => {
            let mut path: Vec<String> = keys.iter().map(|k| k.to_string()).collect();
            path.rotate_left(1);
            if path.len() == 1 {
                // one key is always sorted; add an ext key to sort on
                let f = ExtFn::new(
                    vec![TableauRow {
                        keys: vec![("e".into(), ScalarExpr::call(Func::Mod, vec![attr(keys[0]), int(2)]))],
                        vals: vec![("v".into(), attr("v"))],
                    }],
                    vec![],
                )?;
                vec![
                    load("t0"),
                    LogicalOp::Ext { input: 0, f },
                    LogicalOp::Sort {
                        input: 1,
                        path: vec!["e".into(), keys[0].to_string()],
                    },
                    LogicalOp::Map { input: 2, f: ntz_map(&["v"]) },
                    store(3),
                ]
            } else {
                vec![
                    load("t0"),
                    LogicalOp::Sort { input: 0, path },
                    LogicalOp::Map { input: 1, f: ntz_map(&["v"]) },
                    store(2),
                ]
            }
        }
        Rule::ZMap => {
            let e = match rng.random_range(0..4) {
                0 => bin(BinOp::Mul, attr("v"), int(2)),
                1 => bin(BinOp::Mul, attr("v"), attr("v")),
                2 => ScalarExpr::Neg(Box::new(attr("v"))),
                _ => bin(BinOp::Mul, attr("v"), int(-3)),
            };
            vec![
                load("t0"),
                LogicalOp::Map {
                    input: 0,
                    f: ExtFn::map(vec![("v".into(), e)])?,
                },
                LogicalOp::Map { input: 1, f: ntz_map(&["v"]) },
                store(2),
            ]
        }
        Rule::ZAgg => {
            let mut on: Vec<String> = keys.iter().map(|k| k.to_string()).collect();
            on.shuffle(rng);
            on.truncate(rng.random_range(0..keys.len()));
            vec![
                load("t0"),
                LogicalOp::Agg {
                    input: 0,
                    on,
                    plus: vec![("v".into(), sum(null()))],
                },
                LogicalOp::Map { input: 1, f: ntz_map(&["v"]) },
                store(2),
            ]
        }
        Rule::ZJoin => {
            let nk2 = rng.random_range(1..=3);
            let keys2 = shuffled_keys(rng, nk2);
            let rows2 = rng.random_range(0..12);
            data.insert("t1".into(), nullable_table(rng, &keys2, rows2));
            vec![
                load("t0"),
                load("t1"),
                LogicalOp::Join {
                    a: 0,
                    b: 1,
                    times: vec![("v".into(), times(null()))],
                },
                LogicalOp::Map { input: 2, f: ntz_map(&["v"]) },
                store(3),
            ]
        }
        r => return Err(anyhow!("{r} is not an ntz rule")),
    };
    Ok(Case {
        plan: plan_from(ops, &data)?,
        data,
        splits: BTreeMap::new(),
    })
}

/// A random instance built so that `rule` has a pattern to match. Rules
/// with no dedicated shape use general pipelines.
pub fn rule_case(rng: &mut ChaCha8Rng, rule: Rule) -> Result<Case> {
    match rule {
        Rule::M => m_case(rng),
        Rule::S => s_case(rng),
        Rule::ZSort | Rule::ZMap | Rule::ZAgg | Rule::ZJoin => z_case(rng, rule),
        Rule::R => {
            let cfg = PipelineConfig {
                tables: 1,
                max_depth: 4,
                ..PipelineConfig::default()
            };
            Ok(random_pipeline(rng, &cfg))
        }
        _ => Ok(random_pipeline(
            rng,
            &PipelineConfig {
                max_depth: 4,
                ..PipelineConfig::default()
            },
        )),
    }
}

/// An ntz pattern whose UDF breaks the rule's side condition, with data on
/// which moving ntz changes the answer. Z-Sort has no UDF to break.
pub fn z_violation(rule: Rule) -> Result<Option<Case>> {
    let k = |i: i64| vec![Value::Int(i)];
    let t = |rows: &[(i64, i64)]| {
        let e = rows.iter().map(|&(i, v)| (k(i), vec![Value::Int(v)])).collect();
        AssociativeTable::from_entries(int_schema(&["a"], &["v"], null()), e)
    };
    let (data, ops) = match rule {
        Rule::ZSort => return Ok(None),
        Rule::ZMap => {
            // f(0) = 1
            let f = ExtFn::map(vec![("v".into(), bin(BinOp::Add, attr("v"), int(1)))])?;
            (
                single("t0", t(&[(0, 0), (1, 4)])?),
                vec![
                    load("t0"),
                    LogicalOp::Map { input: 0, f },
                    LogicalOp::Map { input: 1, f: ntz_map(&["v"]) },
                    store(2),
                ],
            )
        }
        Rule::ZAgg => {
            // max is not neutral on 0: 0 max -3 = 0
            let two = |rows: &[(i64, i64, i64)]| {
                let e = rows
                    .iter()
                    .map(|&(a, b, v)| (vec![Value::Int(a), Value::Int(b)], vec![Value::Int(v)]))
                    .collect();
                AssociativeTable::from_entries(int_schema(&["a", "b"], &["v"], null()), e)
            };
            (
                single("t0", two(&[(0, 0, 0), (0, 1, -3), (1, 0, 2)])?),
                vec![
                    load("t0"),
                    LogicalOp::Agg {
                        input: 0,
                        on: vec!["a".into()],
                        plus: vec![("v".into(), PlusFn::builtin(Builtin::Max, null(), ScalarType::Int64))],
                    },
                    LogicalOp::Map { input: 1, f: ntz_map(&["v"]) },
                    store(2),
                ],
            )
        }
        Rule::ZJoin => {
            // v + v' keeps ⊥ absorbing but 0 is not: 0 + 5 = 5
            let plus_as_times = TimesFn {
                name: "add".into(),
                op: BinaryFn::expr("v", bin(BinOp::Add, attr("v"), attr("v'"))),
                annihilators: (null(), null()),
                left: ScalarType::Int64,
                right: ScalarType::Int64,
                commutative: true,
                distributes_over: None,
            };
            let mut data = single("t0", t(&[(0, 0), (1, 2)])?);
            data.insert("t1".into(), t(&[(0, 5), (1, 3)])?);
            (
                data,
                vec![
                    load("t0"),
                    load("t1"),
                    LogicalOp::Join {
                        a: 0,
                        b: 1,
                        times: vec![("v".into(), plus_as_times)],
                    },
                    LogicalOp::Map { input: 2, f: ntz_map(&["v"]) },
                    store(3),
                ],
            )
        }
        r => return Err(anyhow!("{r} is not an ntz rule")),
    };
    Ok(Some(Case {
        plan: plan_from(ops, &data)?,
        data,
        splits: BTreeMap::new(),
    }))
}
