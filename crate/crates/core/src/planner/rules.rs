//! Rewrite rules over physical plans and the fixpoint driver.
//!
//! Every rule works on a copy of the plan, re-infers all schemas, and is
//! discarded if inference fails or a stored table's schema would change.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{LaraError, Result};
use crate::planner::logical::NodeId;
use crate::planner::plan::{PhysOp, PhysicalPlan};
use crate::schema::Schema;
use crate::storage::encoding::ValueEncoding;
use crate::udf::expr::{BinOp, Func, ScalarExpr};
use crate::udf::func::{ExtFn, PlusFn, TableauRow, TimesFn};
use crate::udf::verify::{check_monotone, Sampler, VerifyConfig};
use crate::value::{ScalarType, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    F,
    M,
    ZSort,
    ZMap,
    ZAgg,
    ZJoin,
    R,
    S,
    A,
    D,
    P,
    E,
}

/// Application order of the fixpoint driver.
pub const PRIORITY: [Rule; 12] = [
    Rule::F,
    Rule::M,
    Rule::ZSort,
    Rule::ZMap,
    Rule::ZAgg,
    Rule::ZJoin,
    Rule::R,
    Rule::S,
    Rule::A,
    Rule::D,
    Rule::P,
    Rule::E,
];

impl Rule {
    pub fn name(self) -> &'static str {
        match self {
            Rule::F => "F",
            Rule::M => "M",
            Rule::ZSort => "Z-Sort",
            Rule::ZMap => "Z-Map",
            Rule::ZAgg => "Z-Agg",
            Rule::ZJoin => "Z-Join",
            Rule::R => "R",
            Rule::S => "S",
            Rule::A => "A",
            Rule::D => "D",
            Rule::P => "P",
            Rule::E => "E",
        }
    }

    /// Parse a comma-separated rule list. `Z` means all four Z rules and
    /// `all` means every rule.
    pub fn parse_list(s: &str) -> Result<Vec<Rule>> {
        let mut out = Vec::new();
        for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            let rules: Vec<Rule> = match item.to_ascii_uppercase().replace('_', "-").as_str() {
                "ALL" => PRIORITY.to_vec(),
                "Z" => vec![Rule::ZSort, Rule::ZMap, Rule::ZAgg, Rule::ZJoin],
                "Z-SORT" => vec![Rule::ZSort],
                "Z-MAP" => vec![Rule::ZMap],
                "Z-AGG" => vec![Rule::ZAgg],
                "Z-JOIN" => vec![Rule::ZJoin],
                other => match PRIORITY.iter().find(|r| r.name() == other) {
                    Some(r) => vec![*r],
                    None => return Err(LaraError::usage(format!("unknown rule `{item}`"))),
                },
            };
            for r in rules {
                if !out.contains(&r) {
                    out.push(r);
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RuleOptions {
    /// Skip sampled side-condition checks.
    pub force: bool,
    pub verify: VerifyConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleOutcome {
    pub rule: Rule,
    pub applied: bool,
    pub node: Option<String>,
    pub detail: String,
}

impl fmt::Display for RuleOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verb = if self.applied { "applied" } else { "not applied" };
        write!(f, "({}) {verb}", self.rule)?;
        if let Some(n) = &self.node {
            write!(f, " at {n}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

/// Ok(Some) fired, Ok(None) no match, Err a matched pattern whose side
/// condition failed.
type Attempt = std::result::Result<Option<String>, String>;

struct Ctx<'a> {
    plan: &'a mut PhysicalPlan,
    consumers: Vec<Vec<NodeId>>,
    opts: RuleOptions,
}

impl Ctx<'_> {
    fn input(&self, id: NodeId) -> NodeId {
        self.plan.resolve(id)
    }

    fn single_consumer(&self, id: NodeId) -> bool {
        self.consumers[id].len() == 1
    }

    fn tag(&mut self, id: NodeId, rule: Rule) {
        let r = rule.name().to_string();
        if !self.plan.nodes[id].rules.contains(&r) {
            self.plan.nodes[id].rules.push(r);
        }
    }

    fn alias(&mut self, id: NodeId, to: NodeId) {
        self.plan.nodes[id].op = PhysOp::Alias { input: to };
    }
}

fn store_schemas(plan: &PhysicalPlan) -> Vec<(NodeId, Schema)> {
    let live = plan.live();
    plan.nodes
        .iter()
        .enumerate()
        .filter(|(i, n)| live[*i] && matches!(n.op, PhysOp::Store { .. }))
        .map(|(i, n)| (i, n.schema.clone()))
        .collect()
}

/// Try `rule` once at the leftmost-deepest node where it fires.
pub fn apply_rewrite(plan: &mut PhysicalPlan, rule: Rule, opts: RuleOptions) -> RuleOutcome {
    let live = plan.live();
    let order: Vec<NodeId> = plan
        .topo()
        .into_iter()
        .filter(|&i| live[i] && !matches!(plan.nodes[i].op, PhysOp::Alias { .. }))
        .collect();
    let before = store_schemas(plan);
    let mut blocked: Option<(String, String)> = None;
    for id in order {
        let mut copy = plan.clone();
        let consumers = copy.consumers();
        let mut cx = Ctx {
            plan: &mut copy,
            consumers,
            opts,
        };
        let attempt = match rule {
            Rule::F => rule_f(&mut cx, id),
            Rule::M => rule_m(&mut cx, id),
            Rule::ZSort => rule_z_sort(&mut cx, id),
            Rule::ZMap => rule_z_map(&mut cx, id),
            Rule::ZAgg => rule_z_agg(&mut cx, id),
            Rule::ZJoin => rule_z_join(&mut cx, id),
            Rule::R => rule_r(&mut cx, id),
            Rule::S => rule_s(&mut cx, id),
            Rule::A => rule_a(&mut cx, id),
            Rule::D => rule_d(&mut cx, id),
            Rule::P => rule_p(&mut cx, id),
            Rule::E => rule_e(&mut cx, id),
        };
        let name = plan.nodes[id].name.clone();
        match attempt {
            Ok(None) => {}
            Err(why) => {
                if blocked.is_none() {
                    blocked = Some((name, why));
                }
            }
            Ok(Some(detail)) => {
                if let Err(e) = copy.refresh() {
                    blocked.get_or_insert((name, format!("rewrite breaks the plan: {e}")));
                    continue;
                }
                let after = store_schemas(&copy);
                if !opts.force && after != before {
                    blocked.get_or_insert((name, "rewrite would change a stored schema".into()));
                    continue;
                }
                *plan = copy;
                return RuleOutcome {
                    rule,
                    applied: true,
                    node: Some(name),
                    detail,
                };
            }
        }
    }
    let (node, detail) = match blocked {
        Some((n, d)) => (Some(n), d),
        None => (None, "no matching pattern".to_string()),
    };
    RuleOutcome {
        rule,
        applied: false,
        node,
        detail,
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct OptimizeReport {
    pub applied: Vec<RuleOutcome>,
    /// Last report of each enabled rule that never fired.
    pub not_applied: Vec<RuleOutcome>,
    pub iterations: usize,
}

impl fmt::Display for OptimizeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for o in self.applied.iter().chain(&self.not_applied) {
            writeln!(f, "{o}")?;
        }
        Ok(())
    }
}

/// Apply enabled rules in priority order until none fires. After every
/// firing the scan restarts from the highest-priority rule.
pub fn optimize(plan: &mut PhysicalPlan, rules: &[Rule], opts: RuleOptions) -> OptimizeReport {
    let enabled: Vec<Rule> = PRIORITY.iter().copied().filter(|r| rules.contains(r)).collect();
    let cap = (plan.nodes.len() + 1) * (enabled.len() + 1) * 4;
    let mut report = OptimizeReport::default();
    let mut last: HashMap<Rule, RuleOutcome> = HashMap::new();
    'outer: while report.iterations < cap {
        report.iterations += 1;
        for &r in &enabled {
            let o = apply_rewrite(plan, r, opts);
            if o.applied {
                report.applied.push(o);
                continue 'outer;
            }
            last.insert(r, o);
        }
        break;
    }
    for r in enabled {
        if !report.applied.iter().any(|o| o.rule == r) {
            if let Some(o) = last.remove(&r) {
                report.not_applied.push(o);
            }
        }
    }
    report
}

// ---- F ----

fn lit(e: &ScalarExpr) -> Option<&Value> {
    match e {
        ScalarExpr::Lit(v) => Some(v),
        _ => None,
    }
}

fn is_attr(e: &ScalarExpr, name: &str) -> bool {
    matches!(e, ScalarExpr::Attr(a) if a == name)
}

/// Bounds on `k` implied by `cond`, if it is a conjunction of literal
/// comparisons against `k`.
fn range_on(cond: &ScalarExpr, k: &str) -> Option<(Option<Value>, Option<Value>)> {
    match cond {
        ScalarExpr::Binary(BinOp::And, l, r) => {
            let (a1, b1) = range_on(l, k)?;
            let (a2, b2) = range_on(r, k)?;
            Some((tighter(a1, a2, true), tighter(b1, b2, false)))
        }
        ScalarExpr::Binary(op, l, r) => {
            let (op, v) = if is_attr(l, k) {
                (*op, lit(r)?)
            } else if is_attr(r, k) {
                let flipped = match op {
                    BinOp::Le => BinOp::Ge,
                    BinOp::Ge => BinOp::Le,
                    BinOp::Eq => BinOp::Eq,
                    _ => return None,
                };
                (flipped, lit(l)?)
            } else {
                return None;
            };
            if v.is_null() {
                return None;
            }
            match op {
                BinOp::Ge => Some((Some(v.clone()), None)),
                BinOp::Le => Some((None, Some(v.clone()))),
                BinOp::Eq => Some((Some(v.clone()), Some(v.clone()))),
                _ => None,
            }
        }
        _ => None,
    }
}

fn tighter(a: Option<Value>, b: Option<Value>, lower: bool) -> Option<Value> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if (x >= y) == lower { x } else { y }),
        (x, None) | (None, x) => x,
    }
}

fn rule_f(cx: &mut Ctx, id: NodeId) -> Attempt {
    let PhysOp::Map { input, f } = &cx.plan.nodes[id].op else {
        return Ok(None);
    };
    let l = cx.input(*input);
    let PhysOp::Load { table, schema, from, to } = &cx.plan.nodes[l].op else {
        return Ok(None);
    };
    let k0 = schema.keys[0].name.clone();
    let ty = schema.keys[0].ty;
    let vals = &f.rows[0].vals;
    if vals.len() != schema.values.len() {
        return Ok(None);
    }
    let mut bounds: Option<(Option<Value>, Option<Value>)> = None;
    for (attr, e) in vals {
        let ScalarExpr::If(c, t, d) = e else {
            return Ok(None);
        };
        let Some(a) = schema.value(attr) else {
            return Ok(None);
        };
        let default = a.default.clone().unwrap_or(Value::Null);
        if !is_attr(t, attr) || lit(d) != Some(&default) {
            return Ok(None);
        }
        let Some(r) = range_on(c, &k0) else {
            return Ok(None);
        };
        match &bounds {
            None => bounds = Some(r),
            Some(b) if *b == r => {}
            Some(_) => return Err("value attributes filter on different ranges".into()),
        }
    }
    let Some((lo, hi)) = bounds else {
        return Ok(None);
    };
    let co = |v: Option<Value>| -> std::result::Result<Option<Value>, String> {
        v.map(|v| ty.coerce(v).map_err(|e| e.to_string())).transpose()
    };
    let lo = tighter(co(lo)?, from.clone(), true);
    let hi = tighter(co(hi)?, to.clone(), false);
    let new_load = PhysOp::Load {
        table: table.clone(),
        schema: schema.clone(),
        from: lo.clone(),
        to: hi.clone(),
    };
    let range = format!(
        "Load '{table}'{}{}",
        lo.as_ref().map(|v| format!(" from {v}")).unwrap_or_default(),
        hi.as_ref().map(|v| format!(" to {v}")).unwrap_or_default()
    );
    if cx.single_consumer(l) {
        cx.plan.nodes[l].op = new_load;
        cx.alias(id, l);
        cx.tag(l, Rule::F);
    } else {
        cx.plan.nodes[id].op = new_load;
        cx.tag(id, Rule::F);
    }
    Ok(Some(format!("filter pushed into {range}")))
}

// ---- M ----

fn rule_m(cx: &mut Ctx, id: NodeId) -> Attempt {
    let PhysOp::Sort { input, path: target, .. } = &cx.plan.nodes[id].op else {
        return Ok(None);
    };
    let target = target.clone();
    let e = cx.input(*input);
    let PhysOp::Ext { input: ein, f, over: None } = &cx.plan.nodes[e].op else {
        return Ok(None);
    };
    let (ein, f) = (cx.input(*ein), f.clone());
    if f.rows.len() != 1 || f.is_map() || !cx.single_consumer(e) {
        return Ok(None);
    }
    let in_schema = cx.plan.nodes[ein].schema.clone();
    let in_path = in_schema.key_names();
    let new = f.new_key_names();
    if in_path.is_empty() || !target.starts_with(&new) {
        return Ok(None);
    }
    let k0 = &in_path[0];
    if !f.monotone_in.contains(k0) {
        return Err(format!("ext is not declared monotone in `{k0}`"));
    }
    if f.key_inputs().iter().any(|a| a != k0) {
        return Err(format!("new keys read attributes other than `{k0}`"));
    }
    if !cx.opts.force {
        let rep = check_monotone(&f, &in_schema, k0, cx.opts.verify);
        if !rep.passed() {
            return Err(format!("monotonicity check failed: {rep}"));
        }
    }
    let mut over = new.clone();
    over.extend(in_path.iter().cloned());
    if target == over {
        cx.plan.nodes[e].op = PhysOp::Ext {
            input: ein,
            f,
            over: Some(over.clone()),
        };
        cx.alias(id, e);
        cx.tag(e, Rule::M);
        return Ok(Some(format!("Sort to [{}] eliminated by Ext over", target.join(","))));
    }
    let aggs = cx.consumers[id].clone();
    let fits = !aggs.is_empty()
        && aggs.iter().all(|&a| {
            matches!(&cx.plan.nodes[a].op,
                PhysOp::MergeAgg { on, segmented: false, .. } if new.iter().all(|k| on.contains(k)))
        });
    if !fits {
        return Err(format!(
            "Sort target [{}] is not [new keys, input path] and is not consumed only by aggregations on the new keys",
            target.join(",")
        ));
    }
    cx.plan.nodes[e].op = PhysOp::Ext {
        input: ein,
        f,
        over: Some(over.clone()),
    };
    cx.alias(id, e);
    cx.tag(e, Rule::M);
    for a in aggs {
        if let PhysOp::MergeAgg { segmented, .. } = &mut cx.plan.nodes[a].op {
            *segmented = true;
        }
        cx.tag(a, Rule::M);
    }
    Ok(Some(format!(
        "Sort to [{}] eliminated; Ext emits [{}] and aggregation runs per segment",
        target.join(","),
        over.join(",")
    )))
}

// ---- Z ----

/// Value attributes a Map sends through ntz; every other value passes
/// through unchanged.
fn ntz_attrs(f: &ExtFn, input: &Schema) -> Option<Vec<String>> {
    if !f.is_map() || f.value_names() != input.value_names() {
        return None;
    }
    let mut out = Vec::new();
    for (n, e) in &f.rows[0].vals {
        match e {
            ScalarExpr::Attr(a) if a == n => {}
            ScalarExpr::Call(Func::Ntz, args) if args.len() == 1 && is_attr(&args[0], n) => out.push(n.clone()),
            _ => return None,
        }
    }
    (!out.is_empty()).then_some(out)
}

fn ntz_map(schema: &Schema, attrs: &[String]) -> ExtFn {
    let vals = schema
        .value_names()
        .into_iter()
        .map(|n| {
            let e = if attrs.contains(&n) {
                ScalarExpr::ntz(ScalarExpr::attr(&n))
            } else {
                ScalarExpr::attr(&n)
            };
            (n, e)
        })
        .collect();
    ExtFn {
        rows: vec![TableauRow { keys: vec![], vals }],
        monotone_in: vec![],
    }
}

/// The ntz Map at `id` and the node it reads, if it is the top of a Z pattern.
fn z_top(cx: &Ctx, id: NodeId) -> Option<(Vec<String>, NodeId)> {
    let PhysOp::Map { input, f } = &cx.plan.nodes[id].op else {
        return None;
    };
    let child = cx.input(*input);
    let attrs = ntz_attrs(f, &cx.plan.nodes[child].schema)?;
    Some((attrs, child))
}

/// Insert an ntz Map over `input` and return it.
fn insert_ntz(cx: &mut Ctx, input: NodeId, attrs: &[String], like: NodeId) -> NodeId {
    let mut n = cx.plan.nodes[like].clone();
    n.op = PhysOp::Map {
        input,
        f: ntz_map(&cx.plan.nodes[input].schema, attrs),
    };
    n.name = format!("{}_ntz", cx.plan.nodes[input].name);
    n.hidden = cx.plan.nodes[input].hidden;
    n.display = None;
    n.rules = vec![];
    n.label = cx.plan.nodes[input].label;
    cx.plan.push(n)
}

fn rule_z_sort(cx: &mut Ctx, id: NodeId) -> Attempt {
    let Some((attrs, s)) = z_top(cx, id) else {
        return Ok(None);
    };
    let PhysOp::Sort { input, .. } = cx.plan.nodes[s].op else {
        return Ok(None);
    };
    if !cx.single_consumer(s) {
        return Ok(None);
    }
    let below = cx.input(input);
    let m = insert_ntz(cx, below, &attrs, id);
    if let PhysOp::Sort { input, .. } = &mut cx.plan.nodes[s].op {
        *input = m;
    }
    cx.alias(id, s);
    cx.tag(s, Rule::ZSort);
    Ok(Some(format!("ntz({}) moved below Sort", attrs.join(","))))
}

fn sample_row(s: &mut Sampler, schema: &Schema) -> Vec<(String, ScalarType, Value)> {
    schema
        .keys
        .iter()
        .chain(&schema.values)
        .map(|a| (a.name.clone(), a.ty, s.value(a.ty)))
        .collect()
}

fn rule_z_map(cx: &mut Ctx, id: NodeId) -> Attempt {
    let Some((attrs, inner)) = z_top(cx, id) else {
        return Ok(None);
    };
    let PhysOp::Map { input, f } = &cx.plan.nodes[inner].op else {
        return Ok(None);
    };
    let (below, f) = (cx.input(*input), f.clone());
    if !cx.single_consumer(inner) || ntz_attrs(&f, &cx.plan.nodes[below].schema).is_some() {
        return Ok(None);
    }
    let in_schema = cx.plan.nodes[below].schema.clone();
    let out_schema = cx.plan.nodes[inner].schema.clone();
    let exprs: Vec<(String, ScalarExpr)> = f.rows[0].vals.clone();
    for (n, e) in &exprs {
        let refs = e.attributes();
        if attrs.contains(n) {
            if !in_schema.has_value(n) || refs.iter().any(|a| a != n && in_schema.has_value(a)) {
                return Err(format!("`{n}` is not computed from `{n}` alone"));
            }
        } else if refs.iter().any(|a| attrs.contains(a)) {
            return Err(format!("`{n}` reads an attribute that ntz would change"));
        }
    }
    if !cx.opts.force {
        let layout: Vec<(String, ScalarType)> = in_schema
            .keys
            .iter()
            .chain(&in_schema.values)
            .map(|a| (a.name.clone(), a.ty))
            .collect();
        let mut s = Sampler::new(cx.opts.verify.seed);
        for (n, e) in exprs.iter().filter(|(n, _)| attrs.contains(n)) {
            let b = e.bind_typed(&layout).map_err(|e| e.to_string())?;
            let pos = layout.iter().position(|(a, _)| a == n).unwrap();
            let in_ty = layout[pos].1;
            let out_zero = out_schema.value(n).unwrap().ty.zero();
            for _ in 0..cx.opts.verify.samples.max(1) {
                let mut row: Vec<Value> = sample_row(&mut s, &in_schema).into_iter().map(|x| x.2).collect();
                row[pos] = Value::Null;
                let g = b.eval(&row);
                if !g.is_null() {
                    return Err(format!("f(⊥) = {g} for `{n}`, not ⊥"));
                }
                row[pos] = in_ty.zero();
                let g = b.eval(&row);
                if g != out_zero {
                    return Err(format!("f(0) = {g} for `{n}`, not 0"));
                }
            }
        }
    }
    let m = insert_ntz(cx, below, &attrs, id);
    if let PhysOp::Map { input, .. } = &mut cx.plan.nodes[inner].op {
        *input = m;
    }
    cx.alias(id, inner);
    cx.tag(inner, Rule::ZMap);
    Ok(Some(format!("ntz({}) moved below Map", attrs.join(","))))
}

fn plus_guard(p: &PlusFn, cfg: VerifyConfig) -> std::result::Result<(), String> {
    let b = p.bind().map_err(|e| e.to_string())?;
    let zero = p.domain.zero();
    let mut s = Sampler::new(cfg.seed);
    for i in 0..cfg.samples.max(1) + 1 {
        let v = if i == 0 { zero.clone() } else { s.value(p.domain) };
        let got = b.apply(&Value::Null, &v);
        if got != v {
            return Err(format!("⊥ {p} {v} = {got}, not {v}"));
        }
        if !v.is_null() {
            let got = b.apply(&zero, &v);
            if got != v {
                return Err(format!("0 {p} {v} = {got}, not {v}"));
            }
        }
    }
    Ok(())
}

fn times_guard(t: &TimesFn, cfg: VerifyConfig) -> std::result::Result<(), String> {
    let b = t.bind().map_err(|e| e.to_string())?;
    let out_zero = b.output_type().zero();
    let mut s = Sampler::new(cfg.seed);
    for i in 0..cfg.samples.max(1) + 1 {
        let (l, r) = if i == 0 {
            (t.left.zero(), t.right.zero())
        } else {
            (s.value(t.left), s.value(t.right))
        };
        for (got, what) in [
            (b.apply(&Value::Null, &r), format!("⊥ {t} {r}")),
            (b.apply(&l, &Value::Null), format!("{l} {t} ⊥")),
        ] {
            if !got.is_null() {
                return Err(format!("{what} = {got}, not ⊥"));
            }
        }
        if !r.is_null() {
            let got = b.apply(&t.left.zero(), &r);
            if got != out_zero {
                return Err(format!("0 {t} {r} = {got}, not 0"));
            }
        }
        if !l.is_null() {
            let got = b.apply(&l, &t.right.zero());
            if got != out_zero {
                return Err(format!("{l} {t} 0 = {got}, not 0"));
            }
        }
    }
    Ok(())
}

fn rule_z_agg(cx: &mut Ctx, id: NodeId) -> Attempt {
    let Some((attrs, g)) = z_top(cx, id) else {
        return Ok(None);
    };
    let (input, plus) = match &cx.plan.nodes[g].op {
        PhysOp::MergeAgg { input, plus, .. } | PhysOp::SortAgg { input, plus, .. } => (*input, plus.clone()),
        _ => return Ok(None),
    };
    if !cx.single_consumer(g) {
        return Ok(None);
    }
    let below = cx.input(input);
    if attrs.iter().any(|a| !cx.plan.nodes[below].schema.has_value(a)) {
        return Ok(None);
    }
    if !cx.opts.force {
        for (n, p) in plus.iter().filter(|(n, _)| attrs.contains(n)) {
            plus_guard(p, cx.opts.verify).map_err(|e| format!("`{n}`: {e}"))?;
        }
    }
    let m = insert_ntz(cx, below, &attrs, id);
    let relabel = |ps: &mut Vec<(String, PlusFn)>| {
        for (n, p) in ps.iter_mut() {
            if attrs.contains(n) {
                *p = p.with_identity(p.domain.zero());
            }
        }
    };
    match &mut cx.plan.nodes[g].op {
        PhysOp::MergeAgg { input, plus, .. } | PhysOp::SortAgg { input, plus, .. } => {
            *input = m;
            relabel(plus);
        }
        _ => unreachable!(),
    }
    cx.alias(id, g);
    cx.tag(g, Rule::ZAgg);
    Ok(Some(format!("ntz({}) moved below aggregation", attrs.join(","))))
}

fn rule_z_join(cx: &mut Ctx, id: NodeId) -> Attempt {
    let Some((attrs, j)) = z_top(cx, id) else {
        return Ok(None);
    };
    let PhysOp::MergeJoin { a, b, times, .. } = &cx.plan.nodes[j].op else {
        return Ok(None);
    };
    let (a, b, times) = (cx.input(*a), cx.input(*b), times.clone());
    if !cx.single_consumer(j) {
        return Ok(None);
    }
    if !cx.opts.force {
        for (n, t) in times.iter().filter(|(n, _)| attrs.contains(n)) {
            times_guard(t, cx.opts.verify).map_err(|e| format!("`{n}`: {e}"))?;
        }
    }
    let ma = insert_ntz(cx, a, &attrs, id);
    let mb = insert_ntz(cx, b, &attrs, id);
    if let PhysOp::MergeJoin { a, b, times, .. } = &mut cx.plan.nodes[j].op {
        *a = ma;
        *b = mb;
        for (n, t) in times.iter_mut() {
            if attrs.contains(n) {
                t.annihilators = (t.left.zero(), t.right.zero());
            }
        }
    }
    cx.alias(id, j);
    cx.tag(j, Rule::ZJoin);
    Ok(Some(format!("ntz({}) moved below both join inputs", attrs.join(","))))
}

// ---- R ----

fn op_key(plan: &PhysicalPlan, id: NodeId) -> Option<String> {
    let n = &plan.nodes[id];
    if matches!(n.op, PhysOp::Store { .. } | PhysOp::Alias { .. }) {
        return None;
    }
    let mut op = n.op.clone();
    op.map_inputs(|i| plan.resolve(i));
    serde_json::to_string(&(op, &n.schema)).ok()
}

fn rule_r(cx: &mut Ctx, id: NodeId) -> Attempt {
    let Some(key) = op_key(cx.plan, id) else {
        return Ok(None);
    };
    let live = cx.plan.live();
    let earlier = cx
        .plan
        .topo()
        .into_iter()
        .take_while(|&i| i != id)
        .find(|&i| live[i] && op_key(cx.plan, i).as_deref() == Some(key.as_str()));
    let Some(keep) = earlier else {
        return Ok(None);
    };
    let dropped = cx.plan.nodes[id].name.clone();
    cx.alias(id, keep);
    cx.tag(keep, Rule::R);
    Ok(Some(format!("{dropped} reuses {}", cx.plan.nodes[keep].name)))
}

// ---- S ----

/// Does `op` with input `from` keep keys `x` and `y` and commute with a
/// filter on them?
fn preserves(plan: &PhysicalPlan, op: &PhysOp, from: NodeId, x: &str, y: &str) -> bool {
    let keeps = |on: &[String]| on.iter().any(|k| k == x) && on.iter().any(|k| k == y);
    match op {
        PhysOp::Map { .. } | PhysOp::Ext { .. } | PhysOp::Sort { .. } => true,
        PhysOp::MergeAgg { on, .. } => keeps(on),
        PhysOp::SortAgg { path, .. } => keeps(path),
        PhysOp::Rename { from: f, .. } => f != x && f != y,
        PhysOp::MergeJoin { a, .. } => plan.resolve(*a) == from,
        _ => false,
    }
}

fn rule_s(cx: &mut Ctx, id: NodeId) -> Attempt {
    let PhysOp::MergeJoin { a, b, key_filter: None, .. } = &cx.plan.nodes[id].op else {
        return Ok(None);
    };
    let (a, b) = (cx.input(*a), cx.input(*b));
    let PhysOp::Rename { input, from, to } = &cx.plan.nodes[b].op else {
        return Ok(None);
    };
    if cx.input(*input) != a {
        return Ok(None);
    }
    let (x, y) = (from.clone(), to.clone());
    let mut cur = id;
    loop {
        if !cx.single_consumer(cur) {
            return Err(format!("{} has more than one consumer", cx.plan.nodes[cur].name));
        }
        let next = cx.consumers[cur][0];
        match &cx.plan.nodes[next].op {
            PhysOp::Store { upper: Some((u, v)), .. } if *u == x && *v == y => break,
            PhysOp::Store { .. } => return Err("the Store does not declare UPPER on the self-join keys".into()),
            op if preserves(cx.plan, op, cur, &x, &y) => cur = next,
            _ => return Err(format!("{} does not preserve keys {x}, {y}", cx.plan.nodes[next].name)),
        }
    }
    let filter = ScalarExpr::binary(BinOp::Le, ScalarExpr::attr(&x), ScalarExpr::attr(&y));
    if let PhysOp::MergeJoin { key_filter, .. } = &mut cx.plan.nodes[id].op {
        *key_filter = Some(filter);
    }
    cx.tag(id, Rule::S);
    Ok(Some(format!("self-join restricted to {x} <= {y}")))
}

// ---- A ----

fn rule_a(cx: &mut Ctx, id: NodeId) -> Attempt {
    let PhysOp::Sort { input, splits_from, .. } = &cx.plan.nodes[id].op else {
        return Ok(None);
    };
    let (input, splits_from) = (*input, splits_from.clone());
    if !cx.single_consumer(id) {
        return Ok(None);
    }
    let g = cx.consumers[id][0];
    let PhysOp::MergeAgg { plus, segmented: false, .. } = &cx.plan.nodes[g].op else {
        return Ok(None);
    };
    if let Some((n, _)) = plus.iter().find(|(_, p)| !(p.associative && p.commutative)) {
        return Err(format!("⊕ on `{n}` is not associative and commutative"));
    }
    let plus = plus.clone();
    let path = cx.plan.nodes[g].schema.key_names();
    cx.plan.nodes[g].op = PhysOp::SortAgg {
        input,
        path: path.clone(),
        plus,
        splits_from,
    };
    cx.plan.nodes[g].label = cx.plan.nodes[id].label;
    cx.alias(id, input);
    cx.tag(g, Rule::A);
    Ok(Some(format!("aggregation fused into Sort to [{}]", path.join(","))))
}

// ---- D ----

/// First-input chain from a Store back to the nearest materialization.
pub(crate) fn deferred_chain(plan: &PhysicalPlan, store: NodeId) -> Option<(Vec<NodeId>, NodeId)> {
    let PhysOp::Store { input, .. } = &plan.nodes[store].op else {
        return None;
    };
    let mut chain = Vec::new();
    let mut cur = plan.resolve(*input);
    loop {
        match &plan.nodes[cur].op {
            PhysOp::Sort { .. } | PhysOp::SortAgg { .. } | PhysOp::Load { .. } => break,
            PhysOp::Map { input, .. }
            | PhysOp::Ext { input, .. }
            | PhysOp::Rename { input, .. }
            | PhysOp::MergeAgg { input, .. }
            | PhysOp::MergeJoin { a: input, .. }
            | PhysOp::MergeUnion { a: input, .. } => {
                chain.push(cur);
                cur = plan.resolve(*input);
            }
            _ => return None,
        }
    }
    chain.reverse();
    Some((chain, cur))
}

fn rule_d(cx: &mut Ctx, id: NodeId) -> Attempt {
    let PhysOp::Store { deferred: false, .. } = &cx.plan.nodes[id].op else {
        return Ok(None);
    };
    let Some((chain, base)) = deferred_chain(cx.plan, id) else {
        return Err("the last segment before the Store contains an operator that cannot be replayed".into());
    };
    if chain.is_empty() {
        return Err("nothing between the Store and its materialized input".into());
    }
    let names: Vec<String> = chain.iter().map(|&i| cx.plan.nodes[i].name.clone()).collect();
    if let PhysOp::Store { deferred, .. } = &mut cx.plan.nodes[id].op {
        *deferred = true;
    }
    cx.tag(id, Rule::D);
    Ok(Some(format!(
        "{} deferred to scans of {}",
        names.join(", "),
        cx.plan.nodes[base].name
    )))
}

// ---- P ----

/// Nearest Load upstream along first inputs.
fn upstream_load(plan: &PhysicalPlan, mut id: NodeId) -> Option<NodeId> {
    loop {
        id = plan.resolve(id);
        let ins = plan.nodes[id].op.inputs();
        if matches!(plan.nodes[id].op, PhysOp::Load { .. }) {
            return Some(id);
        }
        id = *ins.first()?;
    }
}

fn rule_p(cx: &mut Ctx, id: NodeId) -> Attempt {
    let (input, set) = match &cx.plan.nodes[id].op {
        PhysOp::Sort { input, splits_from: None, .. }
        | PhysOp::SortAgg { input, splits_from: None, .. }
        | PhysOp::Store { input, splits_from: None, .. } => (*input, true),
        _ => (0, false),
    };
    if !set {
        return Ok(None);
    }
    let Some(l) = upstream_load(cx.plan, input) else {
        return Ok(None);
    };
    let PhysOp::Load { table, schema, .. } = &cx.plan.nodes[l].op else {
        return Ok(None);
    };
    let out = &cx.plan.nodes[id].schema;
    let (Some(k), Some(lk)) = (out.keys.first(), schema.keys.first()) else {
        return Ok(None);
    };
    if k.name != lk.name || k.ty != lk.ty {
        return Ok(None);
    }
    let table = table.clone();
    match &mut cx.plan.nodes[id].op {
        PhysOp::Sort { splits_from, .. } | PhysOp::SortAgg { splits_from, .. } | PhysOp::Store { splits_from, .. } => {
            *splits_from = Some(table.clone())
        }
        _ => unreachable!(),
    }
    cx.tag(id, Rule::P);
    Ok(Some(format!("pre-split on the splits of '{table}'")))
}

// ---- E ----

fn rule_e(cx: &mut Ctx, id: NodeId) -> Attempt {
    if cx.plan.encoding == ValueEncoding::Packed {
        return Ok(None);
    }
    if !matches!(
        cx.plan.nodes[id].op,
        PhysOp::Sort { .. } | PhysOp::SortAgg { .. } | PhysOp::Store { .. }
    ) {
        return Ok(None);
    }
    cx.plan.encoding = ValueEncoding::Packed;
    let live = cx.plan.live();
    for i in 0..cx.plan.nodes.len() {
        if live[i]
            && matches!(
                cx.plan.nodes[i].op,
                PhysOp::Sort { .. } | PhysOp::SortAgg { .. } | PhysOp::Store { .. }
            )
        {
            cx.tag(i, Rule::E);
        }
    }
    Ok(Some("materialized values written in packed form".into()))
}
