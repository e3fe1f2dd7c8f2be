use std::collections::{BTreeMap, VecDeque};
use std::iter::Peekable;
use std::sync::Arc;

use crate::error::{LaraError, Result};
use crate::metrics::Metrics;
use crate::physical::buffer::GroupBuffer;
use crate::physical::{ExecContext, Record, RecordIter, RowStream, SPOT_CHECK_EVERY};
use crate::schema::{AttributeSchema, Schema};
use crate::storage::encoding::{encode_key, ValueEncoding};
use crate::storage::sort::{Combiner, ExternalSorter, SortConfig};
use crate::storage::store::{Catalog, SortedTableStore, WriteOptions};
use crate::table::{join_schema, union_schema, KeyTuple, UdfList};
use crate::udf::expr::BoundExpr;
use crate::udf::func::{BoundBinary, BoundExt, ExtFn, PlusFn, TimesFn};
use crate::value::{ScalarType, Value};

fn key_types(s: &Schema) -> Vec<ScalarType> {
    s.keys.iter().map(|k| k.ty).collect()
}

/// Number of leading path attributes both schemas share, checking that the
/// shared keys form a common prefix of both paths.
fn common_prefix(a: &Schema, b: &Schema, what: &str) -> Result<usize> {
    let common: Vec<&str> = a
        .keys
        .iter()
        .filter(|k| b.has_key(&k.name))
        .map(|k| k.name.as_str())
        .collect();
    let n = common.len();
    let ap: Vec<&str> = a.keys.iter().take(n).map(|k| k.name.as_str()).collect();
    let bp: Vec<&str> = b.keys.iter().take(n).map(|k| k.name.as_str()).collect();
    if ap != bp || ap.iter().any(|k| !common.contains(k)) {
        return Err(LaraError::SortRequired(format!(
            "{what} needs common keys {common:?} as a shared path prefix, got {:?} and {:?}",
            a.key_names(),
            b.key_names()
        )));
    }
    Ok(n)
}

/// Output schema of MergeJoin: path [c, a, b].
pub fn merge_join_schema(a: &Schema, b: &Schema, times: &UdfList<TimesFn>) -> Result<Schema> {
    common_prefix(a, b, "MergeJoin")?;
    Ok(join_schema(a, b, times)?.0)
}

#[derive(Clone, Default)]
pub struct JoinOptions {
    /// Predicate over the output key; pairs failing it are never multiplied.
    pub key_filter: Option<crate::udf::expr::ScalarExpr>,
}

struct MergeJoin {
    a: Peekable<RecordIter>,
    b: Peekable<RecordIter>,
    nc: usize,
    ops: Vec<BoundBinary>,
    ai: Vec<usize>,
    bi: Vec<usize>,
    ad: Vec<Value>,
    bd: Vec<Value>,
    out_defaults: Vec<Value>,
    group: GroupBuffer,
    group_prefix: Option<KeyTuple>,
    pending: VecDeque<Record>,
    filter: Option<BoundExpr>,
    metrics: Arc<Metrics>,
    check_laws: bool,
    seen: u64,
    done: bool,
}

impl MergeJoin {
    fn check_unmatched(&mut self, vals: &[Value], left: bool) -> Result<()> {
        if !self.check_laws {
            return Ok(());
        }
        self.seen += 1;
        if self.seen % SPOT_CHECK_EVERY != 1 {
            return Ok(());
        }
        for (j, op) in self.ops.iter().enumerate() {
            let r = if left {
                op.apply(&vals[self.ai[j]], &self.bd[self.bi[j]])
            } else {
                op.apply(&self.ad[self.ai[j]], &vals[self.bi[j]])
            };
            if r != self.out_defaults[j] {
                return Err(LaraError::property(format!(
                    "⊗ annihilator law fails on live data: {} gives {r}, expected {}",
                    if left { &vals[self.ai[j]] } else { &vals[self.bi[j]] },
                    self.out_defaults[j]
                )));
            }
        }
        Ok(())
    }

    fn load_group(&mut self, prefix: &[Value]) -> Result<()> {
        self.group.clear()?;
        loop {
            let ord = match self.b.peek() {
                None => break,
                Some(Err(_)) => return Err(self.b.next().unwrap().unwrap_err()),
                Some(Ok(r)) => r.key[..self.nc].cmp(prefix),
            };
            match ord {
                std::cmp::Ordering::Less => {
                    let r = self.b.next().unwrap()?;
                    self.check_unmatched(&r.vals, false)?;
                }
                std::cmp::Ordering::Equal => {
                    let r = self.b.next().unwrap()?;
                    self.group.push(r)?;
                }
                std::cmp::Ordering::Greater => break,
            }
        }
        self.group_prefix = Some(prefix.to_vec());
        Ok(())
    }

    fn step(&mut self) -> Result<Option<Record>> {
        loop {
            if let Some(r) = self.pending.pop_front() {
                return Ok(Some(r));
            }
            let Some(ar) = self.a.next() else {
                // drain b so its unmatched records are still spot-checked
                if self.check_laws {
                    while let Some(r) = self.b.next() {
                        let r = r?;
                        self.check_unmatched(&r.vals, false)?;
                    }
                }
                return Ok(None);
            };
            let ar = ar?;
            let prefix = &ar.key[..self.nc];
            if self.group_prefix.as_deref() != Some(prefix) {
                let p = prefix.to_vec();
                self.load_group(&p)?;
            }
            if self.group.is_empty() {
                self.check_unmatched(&ar.vals, true)?;
                continue;
            }
            let MergeJoin {
                group,
                pending,
                ops,
                ai,
                bi,
                out_defaults,
                filter,
                metrics,
                nc,
                ..
            } = self;
            let mut products = 0u64;
            group.for_each(|br| {
                let mut key = ar.key.clone();
                key.extend_from_slice(&br.key[*nc..]);
                if let Some(f) = filter {
                    if !f.eval_bool(&key) {
                        return Ok(());
                    }
                }
                products += 1;
                let vals: Vec<Value> = ops
                    .iter()
                    .enumerate()
                    .map(|(j, op)| op.apply(&ar.vals[ai[j]], &br.vals[bi[j]]))
                    .collect();
                if vals != *out_defaults {
                    pending.push_back(Record { key, vals });
                }
                Ok(())
            })?;
            Metrics::add(&metrics.partial_products, products);
        }
    }
}

impl Iterator for MergeJoin {
    type Item = Result<Record>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.step() {
            Ok(Some(r)) => Some(Ok(r)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// MergeJoin a, b by ⊗: for each common-key group, the cross product of the
/// two groups. b's group is buffered (spilling past the budget) while a
/// streams.
pub fn merge_join(
    a: RowStream,
    b: RowStream,
    times: &UdfList<TimesFn>,
    opts: &JoinOptions,
    ctx: &ExecContext,
) -> Result<RowStream> {
    let nc = common_prefix(&a.schema, &b.schema, "MergeJoin")?;
    let (out, ops) = join_schema(&a.schema, &b.schema, times)?;
    let names = out.value_names();
    let ai = names.iter().map(|n| a.schema.value_index(n).unwrap()).collect();
    let bi = names.iter().map(|n| b.schema.value_index(n).unwrap()).collect();
    let filter = match &opts.key_filter {
        Some(e) => {
            let layout: Vec<(String, ScalarType)> = out.keys.iter().map(|k| (k.name.clone(), k.ty)).collect();
            Some(e.bind_typed(&layout)?)
        }
        None => None,
    };
    let group = GroupBuffer::new(
        ctx.join_budget,
        key_types(&b.schema),
        b.schema.values.iter().map(|v| v.ty).collect(),
    );
    let j = MergeJoin {
        ad: a.schema.defaults(),
        bd: b.schema.defaults(),
        a: a.into_iter().peekable(),
        b: b.into_iter().peekable(),
        nc,
        ops,
        ai,
        bi,
        out_defaults: out.defaults(),
        group,
        group_prefix: None,
        pending: VecDeque::new(),
        filter,
        metrics: ctx.metrics.clone(),
        check_laws: ctx.check_laws,
        seen: 0,
        done: false,
    };
    Ok(RowStream::new(out, Box::new(j)))
}

/// Positions, in the output key, of the input path attributes that lead the
/// output (the "segment"), plus the output key order.
struct AggLayout {
    out_keys: Vec<AttributeSchema>,
    /// input key position of each output key
    kpos: Vec<usize>,
    /// length of the input path prefix made of output keys
    segment: usize,
}

fn agg_layout(input: &Schema, on: &[String], segmented: bool) -> Result<AggLayout> {
    for n in on {
        if !input.has_key(n) {
            return Err(LaraError::schema(format!("cannot aggregate on unknown key `{n}`")));
        }
    }
    let segment = input.keys.iter().take_while(|k| on.contains(&k.name)).count();
    if segment < on.len() && !(segmented && segment > 0) {
        return Err(LaraError::SortRequired(format!(
            "MergeAgg on {on:?} needs them as a prefix of path {:?}",
            input.key_names()
        )));
    }
    let mut names: Vec<String> = input.keys[..segment].iter().map(|k| k.name.clone()).collect();
    for n in on {
        if !names.contains(n) {
            names.push(n.clone());
        }
    }
    let kpos = names.iter().map(|n| input.key_index(n).unwrap()).collect();
    let out_keys = names.iter().map(|n| input.key(n).unwrap().clone()).collect();
    Ok(AggLayout {
        out_keys,
        kpos,
        segment,
    })
}

/// Output schema of MergeAgg on `on`. In segmented mode `on` only needs to
/// share a non-empty leading prefix with the path; groups are then collected
/// per segment of equal prefix.
pub fn merge_agg_schema(input: &Schema, on: &[String], plus: &UdfList<PlusFn>, segmented: bool) -> Result<Schema> {
    let l = agg_layout(input, on, segmented)?;
    let e = Schema::new(l.out_keys.clone(), vec![])?;
    let (u, _) = union_schema(input, &e, plus)?;
    let order: Vec<String> = l.out_keys.iter().map(|k| k.name.clone()).collect();
    u.with_key_order(&order)
}

type Partial = (KeyTuple, Vec<Option<Value>>);

/// Folds consecutive groups of one stream into partial results.
struct GroupFold {
    input: Peekable<RecordIter>,
    kpos: Vec<usize>,
    segment: usize,
    /// input value position feeding each output value
    vpos: Vec<Option<usize>>,
    ops: Arc<Vec<BoundBinary>>,
    defaults: Vec<Value>,
    check_laws: bool,
    seen: u64,
    ready: VecDeque<Partial>,
}

impl GroupFold {
    fn fold_into(&mut self, acc: &mut [Option<Value>], vals: &[Value]) -> Result<()> {
        self.seen += 1;
        let check = self.check_laws && self.seen % SPOT_CHECK_EVERY == 1;
        for (j, p) in self.vpos.iter().enumerate() {
            let Some(p) = p else { continue };
            let x = &vals[*p];
            if check && self.ops[j].apply(x, &self.defaults[j]) != *x {
                return Err(LaraError::property(format!(
                    "⊕ identity law fails on live data: {x} ⊕ {} is not {x}",
                    self.defaults[j]
                )));
            }
            acc[j] = Some(match acc[j].take() {
                None => x.clone(),
                Some(prev) => self.ops[j].apply(&prev, x),
            });
        }
        Ok(())
    }

    fn next_partial(&mut self) -> Result<Option<Partial>> {
        if let Some(p) = self.ready.pop_front() {
            return Ok(Some(p));
        }
        let Some(first) = self.input.next() else {
            return Ok(None);
        };
        let first = first?;
        let seg: Vec<Value> = first.key[..self.segment].to_vec();
        let mut groups: BTreeMap<KeyTuple, Vec<Option<Value>>> = BTreeMap::new();
        let mut rec = Some(first);
        loop {
            let r = rec.take().unwrap();
            let k: KeyTuple = self.kpos.iter().map(|&i| r.key[i].clone()).collect();
            let mut acc = groups.remove(&k).unwrap_or_else(|| vec![None; self.vpos.len()]);
            self.fold_into(&mut acc, &r.vals)?;
            groups.insert(k, acc);
            match self.input.peek() {
                Some(Ok(n)) if n.key[..self.segment] == seg[..] => rec = Some(self.input.next().unwrap()?),
                Some(Err(_)) => return Err(self.input.next().unwrap().unwrap_err()),
                _ => break,
            }
        }
        self.ready.extend(groups);
        Ok(self.ready.pop_front())
    }
}

struct MergeUnion {
    a: GroupFold,
    b: Option<GroupFold>,
    a_head: Option<Partial>,
    b_head: Option<Partial>,
    primed: bool,
    ops: Arc<Vec<BoundBinary>>,
    defaults: Vec<Value>,
    done: bool,
}

impl MergeUnion {
    fn step(&mut self) -> Result<Option<Record>> {
        if !self.primed {
            self.primed = true;
            self.a_head = self.a.next_partial()?;
            if let Some(b) = self.b.as_mut() {
                self.b_head = b.next_partial()?;
            }
        }
        loop {
            let take_a = match (&self.a_head, &self.b_head) {
                (None, None) => return Ok(None),
                (Some(_), None) => Some(true),
                (None, Some(_)) => Some(false),
                (Some(x), Some(y)) => match x.0.cmp(&y.0) {
                    std::cmp::Ordering::Less => Some(true),
                    std::cmp::Ordering::Greater => Some(false),
                    std::cmp::Ordering::Equal => None,
                },
            };
            let (key, acc) = match take_a {
                Some(true) => {
                    let p = self.a_head.take().unwrap();
                    self.a_head = self.a.next_partial()?;
                    p
                }
                Some(false) => {
                    let p = self.b_head.take().unwrap();
                    self.b_head = self.b.as_mut().unwrap().next_partial()?;
                    p
                }
                None => {
                    let (k, mut x) = self.a_head.take().unwrap();
                    let (_, y) = self.b_head.take().unwrap();
                    self.a_head = self.a.next_partial()?;
                    self.b_head = self.b.as_mut().unwrap().next_partial()?;
                    for (j, yv) in y.into_iter().enumerate() {
                        if let Some(yv) = yv {
                            x[j] = Some(match x[j].take() {
                                None => yv,
                                Some(xv) => self.ops[j].apply(&xv, &yv),
                            });
                        }
                    }
                    (k, x)
                }
            };
            let vals: Vec<Value> = acc
                .into_iter()
                .zip(&self.defaults)
                .map(|(v, d)| v.unwrap_or_else(|| d.clone()))
                .collect();
            if vals != self.defaults {
                return Ok(Some(Record { key, vals }));
            }
        }
    }
}

impl Iterator for MergeUnion {
    type Item = Result<Record>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.step() {
            Ok(Some(r)) => Some(Ok(r)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

fn group_fold(s: RowStream, out: &Schema, layout: &AggLayout, ops: Arc<Vec<BoundBinary>>, ctx: &ExecContext) -> GroupFold {
    let vpos = out.values.iter().map(|v| s.schema.value_index(&v.name)).collect();
    GroupFold {
        input: s.into_iter().peekable(),
        kpos: layout.kpos.clone(),
        segment: layout.segment,
        vpos,
        ops,
        defaults: out.defaults(),
        check_laws: ctx.check_laws,
        seen: 0,
        ready: VecDeque::new(),
    }
}

/// MergeAgg a on `on` by ⊕.
pub fn merge_agg(a: RowStream, on: &[String], plus: &UdfList<PlusFn>, segmented: bool, ctx: &ExecContext) -> Result<RowStream> {
    let layout = agg_layout(&a.schema, on, segmented)?;
    let e = Schema::new(layout.out_keys.clone(), vec![])?;
    let (u, ops) = union_schema(&a.schema, &e, plus)?;
    let order: Vec<String> = layout.out_keys.iter().map(|k| k.name.clone()).collect();
    let out = u.with_key_order(&order)?;
    let ops = Arc::new(ops);
    let fa = group_fold(a, &out, &layout, ops.clone(), ctx);
    let m = MergeUnion {
        a: fa,
        b: None,
        a_head: None,
        b_head: None,
        primed: false,
        ops,
        defaults: out.defaults(),
        done: false,
    };
    Ok(RowStream::new(out, Box::new(m)))
}

/// Output schema of MergeUnion: path [c], the shared key prefix.
pub fn merge_union_schema(a: &Schema, b: &Schema, plus: &UdfList<PlusFn>) -> Result<Schema> {
    let (u, _) = union_schema(a, b, plus)?;
    for (side, s) in [("left", a), ("right", b)] {
        let prefix: Vec<String> = s.keys.iter().take(u.keys.len()).map(|k| k.name.clone()).collect();
        if prefix != u.key_names() {
            return Err(LaraError::SortRequired(format!(
                "MergeUnion needs {:?} as the {side} path prefix, got {:?}",
                u.key_names(),
                s.key_names()
            )));
        }
    }
    Ok(u)
}

pub fn merge_union(a: RowStream, b: RowStream, plus: &UdfList<PlusFn>, ctx: &ExecContext) -> Result<RowStream> {
    let out = merge_union_schema(&a.schema, &b.schema, plus)?;
    let (_, ops) = union_schema(&a.schema, &b.schema, plus)?;
    let ops = Arc::new(ops);
    let on = out.key_names();
    let la = agg_layout(&a.schema, &on, false)?;
    let lb = agg_layout(&b.schema, &on, false)?;
    let fa = group_fold(a, &out, &la, ops.clone(), ctx);
    let fb = group_fold(b, &out, &lb, ops.clone(), ctx);
    let m = MergeUnion {
        a: fa,
        b: Some(fb),
        a_head: None,
        b_head: None,
        primed: false,
        ops,
        defaults: out.defaults(),
        done: false,
    };
    Ok(RowStream::new(out, Box::new(m)))
}

/// Output schema of Ext: the input path followed by f's new keys, or the
/// explicit `over` path.
pub fn ext_schema(input: &Schema, f: &ExtFn, over: Option<&[String]>) -> Result<Schema> {
    let s = f.bind(input)?.output_schema()?;
    match over {
        Some(p) => s.with_key_order(p),
        None => Ok(s),
    }
}

struct ExtStream {
    input: RecordIter,
    f: BoundExt,
    perm: Option<Vec<usize>>,
    pending: VecDeque<Record>,
    check_laws: bool,
    seen: u64,
    done: bool,
}

impl ExtStream {
    fn step(&mut self) -> Result<Option<Record>> {
        loop {
            if let Some(r) = self.pending.pop_front() {
                return Ok(Some(r));
            }
            let Some(r) = self.input.next() else {
                return Ok(None);
            };
            let r = r?;
            self.seen += 1;
            if self.check_laws && self.seen % SPOT_CHECK_EVERY == 1 && !self.f.empty_on_defaults(&r.key)? {
                return Err(LaraError::property(
                    "ext function yields support for default values on live data",
                ));
            }
            for (nk, vals) in self.f.apply(&r.key, &r.vals)? {
                let mut key = r.key.clone();
                key.extend(nk);
                let key = match &self.perm {
                    Some(p) => p.iter().map(|&i| key[i].clone()).collect(),
                    None => key,
                };
                self.pending.push_back(Record { key, vals });
            }
        }
    }
}

impl Iterator for ExtStream {
    type Item = Result<Record>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        match self.step() {
            Ok(Some(r)) => Some(Ok(r)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Ext (and Map, with no new keys). With `over`, the output is declared to
/// arrive in that path order; the stream's order check enforces it.
pub fn ext_map_stream(input: RowStream, f: &ExtFn, over: Option<&[String]>, ctx: &ExecContext) -> Result<RowStream> {
    let b = f.bind(&input.schema)?;
    let natural = b.output_schema()?;
    let (out, perm) = match over {
        Some(p) => (natural.with_key_order(p)?, Some(natural.key_permutation(p)?)),
        None => (natural, None),
    };
    let e = ExtStream {
        input: input.into_iter(),
        f: b,
        perm,
        pending: VecDeque::new(),
        check_laws: ctx.check_laws,
        seen: 0,
        done: false,
    };
    Ok(RowStream::new(out, Box::new(e)))
}

pub fn rename_stream(input: RowStream, from: &str, to: &str) -> Result<RowStream> {
    let schema = input.schema.rename(from, to)?;
    Ok(RowStream::new(schema, input.into_iter()))
}

fn store_scan_stream(store: &SortedTableStore, scan: crate::storage::store::StoreScan, metrics: Arc<Metrics>) -> RowStream {
    let iter = scan
        .with_metrics(metrics)
        .map(|r| r.map(|(key, vals)| Record { key, vals }));
    RowStream::new(store.schema().clone(), Box::new(iter))
}

/// Load a stored table, optionally restricted to an inclusive prefix range.
pub fn load_range(name: &str, lo: Option<&[Value]>, hi: Option<&[Value]>, ctx: &ExecContext) -> Result<RowStream> {
    let store = ctx.catalog.store(name)?;
    let scan = store.scan_range(lo, hi)?;
    Ok(store_scan_stream(&store, scan, ctx.metrics.clone()))
}

/// Options for sorts and stores inside a plan.
#[derive(Clone, Debug, Default)]
pub struct MaterializeOptions {
    pub encoding: ValueEncoding,
    pub splits: Vec<KeyTuple>,
    /// Write into the user catalog under this name instead of scratch.
    pub table: Option<String>,
}

fn write_opts(ctx: &ExecContext, m: &MaterializeOptions) -> WriteOptions {
    WriteOptions {
        encoding: m.encoding,
        combiner: None,
        splits: m.splits.clone(),
        run_rows: ctx.run_rows,
        metrics: Some(ctx.metrics.clone()),
    }
}

fn sorted_store(
    input: RowStream,
    target: &Schema,
    project: Vec<usize>,
    combiner: Option<Arc<Combiner>>,
    label: &str,
    m: &MaterializeOptions,
    ctx: &ExecContext,
) -> Result<SortedTableStore> {
    let mut sorter = ExternalSorter::new(
        target,
        combiner,
        SortConfig {
            run_rows: ctx.run_rows.unwrap_or(crate::storage::sort::DEFAULT_RUN_ROWS),
            encoding: m.encoding,
        },
        ctx.metrics.clone(),
    );
    for r in input {
        let r = r?;
        let key: Vec<Value> = project.iter().map(|&i| r.key[i].clone()).collect();
        sorter.push(&key, r.vals)?;
    }
    let sorted = sorter.finish()?;
    match &m.table {
        Some(t) => ctx.catalog.write_sorted(t, target, sorted, &write_opts(ctx, m)),
        None => ctx
            .scratch
            .write_sorted(&ctx.scratch_name(label), target, sorted, &write_opts(ctx, m)),
    }
}

/// Sort a stream to `path`, materializing it as a scratch store.
pub fn sort_stream(input: RowStream, path: &[String], label: &str, m: &MaterializeOptions, ctx: &ExecContext) -> Result<(RowStream, SortedTableStore)> {
    let target = input.schema.with_key_order(path)?;
    let perm = input.schema.key_permutation(path)?;
    let store = sorted_store(input, &target, perm, None, label, m, ctx)?;
    let scan = store.scan()?;
    Ok((store_scan_stream(&store, scan, ctx.metrics.clone()), store))
}

pub fn sort_agg_schema(input: &Schema, path: &[String], plus: &UdfList<PlusFn>) -> Result<Schema> {
    let l = agg_layout(&input.with_key_order(&reorder_first(input, path))?, path, false)?;
    let e = Schema::new(l.out_keys, vec![])?;
    let (u, _) = union_schema(input, &e, plus)?;
    u.with_key_order(path)
}

fn reorder_first(input: &Schema, path: &[String]) -> Vec<String> {
    let mut p: Vec<String> = path.to_vec();
    for k in input.key_names() {
        if !p.contains(&k) {
            p.push(k);
        }
    }
    p
}

/// SortAgg: sort to `path` (a subset of the keys) while folding equal keys
/// with ⊕ in every run and merge.
pub fn sort_agg(input: RowStream, path: &[String], plus: &UdfList<PlusFn>, label: &str, m: &MaterializeOptions, ctx: &ExecContext) -> Result<(RowStream, SortedTableStore)> {
    let out = sort_agg_schema(&input.schema, path, plus)?;
    let c = Combiner::new(&out, plus)?;
    if !(c.associative() && c.commutative()) {
        return Err(LaraError::plan(
            "SortAgg needs an associative and commutative ⊕; use Sort then MergeAgg",
        ));
    }
    // values may gain attributes from ⊕'s schema only through the input
    let vperm: Vec<usize> = out
        .values
        .iter()
        .map(|v| input.schema.value_index(&v.name).unwrap())
        .collect();
    let kperm = input.schema.key_permutation(path)?;
    let input = if vperm.iter().enumerate().all(|(i, &p)| i == p) && vperm.len() == input.schema.values.len() {
        input
    } else {
        let schema = input.schema.clone();
        let iter = input.into_iter().map(move |r| {
            r.map(|r| Record {
                vals: vperm.iter().map(|&i| r.vals[i].clone()).collect(),
                key: r.key,
            })
        });
        RowStream::new(schema, Box::new(iter))
    };
    let store = sorted_store(input, &out, kperm, Some(Arc::new(c)), label, m, ctx)?;
    let scan = store.scan()?;
    Ok((store_scan_stream(&store, scan, ctx.metrics.clone()), store))
}

fn write_stream(input: RowStream, catalog: &Catalog, name: &str, m: &MaterializeOptions, ctx: &ExecContext) -> Result<SortedTableStore> {
    let schema = input.schema.clone();
    let types = key_types(&schema);
    let records = input
        .into_iter()
        .map(move |r| r.and_then(|r| Ok((encode_key(&r.key, &types)?, r.vals))));
    catalog.write_sorted(name, &schema, records, &write_opts(ctx, m))
}

/// Store a stream under `name` without changing its access path.
pub fn store_stream(input: RowStream, name: &str, m: &MaterializeOptions, ctx: &ExecContext) -> Result<SortedTableStore> {
    write_stream(input, &ctx.catalog, name, m, ctx)
}

/// Materialize an already ordered stream so it can be scanned more than
/// once: into scratch, or into the catalog when `m.table` is set.
pub fn spool_stream(input: RowStream, label: &str, m: &MaterializeOptions, ctx: &ExecContext) -> Result<(RowStream, SortedTableStore)> {
    let store = match &m.table {
        Some(t) => write_stream(input, &ctx.catalog, t, m, ctx)?,
        None => write_stream(input, &ctx.scratch, &ctx.scratch_name(label), m, ctx)?,
    };
    Ok((scan_store(&store, ctx)?, store))
}

/// Scan a whole store as a stream.
pub fn scan_store(store: &SortedTableStore, ctx: &ExecContext) -> Result<RowStream> {
    Ok(store_scan_stream(store, store.scan()?, ctx.metrics.clone()))
}
