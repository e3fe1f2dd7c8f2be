//! Pull-based execution of physical plans.
//!
//! Loads, Sorts and SortAggs are materialized and may be scanned any number
//! of times. A streaming node read by more than one consumer is spooled
//! first. A deferred Store writes no data: it records a view that replays
//! its final segment whenever the table is opened.

use std::collections::{BTreeMap, HashMap};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{LaraError, Result};
use crate::metrics::MetricsSnapshot;
use crate::physical::{
    ext_map_stream, load_range, merge_agg, merge_join, merge_union, rename_stream, scan_store, sort_agg,
    sort_stream, spool_stream, store_stream, ExecContext, JoinOptions, MaterializeOptions, RowStream,
};
use crate::planner::logical::NodeId;
use crate::planner::plan::{PhysNode, PhysOp, PhysicalPlan};
use crate::planner::rules::deferred_chain;
use crate::storage::encoding::ValueEncoding;
use crate::storage::store::{Catalog, SortedTableStore};
use crate::table::{AssociativeTable, KeyTuple};

/// One materialization and the time spent producing it, excluding time
/// spent in the materializations it read.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageTiming {
    pub node: String,
    pub label: String,
    pub kind: String,
    pub records: u64,
    pub exclusive: Duration,
}

#[derive(Clone, Debug, Default)]
pub struct ExecReport {
    /// Stored table name and record count; deferred tables report the rows
    /// a scan would produce only if `replay` was requested.
    pub stored: Vec<(String, u64)>,
    pub stages: Vec<StageTiming>,
    pub metrics: MetricsSnapshot,
    pub elapsed: Duration,
}

/// Replay definition kept in a deferred table's manifest.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ViewDef {
    pub plan: PhysicalPlan,
    pub output: NodeId,
    pub upper: Option<(String, String)>,
    /// Tables read by the view and the versions it was defined against.
    pub inputs: Vec<(String, u64)>,
}

struct Executor<'a> {
    plan: &'a PhysicalPlan,
    ctx: &'a ExecContext,
    consumers: Vec<Vec<NodeId>>,
    cache: HashMap<NodeId, SortedTableStore>,
    /// Nodes written into the user catalog under a fixed name.
    persist: HashMap<NodeId, String>,
    stages: Vec<StageTiming>,
    nested: Vec<Duration>,
    /// Stores whose table was written while spooling their input.
    written: HashMap<NodeId, u64>,
}

fn upper_stream(input: RowStream, upper: &Option<(String, String)>) -> Result<RowStream> {
    let Some((x, y)) = upper else {
        return Ok(input);
    };
    let s = &input.schema;
    let (i, j) = match (s.key_index(x), s.key_index(y)) {
        (Some(i), Some(j)) => (i, j),
        _ => return Err(LaraError::schema(format!("UPPER keys `{x}`, `{y}` not in {s}"))),
    };
    let schema = input.schema.clone();
    let iter = input
        .into_iter()
        .filter(move |r| r.as_ref().map_or(true, |r| r.key[i] <= r.key[j]));
    Ok(RowStream::new(schema, Box::new(iter)))
}

impl<'a> Executor<'a> {
    fn new(plan: &'a PhysicalPlan, ctx: &'a ExecContext) -> Executor<'a> {
        let mut consumers = plan.consumers();
        // a deferred Store does not read its input
        for c in consumers.iter_mut() {
            c.retain(|&n| !matches!(plan.nodes[n].op, PhysOp::Store { deferred: true, .. }));
        }
        Executor {
            plan,
            ctx,
            consumers,
            cache: HashMap::new(),
            persist: HashMap::new(),
            stages: vec![],
            nested: vec![],
            written: HashMap::new(),
        }
    }

    fn node(&self, id: NodeId) -> &'a PhysNode {
        &self.plan.nodes[id]
    }

    fn splits(&self, from: &Option<String>) -> Result<Vec<KeyTuple>> {
        let Some(t) = from else {
            return Ok(vec![]);
        };
        let mut out: Vec<KeyTuple> = self
            .ctx
            .catalog
            .store(t)?
            .splits()
            .iter()
            .filter_map(|s| s.first().map(|v| vec![v.clone()]))
            .collect();
        out.dedup();
        Ok(out)
    }

    fn mopts(&self, id: NodeId, splits_from: &Option<String>) -> Result<MaterializeOptions> {
        Ok(MaterializeOptions {
            encoding: self.plan.encoding,
            splits: self.splits(splits_from)?,
            table: self.persist.get(&id).cloned(),
        })
    }

    /// Run `f` as one stage and record its exclusive time.
    fn stage(&mut self, id: NodeId, f: impl FnOnce(&mut Self) -> Result<SortedTableStore>) -> Result<SortedTableStore> {
        self.nested.push(Duration::ZERO);
        let start = Instant::now();
        let out = f(self);
        let total = start.elapsed();
        let inner = self.nested.pop().unwrap_or_default();
        if let Some(parent) = self.nested.last_mut() {
            *parent += total;
        }
        let store = out?;
        let n = self.node(id);
        self.stages.push(StageTiming {
            node: n.name.clone(),
            label: n.label.to_string(),
            kind: n.op.kind().to_string(),
            records: store.records(),
            exclusive: total.saturating_sub(inner),
        });
        Ok(store)
    }

    fn materialize(&mut self, id: NodeId) -> Result<()> {
        if self.cache.contains_key(&id) {
            return Ok(());
        }
        let plan = self.plan;
        let label = plan.nodes[id].name.clone();
        let store = match &plan.nodes[id].op {
            PhysOp::Sort { input, path, splits_from } => self.stage(id, |ex| {
                let s = ex.stream(*input)?;
                let m = ex.mopts(id, splits_from)?;
                Ok(sort_stream(s, path, &label, &m, ex.ctx)?.1)
            })?,
            PhysOp::SortAgg {
                input,
                path,
                plus,
                splits_from,
            } => self.stage(id, |ex| {
                let s = ex.stream(*input)?;
                let m = ex.mopts(id, splits_from)?;
                Ok(sort_agg(s, path, plus, &label, &m, ex.ctx)?.1)
            })?,
            _ => {
                let plain = self.consumers[id].iter().copied().find(|&c| {
                    matches!(&plan.nodes[c].op, PhysOp::Store { upper: None, deferred: false, .. })
                });
                let mut splits_from = None;
                if let (Some(c), false) = (plain, self.persist.contains_key(&id)) {
                    if let PhysOp::Store { table, splits_from: sf, .. } = &plan.nodes[c].op {
                        self.persist.insert(id, table.clone());
                        splits_from = sf.clone();
                    }
                }
                let store = self.stage(id, |ex| {
                    let s = ex.build(id)?;
                    let m = ex.mopts(id, &splits_from)?;
                    Ok(spool_stream(s, &label, &m, ex.ctx)?.1)
                })?;
                if let Some(c) = plain {
                    if let PhysOp::Store { table, .. } = &plan.nodes[c].op {
                        if self.persist.get(&id) == Some(table) {
                            self.written.insert(c, store.records());
                        }
                    }
                }
                store
            }
        };
        self.cache.insert(id, store);
        Ok(())
    }

    /// Output of `id` as a fresh stream.
    fn stream(&mut self, id: NodeId) -> Result<RowStream> {
        let id = self.plan.resolve(id);
        let op = &self.node(id).op;
        let shared = self.consumers[id].len() > 1 || self.persist.contains_key(&id);
        let must = matches!(op, PhysOp::Sort { .. } | PhysOp::SortAgg { .. })
            || (shared && !matches!(op, PhysOp::Load { .. }));
        if must {
            self.materialize(id)?;
            return scan_store(&self.cache[&id], self.ctx);
        }
        self.build(id)
    }

    /// Streaming evaluation of `id` itself.
    fn build(&mut self, id: NodeId) -> Result<RowStream> {
        let ctx = self.ctx;
        match &self.node(id).op {
            PhysOp::Load { table, from, to, .. } => {
                let lo = from.as_ref().map(std::slice::from_ref);
                let hi = to.as_ref().map(std::slice::from_ref);
                load_range(table, lo, hi, ctx)
            }
            PhysOp::Alias { input } => self.stream(*input),
            PhysOp::Sort { .. } | PhysOp::SortAgg { .. } => self.stream(id),
            PhysOp::MergeJoin { a, b, times, key_filter } => {
                let (sa, sb) = (self.stream(*a)?, self.stream(*b)?);
                let opts = JoinOptions {
                    key_filter: key_filter.clone(),
                };
                merge_join(sa, sb, times, &opts, ctx)
            }
            PhysOp::MergeUnion { a, b, plus } => {
                let (sa, sb) = (self.stream(*a)?, self.stream(*b)?);
                merge_union(sa, sb, plus, ctx)
            }
            PhysOp::MergeAgg { input, on, plus, segmented } => {
                let s = self.stream(*input)?;
                merge_agg(s, on, plus, *segmented, ctx)
            }
            PhysOp::Ext { input, f, over } => {
                let s = self.stream(*input)?;
                ext_map_stream(s, f, over.as_deref(), ctx)
            }
            PhysOp::Map { input, f } => {
                let s = self.stream(*input)?;
                ext_map_stream(s, f, None, ctx)
            }
            PhysOp::Rename { input, from, to } => {
                let s = self.stream(*input)?;
                rename_stream(s, from, to)
            }
            PhysOp::Store { input, upper, .. } => {
                let s = self.stream(*input)?;
                upper_stream(s, upper)
            }
        }
    }

    fn store(&mut self, id: NodeId) -> Result<(String, u64)> {
        let PhysOp::Store {
            input,
            table,
            upper,
            splits_from,
            deferred,
        } = &self.node(id).op
        else {
            unreachable!()
        };
        if *deferred {
            return self.store_view(id, table, upper);
        }
        if let Some(&n) = self.written.get(&id) {
            return Ok((table.clone(), n));
        }
        let m = self.mopts(id, splits_from)?;
        let input = *input;
        let table = table.clone();
        let store = self.stage(id, |ex| {
            let s = ex.stream(input)?;
            let s = upper_stream(s, upper)?;
            store_stream(s, &table, &m, ex.ctx)
        })?;
        Ok((table, store.records()))
    }

    /// Persist the chain's base and side inputs, then record the chain as a view.
    fn store_view(&mut self, id: NodeId, table: &str, upper: &Option<(String, String)>) -> Result<(String, u64)> {
        let (chain, base) =
            deferred_chain(self.plan, id).ok_or_else(|| LaraError::plan(format!("Store {table} cannot be deferred")))?;
        let mut sources = vec![base];
        for &c in &chain {
            if let PhysOp::MergeJoin { b, .. } | PhysOp::MergeUnion { b, .. } = &self.node(c).op {
                sources.push(self.plan.resolve(*b));
            }
        }
        let mut mini = PhysicalPlan {
            nodes: vec![],
            encoding: ValueEncoding::Text,
        };
        let mut remap: HashMap<NodeId, NodeId> = HashMap::new();
        let mut inputs = Vec::new();
        for s in sources {
            if remap.contains_key(&s) {
                continue;
            }
            let name = match &self.node(s).op {
                PhysOp::Load { table, from: None, to: None, .. } => table.clone(),
                _ => {
                    let n = self
                        .persist
                        .get(&s)
                        .cloned()
                        .unwrap_or_else(|| format!("{table}@{}", self.node(s).name));
                    if !self.cache.contains_key(&s) || !self.persist.contains_key(&s) {
                        self.cache.remove(&s);
                        self.persist.insert(s, n.clone());
                        self.materialize(s)?;
                    }
                    n
                }
            };
            let st = self.ctx.catalog.store(&name)?;
            inputs.push((name.clone(), st.version()));
            let mut n = self.node(s).clone();
            n.op = PhysOp::Load {
                table: name,
                schema: st.schema().clone(),
                from: None,
                to: None,
            };
            n.schema = st.schema().clone();
            remap.insert(s, mini.push(n));
        }
        for &c in &chain {
            let mut n = self.node(c).clone();
            let plan = self.plan;
            n.op.map_inputs(|i| remap[&plan.resolve(i)]);
            let nid = mini.push(n);
            remap.insert(c, nid);
        }
        let output = remap[chain.last().unwrap()];
        mini.refresh()?;
        let schema = mini.nodes[output].schema.clone();
        let view = ViewDef {
            plan: mini,
            output,
            upper: upper.clone(),
            inputs,
        };
        let empty = RowStream::new(schema, Box::new(std::iter::empty()));
        let m = MaterializeOptions {
            encoding: self.plan.encoding,
            ..Default::default()
        };
        let mut st = store_stream(empty, table, &m, self.ctx)?;
        st.set_view(Some(serde_json::to_value(&view)?))?;
        Ok((table.to_string(), 0))
    }
}

/// Execute every Store of `plan` in label order.
pub fn execute(plan: &PhysicalPlan, ctx: &ExecContext) -> Result<ExecReport> {
    let start = Instant::now();
    let before = ctx.metrics.snapshot();
    let mut ex = Executor::new(plan, ctx);
    let live = plan.live();
    let mut stores: Vec<NodeId> = (0..plan.nodes.len())
        .filter(|&i| live[i] && matches!(plan.nodes[i].op, PhysOp::Store { .. }))
        .collect();
    stores.sort_by_key(|&i| (plan.nodes[i].label, i));
    // deferred Stores go last so their bases are persisted under their own names
    stores.sort_by_key(|&i| matches!(plan.nodes[i].op, PhysOp::Store { deferred: true, .. }));
    for &s in &stores {
        if let PhysOp::Store { deferred: true, table, .. } = &plan.nodes[s].op {
            if let Some((_, base)) = deferred_chain(plan, s) {
                if !matches!(plan.nodes[base].op, PhysOp::Load { .. }) {
                    ex.persist
                        .entry(base)
                        .or_insert_with(|| format!("{table}@{}", plan.nodes[base].name));
                }
            }
        }
    }
    let mut stored = Vec::new();
    for s in stores {
        stored.push(ex.store(s)?);
    }
    Ok(ExecReport {
        stored,
        stages: ex.stages,
        metrics: ctx.metrics.snapshot().since(&before),
        elapsed: start.elapsed(),
    })
}

/// Evaluate one node of `plan` into memory.
pub fn execute_node(plan: &PhysicalPlan, id: NodeId, ctx: &ExecContext) -> Result<AssociativeTable> {
    let mut ex = Executor::new(plan, ctx);
    ex.stream(id)?.collect_table()
}

/// Open a stored table as a stream, replaying its view if it has one.
pub fn open_table(catalog: &Catalog, name: &str, ctx: &ExecContext) -> Result<RowStream> {
    let store = catalog.store(name)?;
    let Some(v) = store.manifest().view.clone() else {
        return scan_store(&store, ctx);
    };
    let view: ViewDef = serde_json::from_value(v)?;
    for (t, version) in &view.inputs {
        let now = catalog.store(t)?.version();
        if now != *version {
            return Err(LaraError::StaleView(format!(
                "'{name}' was deferred against version {version} of '{t}', which is now at version {now}"
            )));
        }
    }
    let mut sub = ctx.clone();
    sub.catalog = catalog.clone();
    let mut ex = Executor::new(&view.plan, &sub);
    let s = ex.stream(view.output)?;
    upper_stream(s, &view.upper)
}

/// Read a stored table into memory, replaying views.
pub fn read_table(catalog: &Catalog, name: &str, ctx: &ExecContext) -> Result<AssociativeTable> {
    open_table(catalog, name, ctx)?.collect_table()
}

/// Stored tables of a finished run, views replayed.
pub fn read_outputs(plan: &PhysicalPlan, ctx: &ExecContext) -> Result<BTreeMap<String, AssociativeTable>> {
    let mut out = BTreeMap::new();
    for n in &plan.nodes {
        if let PhysOp::Store { table, .. } = &n.op {
            out.insert(table.clone(), read_table(&ctx.catalog, table, ctx)?);
        }
    }
    Ok(out)
}
