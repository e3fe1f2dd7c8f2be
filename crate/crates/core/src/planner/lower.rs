//! Logical to physical lowering: pick merge operators and insert a Sort
//! wherever a merge operator's key prefix is missing from its input path.

use std::collections::HashMap;

use crate::error::{LaraError, Result};
use crate::planner::logical::{Label, LogicalOp, LogicalPlan, NodeId};
use crate::planner::plan::{PhysNode, PhysOp, PhysicalPlan};
use crate::storage::encoding::ValueEncoding;

struct Lowerer<'a> {
    lp: &'a LogicalPlan,
    pp: PhysicalPlan,
    /// Physical node for each logical node.
    phys: Vec<NodeId>,
    /// Logical node each physical node came from.
    origin: HashMap<NodeId, NodeId>,
    uses: Vec<usize>,
    memo: HashMap<(NodeId, Vec<String>), NodeId>,
    inserted: Vec<NodeId>,
}

fn rest(path: &[String], first: &[String]) -> Vec<String> {
    let mut out = first.to_vec();
    out.extend(path.iter().filter(|k| !first.contains(k)).cloned());
    out
}

/// Does `path` start with exactly the attributes of `set`, in any order?
fn prefix_is_set(path: &[String], set: &[String]) -> bool {
    path.len() >= set.len() && path[..set.len()].iter().all(|k| set.contains(k))
}

/// Shared-key order for a binary merge: a's if its prefix already covers
/// the shared keys, else b's, else the shared keys in a's path order.
pub(crate) fn merge_order(a: &[String], b: &[String]) -> Vec<String> {
    let common: Vec<String> = a.iter().filter(|k| b.contains(k)).cloned().collect();
    if prefix_is_set(a, &common) {
        a[..common.len()].to_vec()
    } else if prefix_is_set(b, &common) {
        b[..common.len()].to_vec()
    } else {
        common
    }
}

/// Path an aggregation on `on` can merge over; `None` when no Sort is needed.
pub(crate) fn agg_target(path: &[String], on: &[String]) -> Option<Vec<String>> {
    if prefix_is_set(path, on) {
        None
    } else {
        Some(rest(path, on))
    }
}

impl<'a> Lowerer<'a> {
    fn push(&mut self, name: &str, label: Label, op: PhysOp, hidden: bool) -> Result<NodeId> {
        let id = self.pp.push(PhysNode {
            name: name.to_string(),
            label,
            op,
            schema: crate::schema::Schema::new(vec![], vec![])?,
            hidden,
            display: None,
            rules: vec![],
        });
        self.pp.nodes[id].schema = self.pp.infer(id)?;
        Ok(id)
    }

    /// `pid` with keys in exactly the order `target`.
    fn ensure(&mut self, pid: NodeId, target: Vec<String>) -> Result<NodeId> {
        if self.pp.path(pid) == target {
            return Ok(pid);
        }
        if let Some(&id) = self.memo.get(&(pid, target.clone())) {
            return Ok(id);
        }
        let pushed = match self.origin.get(&pid).copied() {
            Some(lid) if self.uses[lid] == 1 => match &self.lp.node(lid).op {
                LogicalOp::Map { input, .. } => Some((*input, target.clone())),
                LogicalOp::Rename { input, from, to } => {
                    let t = target.iter().map(|k| if k == to { from.clone() } else { k.clone() }).collect();
                    Some((*input, t))
                }
                _ => None,
            },
            _ => None,
        };
        let id = match pushed {
            Some((linput, t)) => {
                let inner = self.ensure(self.phys[linput], t)?;
                let old = self.pp.node(pid).clone();
                let mut op = old.op.clone();
                op.map_inputs(|_| inner);
                let id = self.push(&old.name, old.label, op, old.hidden)?;
                self.origin.insert(id, self.origin[&pid]);
                id
            }
            None => {
                let n = self.pp.node(pid);
                let (mut name, hidden) = (format!("{}0", n.name), n.hidden);
                // stored bases and explain output are keyed by name
                while self.lp.find(&name).is_some() || self.pp.nodes.iter().any(|x| x.name == name) {
                    name.push('0');
                }
                let op = PhysOp::Sort {
                    input: pid,
                    path: target.clone(),
                    splits_from: None,
                };
                let id = self.push(&name, n.label, op, hidden)?;
                self.inserted.push(id);
                id
            }
        };
        self.memo.insert((pid, target), id);
        Ok(id)
    }

    fn lower_node(&mut self, lid: NodeId) -> Result<NodeId> {
        let n = self.lp.node(lid);
        let p = |i: &NodeId| self.phys[*i];
        let op = match &n.op {
            LogicalOp::Load { table, from, to } => PhysOp::Load {
                table: table.clone(),
                schema: n.schema.clone(),
                from: from.clone(),
                to: to.clone(),
            },
            LogicalOp::Map { input, f } => PhysOp::Map { input: p(input), f: f.clone() },
            LogicalOp::Ext { input, f } => PhysOp::Ext {
                input: p(input),
                f: f.clone(),
                over: None,
            },
            LogicalOp::Rename { input, from, to } => PhysOp::Rename {
                input: p(input),
                from: from.clone(),
                to: to.clone(),
            },
            LogicalOp::Agg { input, on, plus } => {
                let mut i = p(input);
                if let Some(t) = agg_target(&self.pp.path(i), on) {
                    i = self.ensure(i, t)?;
                }
                PhysOp::MergeAgg {
                    input: i,
                    on: on.clone(),
                    plus: plus.clone(),
                    segmented: false,
                }
            }
            LogicalOp::Join { a, b, times } => {
                let (a, b) = self.align(p(a), p(b))?;
                PhysOp::MergeJoin {
                    a,
                    b,
                    times: times.clone(),
                    key_filter: None,
                }
            }
            LogicalOp::Union { a, b, plus } => {
                let (a, b) = self.align(p(a), p(b))?;
                PhysOp::MergeUnion { a, b, plus: plus.clone() }
            }
            LogicalOp::Sort { input, path } => {
                let i = p(input);
                if self.pp.path(i) == *path {
                    return Ok(i);
                }
                PhysOp::Sort {
                    input: i,
                    path: path.clone(),
                    splits_from: None,
                }
            }
            LogicalOp::Store { input, table, upper } => PhysOp::Store {
                input: p(input),
                table: table.clone(),
                upper: upper.clone(),
                splits_from: None,
                deferred: false,
            },
        };
        let id = self.push(&n.name, n.label, op, n.hidden)?;
        self.pp.nodes[id].display = n.display.clone();
        self.origin.insert(id, lid);
        Ok(id)
    }

    fn align(&mut self, a: NodeId, b: NodeId) -> Result<(NodeId, NodeId)> {
        let (pa, pb) = (self.pp.path(a), self.pp.path(b));
        let order = merge_order(&pa, &pb);
        let a = self.ensure(a, rest(&pa, &order))?;
        let b = self.ensure(b, rest(&pb, &order))?;
        Ok((a, b))
    }
}

/// Lower a schema-checked logical plan. Inserted Sorts are labelled just
/// before their earliest consumer.
pub fn lower(lp: &LogicalPlan) -> Result<PhysicalPlan> {
    let mut uses = vec![0usize; lp.nodes.len()];
    for n in &lp.nodes {
        for i in n.op.inputs() {
            uses[i] += 1;
        }
    }
    let mut l = Lowerer {
        lp,
        pp: PhysicalPlan {
            nodes: vec![],
            encoding: ValueEncoding::Text,
        },
        phys: Vec::with_capacity(lp.nodes.len()),
        origin: HashMap::new(),
        uses,
        memo: HashMap::new(),
        inserted: vec![],
    };
    for lid in 0..lp.nodes.len() {
        let id = l.lower_node(lid)?;
        l.phys.push(id);
    }
    let consumers = l.pp.consumers();
    for &s in &l.inserted {
        let first = consumers[s].iter().map(|&c| l.pp.nodes[c].label).min();
        if let Some(lab) = first {
            l.pp.nodes[s].label = lab.before();
        }
    }
    let pp = l.pp;
    for id in pp.visible() {
        if matches!(pp.nodes[id].op, PhysOp::MergeJoin { .. } | PhysOp::MergeUnion { .. } | PhysOp::MergeAgg { .. }) {
            pp.infer(id).map_err(|e| LaraError::plan(format!("lowering left {} unsorted: {e}", pp.nodes[id].name)))?;
        }
    }
    Ok(pp)
}
