//! Physical plans: merge operators over access paths.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{LaraError, Result};
use crate::physical::{ext_schema, merge_agg_schema, merge_join_schema, merge_union_schema, sort_agg_schema};
use crate::planner::logical::{Label, NodeId};
use crate::schema::Schema;
use crate::storage::encoding::ValueEncoding;
use crate::udf::expr::ScalarExpr;
use crate::udf::func::{ExtFn, PlusFn, TimesFn};
use crate::value::Value;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum PhysOp {
    /// Range scan; bounds apply to the first path attribute.
    Load {
        table: String,
        schema: Schema,
        from: Option<Value>,
        to: Option<Value>,
    },
    /// Pass-through left behind when a rewrite removes a node.
    Alias { input: NodeId },
    Sort {
        input: NodeId,
        path: Vec<String>,
        splits_from: Option<String>,
    },
    SortAgg {
        input: NodeId,
        path: Vec<String>,
        plus: Vec<(String, PlusFn)>,
        splits_from: Option<String>,
    },
    MergeJoin {
        a: NodeId,
        b: NodeId,
        times: Vec<(String, TimesFn)>,
        key_filter: Option<ScalarExpr>,
    },
    MergeUnion {
        a: NodeId,
        b: NodeId,
        plus: Vec<(String, PlusFn)>,
    },
    MergeAgg {
        input: NodeId,
        on: Vec<String>,
        plus: Vec<(String, PlusFn)>,
        segmented: bool,
    },
    Ext {
        input: NodeId,
        f: ExtFn,
        over: Option<Vec<String>>,
    },
    Map { input: NodeId, f: ExtFn },
    Rename { input: NodeId, from: String, to: String },
    Store {
        input: NodeId,
        table: String,
        upper: Option<(String, String)>,
        splits_from: Option<String>,
        deferred: bool,
    },
}

impl PhysOp {
    pub fn inputs(&self) -> Vec<NodeId> {
        match self {
            PhysOp::Load { .. } => vec![],
            PhysOp::Alias { input }
            | PhysOp::Sort { input, .. }
            | PhysOp::SortAgg { input, .. }
            | PhysOp::MergeAgg { input, .. }
            | PhysOp::Ext { input, .. }
            | PhysOp::Map { input, .. }
            | PhysOp::Rename { input, .. }
            | PhysOp::Store { input, .. } => vec![*input],
            PhysOp::MergeJoin { a, b, .. } | PhysOp::MergeUnion { a, b, .. } => vec![*a, *b],
        }
    }

    pub fn map_inputs(&mut self, mut f: impl FnMut(NodeId) -> NodeId) {
        match self {
            PhysOp::Load { .. } => {}
            PhysOp::Alias { input }
            | PhysOp::Sort { input, .. }
            | PhysOp::SortAgg { input, .. }
            | PhysOp::MergeAgg { input, .. }
            | PhysOp::Ext { input, .. }
            | PhysOp::Map { input, .. }
            | PhysOp::Rename { input, .. }
            | PhysOp::Store { input, .. } => *input = f(*input),
            PhysOp::MergeJoin { a, b, .. } | PhysOp::MergeUnion { a, b, .. } => {
                *a = f(*a);
                *b = f(*b);
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            PhysOp::Load { .. } => "Load",
            PhysOp::Alias { .. } => "Alias",
            PhysOp::Sort { .. } => "Sort",
            PhysOp::SortAgg { .. } => "SortAgg",
            PhysOp::MergeJoin { .. } => "MergeJoin",
            PhysOp::MergeUnion { .. } => "MergeUnion",
            PhysOp::MergeAgg { .. } => "MergeAgg",
            PhysOp::Ext { .. } => "Ext",
            PhysOp::Map { .. } => "Map",
            PhysOp::Rename { .. } => "Rename",
            PhysOp::Store { .. } => "Store",
        }
    }

    /// Output lives on disk and may be scanned repeatedly.
    pub fn materializes(&self) -> bool {
        matches!(self, PhysOp::Load { .. } | PhysOp::Sort { .. } | PhysOp::SortAgg { .. })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhysNode {
    pub name: String,
    pub label: Label,
    pub op: PhysOp,
    /// Keys in access-path order.
    pub schema: Schema,
    pub hidden: bool,
    pub display: Option<String>,
    /// Rules that changed this node.
    pub rules: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhysicalPlan {
    pub nodes: Vec<PhysNode>,
    pub encoding: ValueEncoding,
}

fn bracket(path: &[String]) -> String {
    format!("[{}]", path.join(","))
}

fn fn_list<F: std::fmt::Display>(fs: &[(String, F)]) -> String {
    let items: Vec<String> = fs.iter().map(|(n, f)| format!("{n}: {f}")).collect();
    format!("[{}]", items.join(", "))
}

impl PhysicalPlan {
    pub fn node(&self, id: NodeId) -> &PhysNode {
        &self.nodes[id]
    }

    pub fn path(&self, id: NodeId) -> Vec<String> {
        self.nodes[id].schema.key_names()
    }

    /// Follow aliases.
    pub fn resolve(&self, mut id: NodeId) -> NodeId {
        while let PhysOp::Alias { input } = self.nodes[id].op {
            id = input;
        }
        id
    }

    pub fn push(&mut self, node: PhysNode) -> NodeId {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    /// Nodes reachable from a Store.
    pub fn live(&self) -> Vec<bool> {
        let mut live = vec![false; self.nodes.len()];
        let mut stack: Vec<NodeId> = (0..self.nodes.len())
            .filter(|&i| matches!(self.nodes[i].op, PhysOp::Store { .. }))
            .collect();
        if stack.is_empty() {
            stack = (0..self.nodes.len()).collect();
        }
        while let Some(i) = stack.pop() {
            if !live[i] {
                live[i] = true;
                stack.extend(self.nodes[i].op.inputs());
            }
        }
        live
    }

    /// Inputs before consumers; ties broken by node id.
    pub fn topo(&self) -> Vec<NodeId> {
        let n = self.nodes.len();
        let mut state = vec![0u8; n];
        let mut out = Vec::with_capacity(n);
        for root in 0..n {
            if state[root] != 0 {
                continue;
            }
            let mut stack = vec![(root, false)];
            while let Some((i, done)) = stack.pop() {
                if done {
                    state[i] = 2;
                    out.push(i);
                    continue;
                }
                if state[i] != 0 {
                    continue;
                }
                state[i] = 1;
                stack.push((i, true));
                for j in self.nodes[i].op.inputs().into_iter().rev() {
                    if state[j] == 0 {
                        stack.push((j, false));
                    }
                }
            }
        }
        out
    }

    /// Live consumers of each node, seen through aliases.
    pub fn consumers(&self) -> Vec<Vec<NodeId>> {
        let live = self.live();
        let mut out = vec![Vec::new(); self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            if !live[i] || matches!(n.op, PhysOp::Alias { .. }) {
                continue;
            }
            for j in n.op.inputs() {
                let r = self.resolve(j);
                if !out[r].contains(&i) {
                    out[r].push(i);
                }
            }
        }
        out
    }

    /// Output schema of node `id` from its inputs' schemas.
    pub fn infer(&self, id: NodeId) -> Result<Schema> {
        let s = |j: NodeId| &self.nodes[j].schema;
        match &self.nodes[id].op {
            PhysOp::Load { schema, .. } => Ok(schema.clone()),
            PhysOp::Alias { input } => Ok(s(*input).clone()),
            PhysOp::Sort { input, path, .. } => s(*input).with_key_order(path),
            PhysOp::SortAgg { input, path, plus, .. } => sort_agg_schema(s(*input), path, plus),
            PhysOp::MergeJoin { a, b, times, .. } => merge_join_schema(s(*a), s(*b), times),
            PhysOp::MergeUnion { a, b, plus } => merge_union_schema(s(*a), s(*b), plus),
            PhysOp::MergeAgg { input, on, plus, segmented } => merge_agg_schema(s(*input), on, plus, *segmented),
            PhysOp::Ext { input, f, over } => ext_schema(s(*input), f, over.as_deref()),
            PhysOp::Map { input, f } => {
                if !f.is_map() {
                    return Err(LaraError::plan("Map may not add keys"));
                }
                ext_schema(s(*input), f, None)
            }
            PhysOp::Rename { input, from, to } => s(*input).rename(from, to),
            PhysOp::Store { input, .. } => Ok(s(*input).clone()),
        }
    }

    /// Recompute every schema in dependency order; fails if a merge
    /// operator's inputs lack the key prefix it needs.
    pub fn refresh(&mut self) -> Result<()> {
        for id in self.topo() {
            let s = self.infer(id).map_err(|e| match e {
                LaraError::SortRequired(m) => LaraError::SortRequired(format!(
                    "line {} ({}): {m}",
                    self.nodes[id].label, self.nodes[id].name
                )),
                other => other,
            })?;
            self.nodes[id].schema = s;
        }
        Ok(())
    }

    pub fn visible(&self) -> Vec<NodeId> {
        let live = self.live();
        let mut ids: Vec<NodeId> = (0..self.nodes.len())
            .filter(|&i| live[i] && !self.nodes[i].hidden && !matches!(self.nodes[i].op, PhysOp::Alias { .. }))
            .collect();
        ids.sort_by_key(|&i| (self.nodes[i].label, i));
        ids
    }

    /// Labels of the visible Sort nodes.
    pub fn sort_labels(&self) -> Vec<Label> {
        self.visible()
            .into_iter()
            .filter(|&i| matches!(self.nodes[i].op, PhysOp::Sort { .. }))
            .map(|i| self.nodes[i].label)
            .collect()
    }

    fn input_name(&self, id: NodeId) -> &str {
        &self.nodes[self.resolve(id)].name
    }

    /// Statement text in the style of the plan listing.
    pub fn statement(&self, id: NodeId) -> String {
        let n = &self.nodes[id];
        if let Some(d) = &n.display {
            return d.clone();
        }
        let name = &n.name;
        let mut s = String::new();
        match &n.op {
            PhysOp::Load { table, from, to, .. } => {
                let _ = write!(s, "{name} = Load '{table}'");
                if let Some(f) = from {
                    let _ = write!(s, " from {f}");
                }
                if let Some(t) = to {
                    let _ = write!(s, " to {t}");
                }
            }
            PhysOp::Alias { input } => {
                let _ = write!(s, "{name} = {}", self.input_name(*input));
            }
            PhysOp::Sort { input, path, .. } => {
                let _ = write!(s, "{name} = Sort {} to {}", self.input_name(*input), bracket(path));
            }
            PhysOp::SortAgg { input, path, plus, .. } => {
                let _ = write!(
                    s,
                    "{name} = SortAgg {} to {} by {}",
                    self.input_name(*input),
                    bracket(path),
                    fn_list(plus)
                );
            }
            PhysOp::MergeJoin { a, b, times, key_filter } => {
                let _ = write!(
                    s,
                    "{name} = MergeJoin {}, {} by {}",
                    self.input_name(*a),
                    self.input_name(*b),
                    fn_list(times)
                );
                if let Some(k) = key_filter {
                    let _ = write!(s, " where {k}");
                }
            }
            PhysOp::MergeUnion { a, b, plus } => {
                let _ = write!(
                    s,
                    "{name} = MergeUnion {}, {} by {}",
                    self.input_name(*a),
                    self.input_name(*b),
                    fn_list(plus)
                );
            }
            PhysOp::MergeAgg { input, on, plus, segmented } => {
                let inp = self.input_name(*input);
                if on.is_empty() {
                    let _ = write!(s, "{name} = Agg {inp} by {}", fn_list(plus));
                } else {
                    let _ = write!(s, "{name} = MergeAgg {inp} on {} by {}", on.join(","), fn_list(plus));
                }
                if *segmented {
                    let _ = write!(s, " (segmented)");
                }
            }
            PhysOp::Ext { input, f, over } => {
                let _ = write!(s, "{name} = Ext {} by {f}", self.input_name(*input));
                if let Some(p) = over {
                    let _ = write!(s, " over {}", bracket(p));
                }
            }
            PhysOp::Map { input, f } => {
                let _ = write!(s, "{name} = Map {} by {f}", self.input_name(*input));
            }
            PhysOp::Rename { input, from, to } => {
                let _ = write!(s, "{name} = Rename {} from {from} to {to}", self.input_name(*input));
            }
            PhysOp::Store {
                input,
                table,
                upper,
                deferred,
                ..
            } => {
                let inp = self.input_name(*input);
                let _ = write!(s, "Store {inp}");
                if table != inp {
                    let _ = write!(s, " as '{table}'");
                }
                if let Some((x, y)) = upper {
                    let _ = write!(s, " upper [{x},{y}]");
                }
                if *deferred {
                    let _ = write!(s, " (deferred view)");
                }
            }
        }
        s
    }
}
