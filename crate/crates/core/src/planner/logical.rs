//! Logical plans: a DAG of table operators with inferred schemas, plus a
//! reference evaluator built on the in-memory oracle.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{LaraError, Result};
use crate::schema::Schema;
use crate::table::{
    join_schema, oracle_agg, oracle_ext, oracle_join, oracle_map, oracle_rename, oracle_union, union_schema,
    AssociativeTable,
};
use crate::udf::func::{ExtFn, PlusFn, TimesFn};
use crate::value::Value;

/// Plan line number. Statements that define a table get whole numbers;
/// Sorts and Stores placed between them get `n.5`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Label {
    pub line: u32,
    pub half: bool,
}

impl Label {
    pub fn whole(line: u32) -> Label {
        Label { line, half: false }
    }

    pub fn half(line: u32) -> Label {
        Label { line, half: true }
    }

    /// The label just before `self`: `n` becomes `(n-1).5`.
    pub fn before(self) -> Label {
        if self.half {
            Label::whole(self.line)
        } else {
            Label::half(self.line.saturating_sub(1))
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.half {
            write!(f, "{}.5", self.line)
        } else {
            write!(f, "{}", self.line)
        }
    }
}

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum LogicalOp {
    /// Bounds restrict the first attribute of the table's access path.
    Load {
        table: String,
        from: Option<Value>,
        to: Option<Value>,
    },
    Map {
        input: NodeId,
        f: ExtFn,
    },
    Ext {
        input: NodeId,
        f: ExtFn,
    },
    Agg {
        input: NodeId,
        on: Vec<String>,
        plus: Vec<(String, PlusFn)>,
    },
    Union {
        a: NodeId,
        b: NodeId,
        plus: Vec<(String, PlusFn)>,
    },
    Join {
        a: NodeId,
        b: NodeId,
        times: Vec<(String, TimesFn)>,
    },
    Rename {
        input: NodeId,
        from: String,
        to: String,
    },
    /// Explicit re-sort; no logical effect.
    Sort {
        input: NodeId,
        path: Vec<String>,
    },
    /// `upper` declares that only the triangle `k1 <= k2` is wanted.
    Store {
        input: NodeId,
        table: String,
        upper: Option<(String, String)>,
    },
}

impl LogicalOp {
    pub fn inputs(&self) -> Vec<NodeId> {
        match self {
            LogicalOp::Load { .. } => vec![],
            LogicalOp::Map { input, .. }
            | LogicalOp::Ext { input, .. }
            | LogicalOp::Agg { input, .. }
            | LogicalOp::Rename { input, .. }
            | LogicalOp::Sort { input, .. }
            | LogicalOp::Store { input, .. } => vec![*input],
            LogicalOp::Union { a, b, .. } | LogicalOp::Join { a, b, .. } => vec![*a, *b],
        }
    }

    pub fn map_inputs(&mut self, mut f: impl FnMut(NodeId) -> NodeId) {
        match self {
            LogicalOp::Load { .. } => {}
            LogicalOp::Map { input, .. }
            | LogicalOp::Ext { input, .. }
            | LogicalOp::Agg { input, .. }
            | LogicalOp::Rename { input, .. }
            | LogicalOp::Sort { input, .. }
            | LogicalOp::Store { input, .. } => *input = f(*input),
            LogicalOp::Union { a, b, .. } | LogicalOp::Join { a, b, .. } => {
                *a = f(*a);
                *b = f(*b);
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LogicalNode {
    pub name: String,
    pub label: Label,
    pub op: LogicalOp,
    /// Keys in the order the operator naturally produces them.
    pub schema: Schema,
    /// Produced by REPEAT expansion; not shown by explain.
    pub hidden: bool,
    /// Replacement text for explain.
    pub display: Option<String>,
}

/// Where Load finds table schemas (keys in access-path order).
pub trait TableSource {
    fn table_schema(&self, name: &str) -> Result<Schema>;
}

impl TableSource for BTreeMap<String, Schema> {
    fn table_schema(&self, name: &str) -> Result<Schema> {
        self.get(name)
            .cloned()
            .ok_or_else(|| LaraError::UnknownTable(name.to_string()))
    }
}

impl TableSource for crate::storage::store::Catalog {
    fn table_schema(&self, name: &str) -> Result<Schema> {
        Ok(self.store(name)?.schema().clone())
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct LogicalPlan {
    pub nodes: Vec<LogicalNode>,
}

pub(crate) fn agg_schema(input: &Schema, on: &[String], plus: &[(String, PlusFn)]) -> Result<Schema> {
    let keys = on
        .iter()
        .map(|n| {
            input
                .key(n)
                .cloned()
                .ok_or_else(|| LaraError::schema(format!("cannot aggregate on unknown key `{n}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let (u, _) = union_schema(input, &Schema::new(keys, vec![])?, plus)?;
    u.with_key_order(on)
}

fn upper_check(schema: &Schema, upper: &Option<(String, String)>) -> Result<()> {
    if let Some((x, y)) = upper {
        for k in [x, y] {
            if !schema.has_key(k) {
                return Err(LaraError::schema(format!("UPPER names `{k}`, which is not a key")));
            }
        }
        if schema.key(x).unwrap().ty != schema.key(y).unwrap().ty {
            return Err(LaraError::schema(format!("UPPER keys `{x}` and `{y}` differ in type")));
        }
    }
    Ok(())
}

impl LogicalPlan {
    pub fn new() -> LogicalPlan {
        LogicalPlan::default()
    }

    pub fn node(&self, id: NodeId) -> &LogicalNode {
        &self.nodes[id]
    }

    pub fn schema(&self, id: NodeId) -> &Schema {
        &self.nodes[id].schema
    }

    pub fn find(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().rposition(|n| n.name == name && !matches!(n.op, LogicalOp::Store { .. }))
    }

    /// Output schema of `op` given the plan so far.
    pub fn infer(&self, op: &LogicalOp, tables: &dyn TableSource) -> Result<Schema> {
        let s = |id: NodeId| -> Result<&Schema> {
            self.nodes
                .get(id)
                .map(|n| &n.schema)
                .ok_or_else(|| LaraError::plan(format!("dangling node reference {id}")))
        };
        match op {
            LogicalOp::Load { table, .. } => tables.table_schema(table),
            LogicalOp::Map { input, f } => {
                if !f.is_map() {
                    return Err(LaraError::schema("MAP may not add keys; use EXT"));
                }
                f.bind(s(*input)?)?.output_schema()
            }
            LogicalOp::Ext { input, f } => f.bind(s(*input)?)?.output_schema(),
            LogicalOp::Agg { input, on, plus } => agg_schema(s(*input)?, on, plus),
            LogicalOp::Union { a, b, plus } => Ok(union_schema(s(*a)?, s(*b)?, plus)?.0),
            LogicalOp::Join { a, b, times } => Ok(join_schema(s(*a)?, s(*b)?, times)?.0),
            LogicalOp::Rename { input, from, to } => s(*input)?.rename(from, to),
            LogicalOp::Sort { input, path } => s(*input)?.with_key_order(path),
            LogicalOp::Store { input, upper, .. } => {
                let sc = s(*input)?;
                upper_check(sc, upper)?;
                Ok(sc.clone())
            }
        }
    }

    pub fn add(&mut self, name: impl Into<String>, label: Label, op: LogicalOp, tables: &dyn TableSource) -> Result<NodeId> {
        let schema = self.infer(&op, tables)?;
        self.nodes.push(LogicalNode {
            name: name.into(),
            label,
            op,
            schema,
            hidden: false,
            display: None,
        });
        Ok(self.nodes.len() - 1)
    }

    pub fn stores(&self) -> Vec<NodeId> {
        (0..self.nodes.len())
            .filter(|&i| matches!(self.nodes[i].op, LogicalOp::Store { .. }))
            .collect()
    }

    pub fn loads(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .nodes
            .iter()
            .filter_map(|n| match &n.op {
                LogicalOp::Load { table, .. } => Some(table.clone()),
                _ => None,
            })
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// Evaluate every node with the oracle operators. `tables` supplies
    /// each loaded table. Returns the stored tables by name.
    pub fn evaluate(&self, tables: &BTreeMap<String, AssociativeTable>) -> Result<BTreeMap<String, AssociativeTable>> {
        let vals = self.evaluate_nodes(tables)?;
        let mut out = BTreeMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if let LogicalOp::Store { table, .. } = &n.op {
                out.insert(table.clone(), vals[i].clone());
            }
        }
        Ok(out)
    }

    pub fn evaluate_nodes(&self, tables: &BTreeMap<String, AssociativeTable>) -> Result<Vec<AssociativeTable>> {
        let mut vals: Vec<AssociativeTable> = Vec::with_capacity(self.nodes.len());
        for n in &self.nodes {
            let t = match &n.op {
                LogicalOp::Load { table, from, to } => {
                    let t = tables
                        .get(table)
                        .ok_or_else(|| LaraError::UnknownTable(table.clone()))?
                        .with_key_order(&n.schema.key_names())?;
                    if from.is_none() && to.is_none() {
                        t
                    } else {
                        let entries = t
                            .entries()
                            .into_iter()
                            .filter(|(k, _)| in_bounds(&k[0], from.as_ref(), to.as_ref()))
                            .collect();
                        AssociativeTable::from_entries(t.schema().clone(), entries)?
                    }
                }
                LogicalOp::Map { input, f } => oracle_map(&vals[*input], f)?,
                LogicalOp::Ext { input, f } => oracle_ext(&vals[*input], f)?,
                LogicalOp::Agg { input, on, plus } => oracle_agg(&vals[*input], on, plus)?,
                LogicalOp::Union { a, b, plus } => oracle_union(&vals[*a], &vals[*b], plus)?,
                LogicalOp::Join { a, b, times } => oracle_join(&vals[*a], &vals[*b], times)?,
                LogicalOp::Rename { input, from, to } => oracle_rename(&vals[*input], from, to)?,
                LogicalOp::Sort { input, .. } => vals[*input].clone(),
                LogicalOp::Store { input, upper, .. } => match upper {
                    None => vals[*input].clone(),
                    Some((x, y)) => upper_filter(&vals[*input], x, y)?,
                },
            };
            vals.push(t);
        }
        Ok(vals)
    }
}

pub(crate) fn in_bounds(v: &Value, from: Option<&Value>, to: Option<&Value>) -> bool {
    from.is_none_or(|f| v >= f) && to.is_none_or(|t| v <= t)
}

/// Keep only entries with key `x` <= key `y`.
pub fn upper_filter(t: &AssociativeTable, x: &str, y: &str) -> Result<AssociativeTable> {
    let s = t.schema();
    let (i, j) = match (s.key_index(x), s.key_index(y)) {
        (Some(i), Some(j)) => (i, j),
        _ => return Err(LaraError::schema(format!("upper-triangle keys `{x}`, `{y}` not in {s}"))),
    };
    let entries = t.entries().into_iter().filter(|(k, _)| k[i] <= k[j]).collect();
    AssociativeTable::from_entries(s.clone(), entries)
}
