//! Text rendering of physical plans.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::planner::logical::NodeId;
use crate::planner::plan::{PhysOp, PhysicalPlan};
use crate::storage::store::Catalog;

/// Upper bounds on output rows, from catalog record counts. Joins and
/// unions are left unknown.
fn estimates(plan: &PhysicalPlan, catalog: Option<&Catalog>) -> HashMap<NodeId, u64> {
    let mut est = HashMap::new();
    let Some(cat) = catalog else {
        return est;
    };
    for id in plan.topo() {
        let input = |i: &NodeId| est.get(&plan.resolve(*i)).copied();
        let e = match &plan.nodes[id].op {
            PhysOp::Load { table, .. } => cat.store(table).ok().map(|s| s.records()),
            PhysOp::MergeAgg { on, .. } if on.is_empty() => Some(1),
            PhysOp::Alias { input: i }
            | PhysOp::Sort { input: i, .. }
            | PhysOp::SortAgg { input: i, .. }
            | PhysOp::MergeAgg { input: i, .. }
            | PhysOp::Ext { input: i, .. }
            | PhysOp::Map { input: i, .. }
            | PhysOp::Rename { input: i, .. }
            | PhysOp::Store { input: i, .. } => input(i),
            PhysOp::MergeJoin { .. } | PhysOp::MergeUnion { .. } => None,
        };
        if let Some(e) = e {
            est.insert(id, e);
        }
    }
    est
}

/// One line per visible node in label order:
/// `label  statement  [path]  ~rows  (rules)`.
pub fn explain(plan: &PhysicalPlan, catalog: Option<&Catalog>) -> String {
    let est = estimates(plan, catalog);
    let ids = plan.visible();
    let rows: Vec<(String, String, String, String)> = ids
        .iter()
        .map(|&id| {
            let n = &plan.nodes[id];
            let mut extra = String::new();
            if let Some(e) = est.get(&id) {
                let _ = write!(extra, "~{e}");
            }
            if !n.rules.is_empty() {
                if !extra.is_empty() {
                    extra.push_str("  ");
                }
                let _ = write!(extra, "({})", n.rules.join(","));
            }
            (
                n.label.to_string(),
                plan.statement(id),
                format!("[{}]", n.schema.key_names().join(",")),
                extra,
            )
        })
        .collect();
    let w0 = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
    let w1 = rows.iter().map(|r| r.1.chars().count()).max().unwrap_or(0);
    let w2 = rows.iter().map(|r| r.2.chars().count()).max().unwrap_or(0);
    let mut out = String::new();
    for (l, s, p, e) in rows {
        let line = format!(
            "{l:>w0$}  {s}{}  {p}{}  {e}",
            " ".repeat(w1 - s.chars().count()),
            " ".repeat(w2 - p.chars().count())
        );
        out.push_str(line.trim_end());
        out.push('\n');
    }
    if plan.encoding != crate::storage::encoding::ValueEncoding::Text {
        let _ = writeln!(out, "encoding: {:?}", plan.encoding);
    }
    out
}
