//! Relational and linear-algebra operators expressed as logical plan
//! fragments.
//!
//! A [`Builder`] owns a [`LogicalPlan`] under construction. Each constructor
//! appends the nodes of one translation and returns the node holding the
//! result. Matrix dimensions are matched by attribute name; where two
//! dimensions must line up (or must not collide) the builder inserts
//! `Rename` nodes and records a line in [`Builder::reports`].

use crate::error::{LaraError, Result};
use crate::planner::logical::{Label, LogicalOp, LogicalPlan, NodeId, TableSource};
use crate::planner::plan::PhysicalPlan;
use crate::planner::rules::{optimize, Rule, RuleOptions};
use crate::planner::lower;
use crate::schema::Schema;
use crate::storage::store::Catalog;
use crate::udf::expr::{BinOp, ScalarExpr};
use crate::udf::func::{Builtin, ExtFn, PlusFn, TimesFn};
use crate::value::{ScalarType, Value};

/// A table read as a matrix: keys `row` and `col`, one numeric value `val`
/// whose default is zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatrixView {
    pub node: NodeId,
    pub row: String,
    pub col: String,
    pub val: String,
}

impl MatrixView {
    pub fn new(plan: &LogicalPlan, node: NodeId, row: &str, col: &str, val: &str) -> Result<MatrixView> {
        let s = plan.schema(node);
        if s.keys.len() != 2 || !s.has_key(row) || !s.has_key(col) || row == col {
            return Err(LaraError::schema(format!(
                "a matrix needs exactly the keys `{row}` and `{col}`, found {:?}",
                s.key_names()
            )));
        }
        let v = s
            .value(val)
            .ok_or_else(|| LaraError::schema(format!("no value attribute `{val}`")))?;
        if !v.ty.is_numeric() {
            return Err(LaraError::schema(format!("matrix value `{val}` is {}, not numeric", v.ty)));
        }
        if !is_zero(v.default_value()) {
            return Err(LaraError::schema(format!(
                "matrix value `{val}` has default {}, not 0",
                v.default_value()
            )));
        }
        Ok(MatrixView {
            node,
            row: row.to_string(),
            col: col.to_string(),
            val: val.to_string(),
        })
    }

    /// The same table with the roles of its keys exchanged.
    pub fn transposed(&self) -> MatrixView {
        MatrixView {
            node: self.node,
            row: self.col.clone(),
            col: self.row.clone(),
            val: self.val.clone(),
        }
    }
}

fn is_zero(v: &Value) -> bool {
    matches!(v, Value::Int(0)) || matches!(v, Value::Float(x) if *x == 0.0)
}

pub enum RaOp {
    /// σ_p: tuples failing `pred` go to the default.
    Select { input: NodeId, pred: ScalarExpr },
    /// π onto `keep`. Dropped keys are summed out with `plus`, which must
    /// cover every kept value.
    Project {
        input: NodeId,
        keep: Vec<String>,
        plus: Vec<(String, PlusFn)>,
    },
    /// Natural join. `on` pairs a key of `a` with the differently named key
    /// of `b` it should match.
    Join {
        a: NodeId,
        b: NodeId,
        on: Vec<(String, String)>,
        times: Vec<(String, TimesFn)>,
    },
    /// Cartesian product; the inputs may share no key.
    Product {
        a: NodeId,
        b: NodeId,
        times: Vec<(String, TimesFn)>,
    },
    /// γ: group by `on`, folding values with `plus`.
    Aggregate {
        input: NodeId,
        on: Vec<String>,
        plus: Vec<(String, PlusFn)>,
    },
    Union {
        a: NodeId,
        b: NodeId,
        plus: Vec<(String, PlusFn)>,
    },
}

/// Which keys a reduction keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reduce {
    Rows,
    Cols,
    All,
}

pub enum LaOp {
    /// A ⊕.⊗ B
    MatMul {
        a: MatrixView,
        b: MatrixView,
        plus: Builtin,
        times: Builtin,
    },
    EwiseMul { a: MatrixView, b: MatrixView, times: Builtin },
    EwiseAdd { a: MatrixView, b: MatrixView, plus: Builtin },
    Reduce { a: MatrixView, plus: Builtin, keep: Reduce },
    /// A(I,J). `rows` and `cols` are one-key tables; every key present in
    /// their support selects that index.
    Subref { a: MatrixView, rows: NodeId, cols: NodeId },
    /// f(A), with f written over the value attribute.
    Apply { a: MatrixView, f: ScalarExpr },
    Transpose { a: MatrixView },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LaOutput {
    Matrix(MatrixView),
    /// A vector or scalar left by a reduction.
    Table(NodeId),
}

impl LaOutput {
    pub fn node(&self) -> NodeId {
        match self {
            LaOutput::Matrix(m) => m.node,
            LaOutput::Table(n) => *n,
        }
    }

    pub fn matrix(self) -> Result<MatrixView> {
        match self {
            LaOutput::Matrix(m) => Ok(m),
            LaOutput::Table(_) => Err(LaraError::plan("expected a matrix, got a reduced table")),
        }
    }
}

pub struct Builder<'a> {
    plan: LogicalPlan,
    tables: &'a dyn TableSource,
    prefix: String,
    /// Auto-renames performed so far.
    pub reports: Vec<String>,
}

impl<'a> Builder<'a> {
    pub fn new(tables: &'a dyn TableSource) -> Builder<'a> {
        Builder::continuing(LogicalPlan::new(), tables)
    }

    /// Append to an existing plan.
    pub fn continuing(plan: LogicalPlan, tables: &'a dyn TableSource) -> Builder<'a> {
        Builder {
            plan,
            tables,
            prefix: "T".to_string(),
            reports: vec![],
        }
    }

    pub fn plan(&self) -> &LogicalPlan {
        &self.plan
    }

    pub fn finish(self) -> LogicalPlan {
        self.plan
    }

    pub fn schema(&self, id: NodeId) -> &Schema {
        self.plan.schema(id)
    }

    fn add(&mut self, op: LogicalOp) -> Result<NodeId> {
        let line = self.plan.nodes.len() as u32 + 1;
        let name = format!("{}{line}", self.prefix);
        self.plan.add(name, Label::whole(line), op, self.tables)
    }

    /// Give the most recently added node a name.
    pub fn name(&mut self, id: NodeId, name: &str) {
        self.plan.nodes[id].name = name.to_string();
    }

    pub fn load(&mut self, table: &str) -> Result<NodeId> {
        let id = self.add(LogicalOp::Load {
            table: table.to_string(),
            from: None,
            to: None,
        })?;
        self.name(id, table);
        Ok(id)
    }

    pub fn store(&mut self, input: NodeId, table: &str) -> Result<NodeId> {
        let id = self.add(LogicalOp::Store {
            input,
            table: table.to_string(),
            upper: None,
        })?;
        self.name(id, table);
        Ok(id)
    }

    pub fn matrix(&self, node: NodeId, row: &str, col: &str, val: &str) -> Result<MatrixView> {
        MatrixView::new(&self.plan, node, row, col, val)
    }

    pub fn rename(&mut self, input: NodeId, from: &str, to: &str) -> Result<NodeId> {
        self.add(LogicalOp::Rename {
            input,
            from: from.to_string(),
            to: to.to_string(),
        })
    }

    pub fn map(&mut self, input: NodeId, vals: Vec<(String, ScalarExpr)>) -> Result<NodeId> {
        self.add(LogicalOp::Map {
            input,
            f: ExtFn::map(vals)?,
        })
    }

    pub fn build_ra(&mut self, op: RaOp) -> Result<NodeId> {
        match op {
            RaOp::Select { input, pred } => {
                let s = self.schema(input).clone();
                let vals = s
                    .values
                    .iter()
                    .map(|v| {
                        let e = ScalarExpr::if_else(
                            pred.clone(),
                            ScalarExpr::attr(&v.name),
                            ScalarExpr::lit(v.default_value().clone()),
                        );
                        (v.name.clone(), e)
                    })
                    .collect();
                self.map(input, vals)
            }
            RaOp::Project { input, keep, plus } => {
                let s = self.schema(input).clone();
                for k in &keep {
                    if !s.has_key(k) && !s.has_value(k) {
                        return Err(LaraError::schema(format!("cannot project onto unknown attribute `{k}`")));
                    }
                }
                let kept_vals: Vec<String> = s.value_names().into_iter().filter(|v| keep.contains(v)).collect();
                let kept_keys: Vec<String> = s.key_names().into_iter().filter(|k| keep.contains(k)).collect();
                let mut cur = input;
                if kept_vals.len() < s.values.len() {
                    if kept_vals.is_empty() {
                        return Err(LaraError::schema("projection must keep at least one value attribute"));
                    }
                    cur = self.map(cur, kept_vals.iter().map(|v| (v.clone(), ScalarExpr::attr(v))).collect())?;
                }
                if kept_keys.len() < s.keys.len() {
                    for v in &kept_vals {
                        if !plus.iter().any(|(n, _)| n == v) {
                            return Err(LaraError::schema(format!(
                                "projecting away keys needs an aggregator for `{v}`"
                            )));
                        }
                    }
                    cur = self.add(LogicalOp::Agg {
                        input: cur,
                        on: kept_keys,
                        plus,
                    })?;
                }
                Ok(cur)
            }
            RaOp::Join { a, b, on, times } => {
                let mut b = b;
                for (ak, bk) in on {
                    if !self.schema(a).has_key(&ak) || !self.schema(b).has_key(&bk) {
                        return Err(LaraError::schema(format!("join attributes `{ak}` = `{bk}` must both be keys")));
                    }
                    if ak != bk {
                        b = self.rename(b, &bk, &ak)?;
                    }
                }
                self.add(LogicalOp::Join { a, b, times })
            }
            RaOp::Product { a, b, times } => {
                let shared: Vec<String> = self
                    .schema(a)
                    .key_names()
                    .into_iter()
                    .filter(|k| self.schema(b).has_key(k))
                    .collect();
                if !shared.is_empty() {
                    return Err(LaraError::schema(format!("product inputs share keys {shared:?}; use a join")));
                }
                self.add(LogicalOp::Join { a, b, times })
            }
            RaOp::Aggregate { input, on, plus } => self.add(LogicalOp::Agg { input, on, plus }),
            RaOp::Union { a, b, plus } => self.add(LogicalOp::Union { a, b, plus }),
        }
    }

    fn value_type(&self, m: &MatrixView) -> ScalarType {
        self.schema(m.node).value(&m.val).unwrap().ty
    }

    fn zero(&self, m: &MatrixView) -> Value {
        self.schema(m.node).value(&m.val).unwrap().default_value().clone()
    }

    /// A name like `base'` used by neither input.
    fn fresh(&self, base: &str, avoid: &[&Schema]) -> String {
        let mut n = format!("{base}'");
        while avoid.iter().any(|s| s.has_key(&n) || s.has_value(&n)) {
            n.push('\'');
        }
        n
    }

    fn rename_key(&mut self, m: MatrixView, row: bool, to: &str) -> Result<MatrixView> {
        let from = if row { m.row.clone() } else { m.col.clone() };
        let node = self.rename(m.node, &from, to)?;
        let (r, c) = if row {
            (to.to_string(), m.col)
        } else {
            (m.row, to.to_string())
        };
        Ok(MatrixView {
            node,
            row: r,
            col: c,
            val: m.val,
        })
    }

    /// `m` with its keys renamed to `row` and `col`.
    fn align(&mut self, m: MatrixView, row: &str, col: &str) -> Result<MatrixView> {
        let mut m = m;
        if m.col == row && m.row != row {
            let tmp = if m.row != col {
                col.to_string()
            } else {
                let s = self.schema(m.node).clone();
                self.fresh(&m.col, &[&s])
            };
            m = self.rename_key(m, false, &tmp)?;
        }
        if m.row != row {
            m = self.rename_key(m, true, row)?;
        }
        if m.col != col {
            m = self.rename_key(m, false, col)?;
        }
        Ok(m)
    }

    /// `b` carrying its value under the name `val`.
    fn align_value(&mut self, b: MatrixView, val: &str) -> Result<MatrixView> {
        if b.val == val {
            return Ok(b);
        }
        let node = self.map(b.node, vec![(val.to_string(), ScalarExpr::attr(&b.val))])?;
        Ok(MatrixView {
            node,
            val: val.to_string(),
            ..b
        })
    }

    fn plus_fn(&self, m: &MatrixView, b: Builtin) -> PlusFn {
        PlusFn::builtin(b, self.zero(m), self.value_type(m))
    }

    fn times_fn(&self, a: &MatrixView, b: &MatrixView, f: Builtin) -> TimesFn {
        TimesFn::builtin(f, (self.zero(a), self.zero(b)), self.value_type(a), self.value_type(b))
    }

    fn matmul(&mut self, a: MatrixView, b: MatrixView, plus: Builtin, times: Builtin) -> Result<MatrixView> {
        let (ta, tb) = (self.schema(a.node), self.schema(b.node));
        if ta.key(&a.col).unwrap().ty != tb.key(&b.row).unwrap().ty {
            return Err(LaraError::schema(format!(
                "inner dimensions `{}` and `{}` differ in type",
                a.col, b.row
            )));
        }
        let mut col = b.col.clone();
        if col == a.row || col == a.col {
            let (sa, sb) = (ta.clone(), tb.clone());
            col = self.fresh(&b.col, &[&sa, &sb]);
            self.reports
                .push(format!("renamed `{}` to `{col}` to keep it apart from the left operand", b.col));
        }
        let b = self.align(b, &a.col, &col)?;
        let b = self.align_value(b, &a.val)?;
        let times = vec![(a.val.clone(), self.times_fn(&a, &b, times))];
        let plus = vec![(a.val.clone(), self.plus_fn(&a, plus))];
        let j = self.add(LogicalOp::Join {
            a: a.node,
            b: b.node,
            times,
        })?;
        let node = self.add(LogicalOp::Agg {
            input: j,
            on: vec![a.row.clone(), col.clone()],
            plus,
        })?;
        Ok(MatrixView {
            node,
            row: a.row,
            col,
            val: a.val,
        })
    }

    /// Same shape: `b`'s keys renamed to `a`'s.
    fn ewise_operand(&mut self, a: &MatrixView, b: MatrixView) -> Result<MatrixView> {
        if b.row != a.row || b.col != a.col {
            self.reports.push(format!(
                "renamed [{}, {}] to [{}, {}] for an element-wise operation",
                b.row, b.col, a.row, a.col
            ));
        }
        let b = self.align(b, &a.row, &a.col)?;
        self.align_value(b, &a.val)
    }

    fn indicator(&mut self, set: NodeId, key: &str, val: &str, zero: &Value) -> Result<NodeId> {
        let s = self.schema(set).clone();
        if s.keys.len() != 1 {
            return Err(LaraError::schema(format!(
                "an index set needs exactly one key, found {:?}",
                s.key_names()
            )));
        }
        let present = s
            .values
            .iter()
            .map(|v| non_default(&v.name, v.default_value()))
            .reduce(|x, y| ScalarExpr::binary(BinOp::Or, x, y))
            .ok_or_else(|| LaraError::schema("an index set needs a value attribute"))?;
        let one = match zero {
            Value::Float(_) => Value::Float(1.0),
            _ => Value::Int(1),
        };
        let e = ScalarExpr::if_else(present, ScalarExpr::lit(one), ScalarExpr::lit(zero.clone()));
        let mut n = self.map(set, vec![(val.to_string(), e)])?;
        let k = s.keys[0].name.clone();
        if k != key {
            n = self.rename(n, &k, key)?;
        }
        Ok(n)
    }

    pub fn build_la(&mut self, op: LaOp) -> Result<LaOutput> {
        match op {
            LaOp::MatMul { a, b, plus, times } => self.matmul(a, b, plus, times).map(LaOutput::Matrix),
            LaOp::EwiseMul { a, b, times } => {
                let b = self.ewise_operand(&a, b)?;
                let t = vec![(a.val.clone(), self.times_fn(&a, &b, times))];
                let node = self.add(LogicalOp::Join {
                    a: a.node,
                    b: b.node,
                    times: t,
                })?;
                Ok(LaOutput::Matrix(MatrixView { node, ..a }))
            }
            LaOp::EwiseAdd { a, b, plus } => {
                let b = self.ewise_operand(&a, b)?;
                let p = vec![(a.val.clone(), self.plus_fn(&a, plus))];
                let node = self.add(LogicalOp::Union {
                    a: a.node,
                    b: b.node,
                    plus: p,
                })?;
                Ok(LaOutput::Matrix(MatrixView { node, ..a }))
            }
            LaOp::Reduce { a, plus, keep } => {
                let on = match keep {
                    Reduce::Rows => vec![a.row.clone()],
                    Reduce::Cols => vec![a.col.clone()],
                    Reduce::All => vec![],
                };
                let p = vec![(a.val.clone(), self.plus_fn(&a, plus))];
                self.add(LogicalOp::Agg {
                    input: a.node,
                    on,
                    plus: p,
                })
                .map(LaOutput::Table)
            }
            LaOp::Subref { a, rows, cols } => {
                let zero = self.zero(&a);
                let i = self.indicator(rows, &a.row, &a.val, &zero)?;
                let j = self.indicator(cols, &a.col, &a.val, &zero)?;
                let ti = vec![(a.val.clone(), self.times_fn(&a, &a, Builtin::Times))];
                let n = self.add(LogicalOp::Join {
                    a: a.node,
                    b: i,
                    times: ti.clone(),
                })?;
                let node = self.add(LogicalOp::Join { a: n, b: j, times: ti })?;
                Ok(LaOutput::Matrix(MatrixView { node, ..a }))
            }
            LaOp::Apply { a, f } => {
                let node = self.map(a.node, vec![(a.val.clone(), f)])?;
                let m = MatrixView::new(&self.plan, node, &a.row, &a.col, &a.val)
                    .map_err(|e| LaraError::schema(format!("f(0) must be 0 for the result to stay a matrix: {e}")))?;
                Ok(LaOutput::Matrix(m))
            }
            LaOp::Transpose { a } => Ok(LaOutput::Matrix(a.transposed())),
        }
    }

    /// trace(A1 A2 ... An): the chain product, its diagonal kept by an ext,
    /// then summed.
    pub fn trace(&mut self, views: &[MatrixView]) -> Result<NodeId> {
        let (first, rest) = views
            .split_first()
            .ok_or_else(|| LaraError::plan("trace of an empty chain"))?;
        let mut p = first.clone();
        for m in rest {
            p = self.matmul(p, m.clone(), Builtin::Sum, Builtin::Times)?;
        }
        let s = self.schema(p.node);
        if s.key(&p.row).unwrap().ty != s.key(&p.col).unwrap().ty {
            return Err(LaraError::schema(format!(
                "chain is not square: `{}` and `{}` differ in type",
                p.row, p.col
            )));
        }
        let diag = ScalarExpr::if_else(
            ScalarExpr::binary(BinOp::Eq, ScalarExpr::attr(&p.row), ScalarExpr::attr(&p.col)),
            ScalarExpr::attr(&p.val),
            ScalarExpr::lit(self.zero(&p)),
        );
        let d = self.add(LogicalOp::Ext {
            input: p.node,
            f: ExtFn::map(vec![(p.val.clone(), diag)])?,
        })?;
        let plus = vec![(p.val.clone(), self.plus_fn(&p, Builtin::Sum))];
        self.add(LogicalOp::Agg {
            input: d,
            on: vec![],
            plus,
        })
    }
}

fn non_default(attr: &str, d: &Value) -> ScalarExpr {
    if d.is_null() {
        ScalarExpr::Not(Box::new(ScalarExpr::IsNull(Box::new(ScalarExpr::attr(attr)))))
    } else {
        ScalarExpr::binary(BinOp::Ne, ScalarExpr::attr(attr), ScalarExpr::lit(d.clone()))
    }
}

/// The outer-product plan for `out = a b` over stored matrices: a merge
/// join on the shared dimension, then a sort-aggregation to the outer
/// dimensions.
///
/// Both tables must already be stored with the shared dimension first.
pub fn matmul_outer_plan(a: &str, b: &str, catalog: &Catalog) -> Result<PhysicalPlan> {
    matmul_outer_plan_with(a, b, "C", &[Rule::A, Rule::D], catalog)
}

/// [`matmul_outer_plan`] with a chosen output table and rule set.
pub fn matmul_outer_plan_with(a: &str, b: &str, out: &str, rules: &[Rule], catalog: &Catalog) -> Result<PhysicalPlan> {
    let (sa, sb) = (catalog.table_schema(a)?, catalog.table_schema(b)?);
    if sa.keys.len() != 2 || sb.keys.len() != 2 {
        return Err(LaraError::schema("matmul operands need exactly two keys each"));
    }
    let shared: Vec<String> = sa.key_names().into_iter().filter(|k| sb.has_key(k)).collect();
    let [j] = shared.as_slice() else {
        return Err(LaraError::schema(format!(
            "matmul operands must share exactly one key, found {shared:?}"
        )));
    };
    for (name, s) in [(a, &sa), (b, &sb)] {
        let path = s.key_names();
        if path[0] != *j {
            let other = if path[1] == *j { &path[0] } else { &path[1] };
            return Err(LaraError::plan(format!(
                "`{name}` is stored as [{}]; sort it to [{j},{other}] first",
                path.join(",")
            )));
        }
    }
    let (i, k) = (sa.key_names()[1].clone(), sb.key_names()[1].clone());
    let mut bld = Builder::new(catalog);
    let la = bld.load(a)?;
    let lb = bld.load(b)?;
    let va = bld.schema(la).value_names();
    let vb = bld.schema(lb).value_names();
    let (ma, mb) = match (va.as_slice(), vb.as_slice()) {
        ([x], [y]) => (bld.matrix(la, &i, j, x)?, bld.matrix(lb, j, &k, y)?),
        _ => return Err(LaraError::schema("matmul operands need exactly one value each")),
    };
    let c = bld.matmul(ma, mb, Builtin::Sum, Builtin::Times)?;
    bld.name(c.node, out);
    bld.store(c.node, out)?;
    let mut pp = lower(&bld.finish())?;
    optimize(&mut pp, rules, RuleOptions::default());
    Ok(pp)
}
