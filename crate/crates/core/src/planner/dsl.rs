//! The line-based plan language.
//!
//! ```text
//! A  = LOAD 's1' [FROM 460 TO 860]
//! A1 = MAP A BY [v: if(460 <= t <= 860, v, null)]
//! A2 = EXT A1 BY {KEYS [t': snap(t, 60, 460)] VALS [v: v]} [ROW {...}]* [MONOTONE [t]]
//! A3 = AGG A2 [ON t', c] BY [v: +, cnt: sum]
//! X  = JOIN A, B BY [v: -]          // or UNION; BY items may be expressions
//! U1 = RENAME U FROM c TO c'
//! A0 = SORT A TO [c, t]             // bare `SORT A TO [..]` rebinds A
//! B' = REPEAT A' WITH 's1' AS 's2'  // copy A' with 's1' loads replaced
//! STORE C [AS 'name'] [UPPER [c, c']]
//! ```
//!
//! Expression-valued BY items accept trailing `ASSOC`, `COMM` and `IDEM`
//! flags; the left operand is the attribute name and the right one its
//! primed form (`v / (v' - 1)`).

use std::collections::BTreeMap;

use crate::error::{LaraError, Result};
use crate::planner::logical::{Label, LogicalOp, LogicalPlan, NodeId, TableSource};
use crate::schema::Schema;
use crate::udf::expr::ScalarExpr;
use crate::udf::func::{BinaryFn, Builtin, ExtFn, PlusFn, TableauRow, TimesFn};
use crate::udf::lex::{tokenize, Tok, Token};
use crate::udf::parse::TokenCursor;
use crate::value::Value;

#[derive(Clone, Debug)]
pub enum FnSpec {
    Builtin(Builtin),
    Expr {
        expr: ScalarExpr,
        assoc: bool,
        comm: bool,
        idem: bool,
    },
}

struct Parser<'a, 't> {
    cur: TokenCursor<'t>,
    tables: &'a dyn TableSource,
    plan: LogicalPlan,
    names: BTreeMap<String, NodeId>,
    line: u32,
}

fn at_line(line: usize, column: usize, e: LaraError) -> LaraError {
    match e {
        LaraError::Parse { .. } => e,
        LaraError::Schema(m) => LaraError::Schema(format!("line {line}, column {column}: {m}")),
        LaraError::UnboundAttribute(a) => LaraError::Schema(format!(
            "line {line}, column {column}: unknown attribute `{a}`"
        )),
        LaraError::Usage(m) => LaraError::Schema(format!("line {line}, column {column}: {m}")),
        other => other,
    }
}

impl<'a, 't> Parser<'a, 't> {
    fn at_stmt_end(&self) -> bool {
        matches!(self.cur.peek_tok(), None | Some(Tok::Newline))
    }

    fn ident_ref(&mut self) -> Result<NodeId> {
        let pos = self.cur.peek().cloned();
        let name = self.cur.expect_ident()?;
        self.names.get(&name).copied().ok_or_else(|| match pos {
            Some(t) => LaraError::Parse {
                line: t.line,
                column: t.column,
                message: format!("unknown table variable `{name}`"),
            },
            None => LaraError::plan(format!("unknown table variable `{name}`")),
        })
    }

    fn literal(&mut self) -> Result<Value> {
        let neg = self.cur.eat_sym("-");
        let v = match self.cur.peek_tok() {
            Some(Tok::Int(i)) => Value::Int(if neg { -i } else { *i }),
            Some(Tok::Float(x)) => Value::Float(if neg { -x } else { *x }),
            Some(Tok::Str(s)) if !neg => Value::Str(s.clone()),
            _ => return Err(self.cur.error(format!("expected literal, found {}", self.cur.describe()))),
        };
        self.cur.advance();
        Ok(v)
    }

    fn name_list(&mut self) -> Result<Vec<String>> {
        let bracketed = self.cur.eat_sym("[");
        let mut out = Vec::new();
        if bracketed {
            self.cur.skip_newlines();
            if self.cur.eat_sym("]") {
                return Ok(out);
            }
        }
        loop {
            if bracketed {
                self.cur.skip_newlines();
            }
            out.push(self.cur.expect_ident()?);
            if bracketed {
                self.cur.skip_newlines();
            }
            if !self.cur.eat_sym(",") {
                break;
            }
        }
        if bracketed {
            self.cur.expect_sym("]")?;
        }
        Ok(out)
    }

    /// `[name: expr, ...]`
    fn expr_items(&mut self) -> Result<Vec<(String, ScalarExpr)>> {
        self.cur.expect_sym("[")?;
        let mut out = Vec::new();
        self.cur.skip_newlines();
        if self.cur.eat_sym("]") {
            return Ok(out);
        }
        loop {
            self.cur.skip_newlines();
            let name = self.cur.expect_ident()?;
            self.cur.expect_sym(":")?;
            let e = self.cur.parse_expr()?;
            out.push((name, e));
            self.cur.skip_newlines();
            if self.cur.eat_sym("]") {
                return Ok(out);
            }
            self.cur.expect_sym(",")?;
        }
    }

    fn item_ends(&self, n: usize) -> bool {
        matches!(self.cur.peek_nth(n), Some(Tok::Sym(",")) | Some(Tok::Sym("]")) | Some(Tok::Newline))
    }

    /// `[name: fn, ...]` where fn is a builtin name or symbol, or an
    /// expression with optional law flags.
    fn fn_items(&mut self) -> Result<Vec<(String, FnSpec)>> {
        self.cur.expect_sym("[")?;
        let mut out = Vec::new();
        loop {
            self.cur.skip_newlines();
            let name = self.cur.expect_ident()?;
            self.cur.expect_sym(":")?;
            let builtin = match self.cur.peek_tok() {
                Some(Tok::Sym(s)) if self.item_ends(1) => Builtin::from_name(s),
                Some(Tok::Ident(s)) if self.item_ends(1) => Builtin::from_name(s),
                _ => None,
            };
            let spec = match builtin {
                Some(b) => {
                    self.cur.advance();
                    FnSpec::Builtin(b)
                }
                None => {
                    let expr = self.cur.parse_expr()?;
                    let (mut assoc, mut comm, mut idem) = (false, false, false);
                    loop {
                        if self.cur.eat_kw("assoc") {
                            assoc = true;
                        } else if self.cur.eat_kw("comm") {
                            comm = true;
                        } else if self.cur.eat_kw("idem") {
                            idem = true;
                        } else {
                            break;
                        }
                    }
                    FnSpec::Expr { expr, assoc, comm, idem }
                }
            };
            out.push((name, spec));
            self.cur.skip_newlines();
            if self.cur.eat_sym("]") {
                return Ok(out);
            }
            self.cur.expect_sym(",")?;
        }
    }

    fn plus_fns(&self, items: Vec<(String, FnSpec)>, schemas: &[&Schema]) -> Result<Vec<(String, PlusFn)>> {
        let mut out = Vec::new();
        for (name, spec) in items {
            let attr = schemas
                .iter()
                .find_map(|s| s.value(&name))
                .ok_or_else(|| LaraError::schema(format!("BY names `{name}`, which is not a value attribute")))?;
            let f = match spec {
                FnSpec::Builtin(b) => PlusFn::builtin(b, attr.default_value().clone(), attr.ty),
                FnSpec::Expr { expr, assoc, comm, idem } => PlusFn {
                    name: format!("{expr}"),
                    op: BinaryFn::expr(name.clone(), expr),
                    identity: attr.default_value().clone(),
                    domain: attr.ty,
                    associative: assoc,
                    commutative: comm,
                    idempotent: idem,
                },
            };
            out.push((name, f));
        }
        Ok(out)
    }

    fn times_fns(&self, items: Vec<(String, FnSpec)>, a: &Schema, b: &Schema) -> Result<Vec<(String, TimesFn)>> {
        let mut out = Vec::new();
        for (name, spec) in items {
            let (Some(x), Some(y)) = (a.value(&name), b.value(&name)) else {
                return Err(LaraError::schema(format!(
                    "BY names `{name}`, which is not a value attribute of both join inputs"
                )));
            };
            let ann = (x.default_value().clone(), y.default_value().clone());
            let f = match spec {
                FnSpec::Builtin(bi) => TimesFn::builtin(bi, ann, x.ty, y.ty),
                FnSpec::Expr { expr, comm, .. } => TimesFn {
                    name: format!("{expr}"),
                    op: BinaryFn::expr(name.clone(), expr),
                    annihilators: ann,
                    left: x.ty,
                    right: y.ty,
                    commutative: comm,
                    distributes_over: None,
                },
            };
            out.push((name, f));
        }
        Ok(out)
    }

    fn tableau_row(&mut self) -> Result<TableauRow> {
        self.cur.expect_sym("{")?;
        self.cur.skip_newlines();
        let keys = if self.cur.eat_kw("keys") { self.expr_items()? } else { vec![] };
        self.cur.skip_newlines();
        let vals = if self.cur.eat_kw("vals") { self.expr_items()? } else { vec![] };
        self.cur.skip_newlines();
        self.cur.expect_sym("}")?;
        Ok(TableauRow { keys, vals })
    }

    fn add(&mut self, name: &str, label: Label, op: LogicalOp, at: (usize, usize)) -> Result<NodeId> {
        let id = self
            .plan
            .add(name, label, op, self.tables)
            .map_err(|e| at_line(at.0, at.1, e))?;
        Ok(id)
    }

    fn statement(&mut self) -> Result<()> {
        let start = self.cur.peek().cloned().expect("statement start");
        let at = (start.line, start.column);
        if self.cur.eat_kw("store") {
            let input = self.ident_ref()?;
            let table = if self.cur.eat_kw("as") {
                self.cur.expect_string()?
            } else {
                self.plan.node(input).name.clone()
            };
            let upper = if self.cur.eat_kw("upper") {
                let l = self.name_list()?;
                if l.len() != 2 {
                    return Err(self.cur.error("UPPER takes exactly two key attributes"));
                }
                Some((l[0].clone(), l[1].clone()))
            } else {
                None
            };
            let name = self.plan.node(input).name.clone();
            self.add(&name, Label::half(self.line), LogicalOp::Store { input, table, upper }, at)?;
            return Ok(());
        }
        if self.cur.is_kw("sort") && !matches!(self.cur.peek_nth(1), Some(Tok::Sym("="))) {
            self.cur.advance();
            let name = match self.cur.peek_tok() {
                Some(Tok::Ident(n)) => n.clone(),
                _ => return Err(self.cur.error("expected table variable after SORT")),
            };
            let input = self.ident_ref()?;
            self.cur.expect_kw("to")?;
            let path = self.name_list()?;
            let id = self.add(&name, Label::half(self.line), LogicalOp::Sort { input, path }, at)?;
            self.names.insert(name, id);
            return Ok(());
        }
        let name = self.cur.expect_ident()?;
        self.cur.expect_sym("=")?;
        self.line += 1;
        let label = Label::whole(self.line);
        let kw_tok = self.cur.peek().cloned();
        let kw = match self.cur.peek_tok() {
            Some(Tok::Ident(k)) => k.to_ascii_lowercase(),
            _ => return Err(self.cur.error(format!("expected an operator, found {}", self.cur.describe()))),
        };
        self.cur.advance();
        let op = match kw.as_str() {
            "load" => {
                let table = self.cur.expect_string()?;
                let schema = self.tables.table_schema(&table)?;
                let bound = |p: &mut Self, kw: &str| -> Result<Option<Value>> {
                    if !p.cur.eat_kw(kw) {
                        return Ok(None);
                    }
                    let v = p.literal()?;
                    let ty = schema.keys[0].ty;
                    ty.coerce(v).map(Some).map_err(|e| p.cur.error(e.to_string()))
                };
                let from = bound(self, "from")?;
                let to = bound(self, "to")?;
                LogicalOp::Load { table, from, to }
            }
            "map" => {
                let input = self.ident_ref()?;
                self.cur.expect_kw("by")?;
                let items = self.expr_items()?;
                LogicalOp::Map {
                    input,
                    f: ExtFn::map(items).map_err(|e| at_line(at.0, at.1, e))?,
                }
            }
            "ext" => {
                let input = self.ident_ref()?;
                self.cur.expect_kw("by")?;
                let mut rows = vec![self.tableau_row()?];
                while self.cur.eat_kw("row") {
                    rows.push(self.tableau_row()?);
                }
                let monotone = if self.cur.eat_kw("monotone") { self.name_list()? } else { vec![] };
                LogicalOp::Ext {
                    input,
                    f: ExtFn::new(rows, monotone).map_err(|e| at_line(at.0, at.1, e))?,
                }
            }
            "agg" => {
                let input = self.ident_ref()?;
                let on = if self.cur.eat_kw("on") { self.name_list()? } else { vec![] };
                self.cur.expect_kw("by")?;
                let items = self.fn_items()?;
                let plus = self
                    .plus_fns(items, &[self.plan.schema(input)])
                    .map_err(|e| at_line(at.0, at.1, e))?;
                LogicalOp::Agg { input, on, plus }
            }
            "union" | "join" => {
                let a = self.ident_ref()?;
                self.cur.expect_sym(",")?;
                let b = self.ident_ref()?;
                self.cur.expect_kw("by")?;
                let items = self.fn_items()?;
                let (sa, sb) = (self.plan.schema(a).clone(), self.plan.schema(b).clone());
                if kw == "union" {
                    let plus = self.plus_fns(items, &[&sa, &sb]).map_err(|e| at_line(at.0, at.1, e))?;
                    LogicalOp::Union { a, b, plus }
                } else {
                    let times = self.times_fns(items, &sa, &sb).map_err(|e| at_line(at.0, at.1, e))?;
                    LogicalOp::Join { a, b, times }
                }
            }
            "rename" => {
                let input = self.ident_ref()?;
                self.cur.expect_kw("from")?;
                let from = self.cur.expect_ident()?;
                self.cur.expect_kw("to")?;
                let to = self.cur.expect_ident()?;
                LogicalOp::Rename { input, from, to }
            }
            "sort" => {
                let input = self.ident_ref()?;
                self.cur.expect_kw("to")?;
                let path = self.name_list()?;
                LogicalOp::Sort { input, path }
            }
            "repeat" => {
                let src = self.ident_ref()?;
                self.cur.expect_kw("with")?;
                let from = self.cur.expect_string()?;
                self.cur.expect_kw("as")?;
                let to = self.cur.expect_string()?;
                let id = self.repeat(&name, src, &from, &to, label, at)?;
                self.names.insert(name, id);
                return Ok(());
            }
            other => {
                let (line, column) = kw_tok.map(|t| (t.line, t.column)).unwrap_or(at);
                return Err(LaraError::Parse {
                    line,
                    column,
                    message: format!("unknown operator `{other}`"),
                });
            }
        };
        let id = self.add(&name, label, op, at)?;
        self.names.insert(name, id);
        Ok(())
    }

    /// Copy every ancestor of `src` that reads table `from`, reading `to`
    /// instead. The copy of `src` is named `name`; the others are hidden.
    fn repeat(&mut self, name: &str, src: NodeId, from: &str, to: &str, label: Label, at: (usize, usize)) -> Result<NodeId> {
        let n = src + 1;
        let mut tainted = vec![false; n];
        let mut needed = vec![false; n];
        needed[src] = true;
        for i in (0..n).rev() {
            if needed[i] {
                for j in self.plan.node(i).op.inputs() {
                    needed[j] = true;
                }
            }
        }
        for i in 0..n {
            tainted[i] = match &self.plan.node(i).op {
                LogicalOp::Load { table, .. } => table == from,
                op => op.inputs().iter().any(|&j| tainted[j]),
            };
        }
        if !tainted[src] {
            return Err(LaraError::Parse {
                line: at.0,
                column: at.1,
                message: format!("`{}` does not read '{from}'", self.plan.node(src).name),
            });
        }
        let mut remap: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        let mut last = src;
        for i in 0..n {
            if !(needed[i] && tainted[i]) {
                continue;
            }
            let node = self.plan.node(i).clone();
            let mut op = node.op.clone();
            op.map_inputs(|j| remap.get(&j).copied().unwrap_or(j));
            if let LogicalOp::Load { table, .. } = &mut op {
                *table = to.to_string();
            }
            let copy_name = if i == src { name.to_string() } else { format!("{}@{to}", node.name) };
            let id = self.add(&copy_name, label, op, at)?;
            let src_name = self.plan.node(src).name.clone();
            let n = &mut self.plan.nodes[id];
            n.hidden = i != src;
            if i == src {
                n.display = Some(format!("{name} = REPEAT {src_name} WITH '{from}' AS '{to}'"));
            }
            remap.insert(i, id);
            last = id;
        }
        Ok(last)
    }
}

/// Parse plan text, resolving loaded tables through `tables`.
pub fn parse_plan(text: &str, tables: &dyn TableSource) -> Result<LogicalPlan> {
    let toks: Vec<Token> = tokenize(text)?;
    let mut p = Parser {
        cur: TokenCursor::new(&toks),
        tables,
        plan: LogicalPlan::new(),
        names: BTreeMap::new(),
        line: 0,
    };
    loop {
        p.cur.skip_newlines();
        if p.cur.at_end() {
            break;
        }
        p.statement()?;
        if !p.at_stmt_end() {
            return Err(p.cur.error(format!("unexpected {} after statement", p.cur.describe())));
        }
    }
    Ok(p.plan)
}
