//! Scalar expressions: the body of every user-defined function.
//!
//! Expressions are data rather than closures so plans stay serializable and
//! the optimizer can look inside them. Evaluation is total: `Null`
//! propagates through arithmetic, division by zero yields `Null`, and
//! comparisons involving `Null` are false (only `isNull` observes it).

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{LaraError, Result};
use crate::schema::TupleRow;
use crate::value::{ScalarType, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Eq => "=",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul | BinOp::Div => 5,
        }
    }

    fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        )
    }
}

/// Named scalar builtins.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Func {
    /// `bin(t) = t - mod(t,60) + 60*floor(mod(t,60)/60 + 0.5)`
    Bin,
    /// `snap(t, step, anchor)`: nearest point of the grid `anchor + k*step`.
    Snap,
    /// null-to-zero
    Ntz,
    Mod,
    Floor,
    Abs,
    Min,
    Max,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Bin => "bin",
            Func::Snap => "snap",
            Func::Ntz => "ntz",
            Func::Mod => "mod",
            Func::Floor => "floor",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "bin" => Func::Bin,
            "snap" => Func::Snap,
            "ntz" => Func::Ntz,
            "mod" => Func::Mod,
            "floor" => Func::Floor,
            "abs" => Func::Abs,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    fn arity(self) -> usize {
        match self {
            Func::Bin | Func::Ntz | Func::Floor | Func::Abs => 1,
            Func::Mod | Func::Min | Func::Max => 2,
            Func::Snap => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ScalarExpr {
    Attr(String),
    Lit(Value),
    Neg(Box<ScalarExpr>),
    Not(Box<ScalarExpr>),
    Binary(BinOp, Box<ScalarExpr>, Box<ScalarExpr>),
    If(Box<ScalarExpr>, Box<ScalarExpr>, Box<ScalarExpr>),
    IsNull(Box<ScalarExpr>),
    Call(Func, Vec<ScalarExpr>),
}

impl ScalarExpr {
    pub fn attr(name: impl Into<String>) -> ScalarExpr {
        ScalarExpr::Attr(name.into())
    }

    pub fn lit(v: impl Into<Value>) -> ScalarExpr {
        ScalarExpr::Lit(v.into())
    }

    pub fn null() -> ScalarExpr {
        ScalarExpr::Lit(Value::Null)
    }

    pub fn binary(op: BinOp, l: ScalarExpr, r: ScalarExpr) -> ScalarExpr {
        ScalarExpr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn if_else(c: ScalarExpr, t: ScalarExpr, e: ScalarExpr) -> ScalarExpr {
        ScalarExpr::If(Box::new(c), Box::new(t), Box::new(e))
    }

    pub fn call(f: Func, args: Vec<ScalarExpr>) -> ScalarExpr {
        ScalarExpr::Call(f, args)
    }

    pub fn ntz(e: ScalarExpr) -> ScalarExpr {
        ScalarExpr::Call(Func::Ntz, vec![e])
    }

    /// Attribute names referenced anywhere in the expression.
    pub fn attributes(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let ScalarExpr::Attr(n) = e {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
        });
        out
    }

    pub fn visit(&self, f: &mut dyn FnMut(&ScalarExpr)) {
        f(self);
        match self {
            ScalarExpr::Attr(_) | ScalarExpr::Lit(_) => {}
            ScalarExpr::Neg(e) | ScalarExpr::Not(e) | ScalarExpr::IsNull(e) => e.visit(f),
            ScalarExpr::Binary(_, l, r) => {
                l.visit(f);
                r.visit(f);
            }
            ScalarExpr::If(c, t, e) => {
                c.visit(f);
                t.visit(f);
                e.visit(f);
            }
            ScalarExpr::Call(_, args) => args.iter().for_each(|a| a.visit(f)),
        }
    }

    /// Replace attribute references according to `map` (used by renames).
    pub fn rename_attr(&self, from: &str, to: &str) -> ScalarExpr {
        match self {
            ScalarExpr::Attr(n) if n == from => ScalarExpr::Attr(to.to_string()),
            ScalarExpr::Attr(_) | ScalarExpr::Lit(_) => self.clone(),
            ScalarExpr::Neg(e) => ScalarExpr::Neg(Box::new(e.rename_attr(from, to))),
            ScalarExpr::Not(e) => ScalarExpr::Not(Box::new(e.rename_attr(from, to))),
            ScalarExpr::IsNull(e) => ScalarExpr::IsNull(Box::new(e.rename_attr(from, to))),
            ScalarExpr::Binary(op, l, r) => ScalarExpr::Binary(
                *op,
                Box::new(l.rename_attr(from, to)),
                Box::new(r.rename_attr(from, to)),
            ),
            ScalarExpr::If(c, t, e) => ScalarExpr::If(
                Box::new(c.rename_attr(from, to)),
                Box::new(t.rename_attr(from, to)),
                Box::new(e.rename_attr(from, to)),
            ),
            ScalarExpr::Call(func, args) => ScalarExpr::Call(
                *func,
                args.iter().map(|a| a.rename_attr(from, to)).collect(),
            ),
        }
    }

    /// Compile against a row layout. Every referenced attribute must appear
    /// in `layout`; its type may be unknown (`None`) for untyped rows.
    pub fn bind(&self, layout: &[(String, Option<ScalarType>)]) -> Result<BoundExpr> {
        let (node, ty) = bind_node(self, layout)?;
        Ok(BoundExpr { node, ty })
    }

    /// Bind against a schema-typed layout.
    pub fn bind_typed(&self, layout: &[(String, ScalarType)]) -> Result<BoundExpr> {
        let l: Vec<(String, Option<ScalarType>)> =
            layout.iter().map(|(n, t)| (n.clone(), Some(*t))).collect();
        self.bind(&l)
    }

    /// Evaluate against a named row. Unbound attributes are an error.
    pub fn eval(&self, row: &TupleRow) -> Result<Value> {
        let layout: Vec<(String, Option<ScalarType>)> = row
            .0
            .iter()
            .map(|(n, v)| (n.clone(), v.scalar_type()))
            .collect();
        let bound = self.bind(&layout)?;
        Ok(bound.eval(&row.values()))
    }
}

/// Public entry point matching the operation name used in docs and the CLI.
pub fn eval_scalar_expr(expr: &ScalarExpr, row: &TupleRow) -> Result<Value> {
    expr.eval(row)
}

#[derive(Clone, Debug)]
enum Node {
    Slot(usize),
    Lit(Value),
    Neg(Box<Node>),
    Not(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    If(Box<Node>, Box<Node>, Box<Node>),
    IsNull(Box<Node>),
    Ntz(Box<Node>, Value),
    Call(Func, Vec<Node>),
}

/// An expression compiled against a fixed row layout.
#[derive(Clone, Debug)]
pub struct BoundExpr {
    node: Node,
    ty: Option<ScalarType>,
}

impl BoundExpr {
    /// Statically inferred result type; `None` when the expression can only
    /// produce `Null`.
    pub fn result_type(&self) -> Option<ScalarType> {
        self.ty
    }

    pub fn eval(&self, row: &[Value]) -> Value {
        eval_node(&self.node, row)
    }

    pub fn eval_bool(&self, row: &[Value]) -> bool {
        truthy(&self.eval(row))
    }
}

fn unify(a: Option<ScalarType>, b: Option<ScalarType>, what: &str) -> Result<Option<ScalarType>> {
    match (a, b) {
        (None, t) | (t, None) => Ok(t),
        (Some(x), Some(y)) if x == y => Ok(Some(x)),
        (Some(x), Some(y)) if x.is_numeric() && y.is_numeric() => Ok(Some(ScalarType::Float64)),
        (Some(x), Some(y)) => Err(LaraError::schema(format!(
            "{what}: incompatible types {x} and {y}"
        ))),
    }
}

fn numeric(t: Option<ScalarType>, what: &str) -> Result<()> {
    match t {
        Some(t) if !t.is_numeric() => Err(LaraError::schema(format!(
            "{what} needs numeric operands, got {t}"
        ))),
        _ => Ok(()),
    }
}

fn bind_node(
    e: &ScalarExpr,
    layout: &[(String, Option<ScalarType>)],
) -> Result<(Node, Option<ScalarType>)> {
    Ok(match e {
        ScalarExpr::Attr(n) => {
            let idx = layout
                .iter()
                .position(|(name, _)| name == n)
                .ok_or_else(|| LaraError::UnboundAttribute(n.clone()))?;
            (Node::Slot(idx), layout[idx].1)
        }
        ScalarExpr::Lit(v) => (Node::Lit(v.clone()), v.scalar_type()),
        ScalarExpr::Neg(x) => {
            let (n, t) = bind_node(x, layout)?;
            numeric(t, "negation")?;
            (Node::Neg(Box::new(n)), t)
        }
        ScalarExpr::Not(x) => {
            let (n, _) = bind_node(x, layout)?;
            (Node::Not(Box::new(n)), Some(ScalarType::Bool))
        }
        ScalarExpr::IsNull(x) => {
            let (n, _) = bind_node(x, layout)?;
            (Node::IsNull(Box::new(n)), Some(ScalarType::Bool))
        }
        ScalarExpr::Binary(op, l, r) => {
            let (ln, lt) = bind_node(l, layout)?;
            let (rn, rt) = bind_node(r, layout)?;
            let ty = match op {
                BinOp::Add | BinOp::Sub | BinOp::Mul => {
                    numeric(lt, op.symbol())?;
                    numeric(rt, op.symbol())?;
                    unify(lt, rt, op.symbol())?.or(Some(ScalarType::Int64))
                }
                BinOp::Div => {
                    numeric(lt, "/")?;
                    numeric(rt, "/")?;
                    Some(ScalarType::Float64)
                }
                _ => Some(ScalarType::Bool),
            };
            (Node::Binary(*op, Box::new(ln), Box::new(rn)), ty)
        }
        ScalarExpr::If(c, t, f) => {
            let (cn, _) = bind_node(c, layout)?;
            let (tn, tt) = bind_node(t, layout)?;
            let (fnode, ft) = bind_node(f, layout)?;
            let ty = unify(tt, ft, "if branches")?;
            (Node::If(Box::new(cn), Box::new(tn), Box::new(fnode)), ty)
        }
        ScalarExpr::Call(func, args) => {
            if args.len() != func.arity() {
                return Err(LaraError::schema(format!(
                    "{}() takes {} argument(s), got {}",
                    func.name(),
                    func.arity(),
                    args.len()
                )));
            }
            let mut nodes = Vec::with_capacity(args.len());
            let mut types = Vec::with_capacity(args.len());
            for a in args {
                let (n, t) = bind_node(a, layout)?;
                nodes.push(n);
                types.push(t);
            }
            match func {
                Func::Ntz => {
                    let t = types[0].unwrap_or(ScalarType::Int64);
                    let zero = t.zero();
                    (Node::Ntz(Box::new(nodes.remove(0)), zero), Some(t))
                }
                Func::Bin | Func::Floor | Func::Abs => {
                    numeric(types[0], func.name())?;
                    (Node::Call(*func, nodes), types[0].or(Some(ScalarType::Int64)))
                }
                Func::Snap | Func::Mod | Func::Min | Func::Max => {
                    let mut ty = None;
                    for t in &types {
                        numeric(*t, func.name())?;
                        ty = unify(ty, *t, func.name())?;
                    }
                    (Node::Call(*func, nodes), ty.or(Some(ScalarType::Int64)))
                }
            }
        }
    })
}

pub(crate) fn truthy(v: &Value) -> bool {
    matches!(v, Value::Bool(true))
}

fn arith(op: BinOp, a: &Value, b: &Value) -> Value {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => match op {
            BinOp::Add => Value::Int(x.wrapping_add(*y)),
            BinOp::Sub => Value::Int(x.wrapping_sub(*y)),
            BinOp::Mul => Value::Int(x.wrapping_mul(*y)),
            BinOp::Div => {
                if *y == 0 {
                    Value::Null
                } else {
                    Value::Float(*x as f64 / *y as f64)
                }
            }
            _ => unreachable!(),
        },
        _ => match (a.as_f64(), b.as_f64()) {
            (Some(x), Some(y)) => match op {
                BinOp::Add => Value::Float(x + y),
                BinOp::Sub => Value::Float(x - y),
                BinOp::Mul => Value::Float(x * y),
                BinOp::Div => {
                    if y == 0.0 {
                        Value::Null
                    } else {
                        Value::Float(x / y)
                    }
                }
                _ => unreachable!(),
            },
            _ => Value::Null,
        },
    }
}

fn compare(a: &Value, b: &Value) -> Option<Ordering> {
    match (a, b) {
        (Value::Null, _) | (_, Value::Null) => None,
        (Value::Int(x), Value::Int(y)) => Some(x.cmp(y)),
        (Value::Int(_), Value::Float(_)) | (Value::Float(_), Value::Int(_)) | (Value::Float(_), Value::Float(_)) => {
            a.as_f64()?.partial_cmp(&b.as_f64()?)
        }
        (Value::Bool(x), Value::Bool(y)) => Some(x.cmp(y)),
        (Value::Str(x), Value::Str(y)) => Some(x.cmp(y)),
        _ => None,
    }
}

fn eval_node(n: &Node, row: &[Value]) -> Value {
    match n {
        Node::Slot(i) => row[*i].clone(),
        Node::Lit(v) => v.clone(),
        Node::Neg(x) => match eval_node(x, row) {
            Value::Int(i) => Value::Int(i.wrapping_neg()),
            Value::Float(f) => Value::Float(-f),
            _ => Value::Null,
        },
        Node::Not(x) => Value::Bool(!truthy(&eval_node(x, row))),
        Node::IsNull(x) => Value::Bool(eval_node(x, row).is_null()),
        Node::Binary(op, l, r) => {
            let a = eval_node(l, row);
            match op {
                BinOp::And => {
                    if !truthy(&a) {
                        return Value::Bool(false);
                    }
                    Value::Bool(truthy(&eval_node(r, row)))
                }
                BinOp::Or => {
                    if truthy(&a) {
                        return Value::Bool(true);
                    }
                    Value::Bool(truthy(&eval_node(r, row)))
                }
                _ => {
                    let b = eval_node(r, row);
                    if op.is_comparison() {
                        let ord = compare(&a, &b);
                        let res = match op {
                            BinOp::Eq => ord == Some(Ordering::Equal),
                            BinOp::Ne => {
                                !(a.is_null() || b.is_null()) && ord != Some(Ordering::Equal)
                            }
                            BinOp::Lt => ord == Some(Ordering::Less),
                            BinOp::Le => matches!(ord, Some(Ordering::Less | Ordering::Equal)),
                            BinOp::Gt => ord == Some(Ordering::Greater),
                            BinOp::Ge => {
                                matches!(ord, Some(Ordering::Greater | Ordering::Equal))
                            }
                            _ => unreachable!(),
                        };
                        Value::Bool(res)
                    } else if a.is_null() || b.is_null() {
                        Value::Null
                    } else {
                        arith(*op, &a, &b)
                    }
                }
            }
        }
        Node::If(c, t, e) => {
            if truthy(&eval_node(c, row)) {
                eval_node(t, row)
            } else {
                eval_node(e, row)
            }
        }
        Node::Ntz(x, zero) => match eval_node(x, row) {
            Value::Null => zero.clone(),
            v => v,
        },
        Node::Call(func, args) => {
            let vals: Vec<Value> = args.iter().map(|a| eval_node(a, row)).collect();
            if vals.iter().any(Value::is_null) {
                return Value::Null;
            }
            eval_func(*func, &vals)
        }
    }
}

fn eval_func(func: Func, vals: &[Value]) -> Value {
    match func {
        Func::Bin => match &vals[0] {
            Value::Int(t) => {
                let r = t.rem_euclid(60);
                let up = if 2 * r >= 60 { 60 } else { 0 };
                Value::Int(t - r + up)
            }
            Value::Float(t) => {
                let r = t.rem_euclid(60.0);
                Value::Float(t - r + 60.0 * (r / 60.0 + 0.5).floor())
            }
            _ => Value::Null,
        },
        Func::Snap => match (&vals[0], &vals[1], &vals[2]) {
            (Value::Int(t), Value::Int(step), Value::Int(anchor)) => {
                if *step <= 0 {
                    return Value::Null;
                }
                let d = t.wrapping_sub(*anchor);
                let k = (2 * d + step).div_euclid(2 * step);
                Value::Int(anchor + k * step)
            }
            _ => match (vals[0].as_f64(), vals[1].as_f64(), vals[2].as_f64()) {
                (Some(t), Some(step), Some(anchor)) if step > 0.0 => {
                    Value::Float(anchor + step * ((t - anchor) / step + 0.5).floor())
                }
                _ => Value::Null,
            },
        },
        Func::Mod => match (&vals[0], &vals[1]) {
            (Value::Int(a), Value::Int(b)) => {
                if *b == 0 {
                    Value::Null
                } else {
                    Value::Int(a.rem_euclid(*b))
                }
            }
            _ => match (vals[0].as_f64(), vals[1].as_f64()) {
                (Some(a), Some(b)) if b != 0.0 => Value::Float(a.rem_euclid(b)),
                _ => Value::Null,
            },
        },
        Func::Floor => match &vals[0] {
            Value::Int(i) => Value::Int(*i),
            Value::Float(f) => Value::Float(f.floor()),
            _ => Value::Null,
        },
        Func::Abs => match &vals[0] {
            Value::Int(i) => Value::Int(i.wrapping_abs()),
            Value::Float(f) => Value::Float(f.abs()),
            _ => Value::Null,
        },
        Func::Min | Func::Max => {
            let ord = compare(&vals[0], &vals[1]);
            let pick_first = match (func, ord) {
                (_, None) => return Value::Null,
                (Func::Min, Some(o)) => o != Ordering::Greater,
                (_, Some(o)) => o != Ordering::Less,
            };
            let v = if pick_first { &vals[0] } else { &vals[1] };
            match (&vals[0], &vals[1]) {
                (Value::Int(_), Value::Int(_)) => v.clone(),
                _ => v.as_f64().map(Value::Float).unwrap_or_else(|| v.clone()),
            }
        }
        Func::Ntz => unreachable!("ntz is compiled to its own node"),
    }
}

fn fmt_prec(e: &ScalarExpr, parent: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        ScalarExpr::Attr(n) => f.write_str(n),
        ScalarExpr::Lit(Value::Str(s)) => write!(f, "'{}'", s.replace('\'', "\\'")),
        ScalarExpr::Lit(v) => write!(f, "{v}"),
        ScalarExpr::Neg(x) => {
            f.write_str("-")?;
            fmt_prec(x, 6, f)
        }
        ScalarExpr::Not(x) => {
            f.write_str("!")?;
            fmt_prec(x, 6, f)
        }
        ScalarExpr::IsNull(x) => write!(f, "isNull({x})"),
        ScalarExpr::Binary(op, l, r) => {
            let p = op.precedence();
            if p < parent {
                f.write_str("(")?;
            }
            // comparisons do not associate: (a < b) = c must keep its parens
            fmt_prec(l, if op.is_comparison() { p + 1 } else { p }, f)?;
            write!(f, " {} ", op.symbol())?;
            // right operand binds one level tighter: a - (b - c)
            fmt_prec(r, p + 1, f)?;
            if p < parent {
                f.write_str(")")?;
            }
            Ok(())
        }
        ScalarExpr::If(c, t, e) => write!(f, "if({c}, {t}, {e})"),
        ScalarExpr::Call(func, args) => {
            write!(f, "{}(", func.name())?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")
        }
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_prec(self, 0, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::udf::parse::parse_expr;

    fn eval(src: &str, row: &[(&str, Value)]) -> Value {
        let row = TupleRow::from_pairs(row.iter().cloned());
        parse_expr(src).unwrap().eval(&row).unwrap()
    }

    #[test]
    fn range_filter_drops_t440() {
        let v = eval(
            "if(460 <= t <= 860, v, ⊥)",
            &[("t", Value::Int(440)), ("v", Value::Float(38.6))],
        );
        assert!(v.is_null());
        let v = eval(
            "if(460 <= t <= 860, v, ⊥)",
            &[("t", Value::Int(466)), ("v", Value::Float(55.2))],
        );
        assert_eq!(v, Value::Float(55.2));
    }

    #[test]
    fn ntz_of_bottom_is_zero() {
        assert_eq!(eval("ntz(⊥)", &[]), Value::Int(0));
        assert_eq!(eval("ntz(v)", &[("v", Value::Float(2.5))]), Value::Float(2.5));
    }

    #[test]
    fn bin_uses_the_caption_formula() {
        // 466 - 46 + 60*floor(46/60 + 0.5) = 420 + 60
        assert_eq!(eval("bin(466)", &[]), Value::Int(480));
        assert_eq!(eval("bin(492)", &[]), Value::Int(480));
        assert_eq!(eval("bin(528.0)", &[]), Value::Float(540.0));
    }

    #[test]
    fn snap_reproduces_the_printed_bins() {
        for (t, want) in [(466, 460), (492, 520), (528, 520)] {
            assert_eq!(eval("snap(t, 60, 460)", &[("t", Value::Int(t))]), Value::Int(want));
        }
    }

    #[test]
    fn null_semantics() {
        assert!(eval("v + 1", &[("v", Value::Null)]).is_null());
        assert_eq!(eval("v != ⊥", &[("v", Value::Int(1))]), Value::Bool(false));
        assert_eq!(eval("isNull(v)", &[("v", Value::Null)]), Value::Bool(true));
        assert!(eval("1 / 0", &[]).is_null());
    }

    #[test]
    fn unbound_attribute_is_named() {
        let e = parse_expr("x + y").unwrap();
        match e.eval(&TupleRow::from_pairs([("x", Value::Int(1))])) {
            Err(LaraError::UnboundAttribute(n)) => assert_eq!(n, "y"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn display_round_trips_through_the_parser() {
        for src in [
            "if(460 <= t && t <= 860, v, null)",
            "v / (v' - 1)",
            "a - (b - c)",
            "(a - b) - c",
            "-x * 2",
            "!isNull(v) || c = 'temp'",
            "snap(t, 60, 460)",
        ] {
            let e = parse_expr(src).unwrap();
            let again = parse_expr(&e.to_string()).unwrap();
            assert_eq!(e, again, "{src} -> {e}");
        }
    }

    #[test]
    fn types_are_inferred() {
        let layout = vec![
            ("v".to_string(), Some(ScalarType::Float64)),
            ("cnt".to_string(), Some(ScalarType::Int64)),
        ];
        let b = parse_expr("v / cnt").unwrap().bind(&layout).unwrap();
        assert_eq!(b.result_type(), Some(ScalarType::Float64));
        let b = parse_expr("cnt + 1").unwrap().bind(&layout).unwrap();
        assert_eq!(b.result_type(), Some(ScalarType::Int64));
        assert!(parse_expr("'a' + 1").unwrap().bind(&layout).is_err());
    }
}
