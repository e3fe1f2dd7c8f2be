//! User-defined ⊕, ⊗ and ext functions.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{LaraError, Result};
use crate::schema::{AttributeSchema, Schema};
use crate::udf::expr::{BoundExpr, ScalarExpr};
use crate::value::{ScalarType, Value};

/// Builtin binary functions usable as ⊕ or ⊗.
///
/// The aggregating builtins (`sum`, `any`, `max`, `min`, `or`, `and`) skip
/// `Null`, so `Null` is an identity for them alongside their usual zero. The
/// arithmetic ones (`times`, `minus`, `div`) propagate `Null`, which makes
/// `Null` an annihilator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Builtin {
    Sum,
    Times,
    Minus,
    Div,
    Any,
    Max,
    Min,
    Or,
    And,
}

impl Builtin {
    pub fn from_name(s: &str) -> Option<Builtin> {
        Some(match s.to_ascii_lowercase().as_str() {
            "+" | "sum" | "plus" | "add" => Builtin::Sum,
            "*" | "times" | "mul" | "multiply" => Builtin::Times,
            "-" | "minus" | "sub" | "subtract" => Builtin::Minus,
            "/" | "div" | "divide" => Builtin::Div,
            "any" => Builtin::Any,
            "max" => Builtin::Max,
            "min" => Builtin::Min,
            "or" => Builtin::Or,
            "and" => Builtin::And,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Sum => "sum",
            Builtin::Times => "times",
            Builtin::Minus => "minus",
            Builtin::Div => "div",
            Builtin::Any => "any",
            Builtin::Max => "max",
            Builtin::Min => "min",
            Builtin::Or => "or",
            Builtin::And => "and",
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Builtin::Sum => "+",
            Builtin::Times => "*",
            Builtin::Minus => "-",
            Builtin::Div => "/",
            other => other.name(),
        }
    }

    /// Laws the builtin is known to satisfy, as (associative, commutative, idempotent).
    pub fn laws(self) -> (bool, bool, bool) {
        match self {
            Builtin::Sum | Builtin::Times => (true, true, false),
            Builtin::Minus | Builtin::Div => (false, false, false),
            Builtin::Any => (true, false, true),
            Builtin::Max | Builtin::Min | Builtin::Or | Builtin::And => (true, true, true),
        }
    }

    fn result_type(self, l: ScalarType, r: ScalarType) -> Result<ScalarType> {
        let numeric = |name: &str| {
            if l.is_numeric() && r.is_numeric() {
                Ok(if l == ScalarType::Int64 && r == ScalarType::Int64 {
                    ScalarType::Int64
                } else {
                    ScalarType::Float64
                })
            } else {
                Err(LaraError::schema(format!(
                    "{name} needs numeric operands, got {l} and {r}"
                )))
            }
        };
        match self {
            Builtin::Sum | Builtin::Times | Builtin::Minus => numeric(self.name()),
            Builtin::Div => numeric("div").map(|_| ScalarType::Float64),
            Builtin::Max | Builtin::Min | Builtin::Any => {
                if l == r {
                    Ok(l)
                } else {
                    numeric(self.name())
                }
            }
            Builtin::Or | Builtin::And => {
                if l == ScalarType::Bool && r == ScalarType::Bool {
                    Ok(ScalarType::Bool)
                } else {
                    Err(LaraError::schema(format!("{} needs bool operands", self.name())))
                }
            }
        }
    }

    pub fn apply(self, a: &Value, b: &Value) -> Value {
        match self {
            Builtin::Sum | Builtin::Any | Builtin::Max | Builtin::Min | Builtin::Or | Builtin::And => {
                match (a, b) {
                    (Value::Null, x) | (x, Value::Null) => x.clone(),
                    _ => self.apply_present(a, b),
                }
            }
            Builtin::Times | Builtin::Minus | Builtin::Div => {
                if a.is_null() || b.is_null() {
                    Value::Null
                } else {
                    self.apply_present(a, b)
                }
            }
        }
    }

    fn apply_present(self, a: &Value, b: &Value) -> Value {
        match self {
            Builtin::Any => a.clone(),
            Builtin::Or => Value::Bool(a.as_bool().unwrap_or(false) || b.as_bool().unwrap_or(false)),
            Builtin::And => Value::Bool(a.as_bool().unwrap_or(false) && b.as_bool().unwrap_or(false)),
            Builtin::Max | Builtin::Min => {
                let ord = match (a, b) {
                    (Value::Int(x), Value::Int(y)) => x.cmp(y),
                    _ => match (a.as_f64(), b.as_f64()) {
                        (Some(x), Some(y)) => x.partial_cmp(&y).unwrap_or(Ordering::Equal),
                        _ => a.cmp(b),
                    },
                };
                let first = if self == Builtin::Max {
                    ord != Ordering::Less
                } else {
                    ord != Ordering::Greater
                };
                let pick = if first { a } else { b };
                match (a, b) {
                    (Value::Float(_), Value::Int(_)) | (Value::Int(_), Value::Float(_)) => {
                        Value::Float(pick.as_f64().unwrap_or(f64::NAN))
                    }
                    _ => pick.clone(),
                }
            }
            Builtin::Sum | Builtin::Times | Builtin::Minus => match (a, b) {
                (Value::Int(x), Value::Int(y)) => Value::Int(match self {
                    Builtin::Sum => x.wrapping_add(*y),
                    Builtin::Times => x.wrapping_mul(*y),
                    _ => x.wrapping_sub(*y),
                }),
                _ => match (a.as_f64(), b.as_f64()) {
                    (Some(x), Some(y)) => Value::Float(match self {
                        Builtin::Sum => x + y,
                        Builtin::Times => x * y,
                        _ => x - y,
                    }),
                    _ => Value::Null,
                },
            },
            Builtin::Div => match (a.as_f64(), b.as_f64()) {
                (Some(_), Some(y)) if y == 0.0 => Value::Null,
                (Some(x), Some(y)) => Value::Float(x / y),
                _ => Value::Null,
            },
        }
    }
}

/// A binary scalar function: a builtin or an expression in which the left
/// operand is called `attr` and the right operand `attr'`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum BinaryFn {
    Builtin(Builtin),
    Expr { expr: ScalarExpr, attr: String },
}

impl BinaryFn {
    pub fn expr(attr: impl Into<String>, expr: ScalarExpr) -> BinaryFn {
        BinaryFn::Expr {
            expr,
            attr: attr.into(),
        }
    }

    pub fn bind(&self, left: ScalarType, right: ScalarType) -> Result<BoundBinary> {
        match self {
            BinaryFn::Builtin(b) => Ok(BoundBinary {
                kind: BoundKind::Builtin(*b),
                out: b.result_type(left, right)?,
            }),
            BinaryFn::Expr { expr, attr } => {
                let layout = vec![
                    (attr.clone(), Some(left)),
                    (format!("{attr}'"), Some(right)),
                ];
                let bound = expr.bind(&layout)?;
                let out = bound.result_type().unwrap_or(left);
                Ok(BoundBinary {
                    kind: BoundKind::Expr(bound),
                    out,
                })
            }
        }
    }

    pub fn builtin(&self) -> Option<Builtin> {
        match self {
            BinaryFn::Builtin(b) => Some(*b),
            BinaryFn::Expr { .. } => None,
        }
    }
}

impl fmt::Display for BinaryFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BinaryFn::Builtin(b) => f.write_str(b.symbol()),
            BinaryFn::Expr { expr, .. } => write!(f, "{expr}"),
        }
    }
}

#[derive(Clone, Debug)]
enum BoundKind {
    Builtin(Builtin),
    Expr(BoundExpr),
}

/// A binary function compiled for concrete operand types.
#[derive(Clone, Debug)]
pub struct BoundBinary {
    kind: BoundKind,
    out: ScalarType,
}

impl BoundBinary {
    pub fn output_type(&self) -> ScalarType {
        self.out
    }

    pub fn apply(&self, a: &Value, b: &Value) -> Value {
        let v = match &self.kind {
            BoundKind::Builtin(op) => op.apply(a, b),
            BoundKind::Expr(e) => e.eval(&[a.clone(), b.clone()]),
        };
        self.out.coerce(v).unwrap_or(Value::Null)
    }
}

/// ⊕: folds colliding values in union and aggregation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlusFn {
    pub name: String,
    pub op: BinaryFn,
    pub identity: Value,
    pub domain: ScalarType,
    pub associative: bool,
    pub commutative: bool,
    pub idempotent: bool,
}

impl PlusFn {
    pub fn builtin(b: Builtin, identity: Value, domain: ScalarType) -> PlusFn {
        let (associative, commutative, idempotent) = b.laws();
        PlusFn {
            name: b.name().to_string(),
            op: BinaryFn::Builtin(b),
            identity,
            domain,
            associative,
            commutative,
            idempotent,
        }
    }

    pub fn sum(identity: Value, domain: ScalarType) -> PlusFn {
        PlusFn::builtin(Builtin::Sum, identity, domain)
    }

    pub fn bind(&self) -> Result<BoundBinary> {
        self.op.bind(self.domain, self.domain)
    }

    /// Same function, re-targeted at a different identity (e.g. after a
    /// default changes from ⊥ to 0).
    pub fn with_identity(&self, identity: Value) -> PlusFn {
        PlusFn {
            identity,
            ..self.clone()
        }
    }
}

impl fmt::Display for PlusFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.op)
    }
}

/// ⊗: multiplies matching values in join.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimesFn {
    pub name: String,
    pub op: BinaryFn,
    pub annihilators: (Value, Value),
    pub left: ScalarType,
    pub right: ScalarType,
    pub commutative: bool,
    pub distributes_over: Option<String>,
}

impl TimesFn {
    pub fn builtin(b: Builtin, annihilators: (Value, Value), left: ScalarType, right: ScalarType) -> TimesFn {
        let (_, commutative, _) = b.laws();
        TimesFn {
            name: b.name().to_string(),
            op: BinaryFn::Builtin(b),
            annihilators,
            left,
            right,
            commutative,
            distributes_over: (b == Builtin::Times).then(|| "sum".to_string()),
        }
    }

    pub fn bind(&self) -> Result<BoundBinary> {
        self.op.bind(self.left, self.right)
    }

    /// The join's output default, `0_A ⊗ 0_B`.
    pub fn output_default(&self) -> Result<Value> {
        let b = self.bind()?;
        Ok(b.apply(&self.annihilators.0, &self.annihilators.1))
    }
}

impl fmt::Display for TimesFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.op)
    }
}

/// One output row of an ext function's tableau.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableauRow {
    pub keys: Vec<(String, ScalarExpr)>,
    pub vals: Vec<(String, ScalarExpr)>,
}

/// f for ext: maps each input tuple to a small table given as a tableau.
///
/// Every row of the tableau produces the same attribute names. A tableau
/// with no key columns is a map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtFn {
    pub rows: Vec<TableauRow>,
    /// Input key attributes the new keys are declared monotone in.
    pub monotone_in: Vec<String>,
}

impl ExtFn {
    pub fn new(rows: Vec<TableauRow>, monotone_in: Vec<String>) -> Result<ExtFn> {
        let first = rows
            .first()
            .ok_or_else(|| LaraError::schema("ext tableau needs at least one row"))?;
        let knames: Vec<&String> = first.keys.iter().map(|(n, _)| n).collect();
        let vnames: Vec<&String> = first.vals.iter().map(|(n, _)| n).collect();
        for r in &rows[1..] {
            let k: Vec<&String> = r.keys.iter().map(|(n, _)| n).collect();
            let v: Vec<&String> = r.vals.iter().map(|(n, _)| n).collect();
            if k != knames || v != vnames {
                return Err(LaraError::schema(format!(
                    "ext tableau rows disagree on schema: {knames:?}/{vnames:?} vs {k:?}/{v:?}"
                )));
            }
        }
        let mut all: Vec<&String> = knames.iter().chain(vnames.iter()).copied().collect();
        all.sort();
        if all.windows(2).any(|w| w[0] == w[1]) {
            return Err(LaraError::schema("ext tableau repeats an attribute name"));
        }
        Ok(ExtFn { rows, monotone_in })
    }

    /// A map: one tableau row, no new keys.
    pub fn map(vals: Vec<(String, ScalarExpr)>) -> Result<ExtFn> {
        ExtFn::new(vec![TableauRow { keys: vec![], vals }], vec![])
    }

    /// The identity map over the given value attributes.
    pub fn identity(values: &[String]) -> ExtFn {
        ExtFn::map(
            values
                .iter()
                .map(|v| (v.clone(), ScalarExpr::attr(v)))
                .collect(),
        )
        .expect("identity map is well formed")
    }

    pub fn new_key_names(&self) -> Vec<String> {
        self.rows[0].keys.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn value_names(&self) -> Vec<String> {
        self.rows[0].vals.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn is_map(&self) -> bool {
        self.rows.len() == 1 && self.rows[0].keys.is_empty()
    }

    /// Attributes read by the new-key expressions.
    pub fn key_inputs(&self) -> Vec<String> {
        let mut out = Vec::new();
        for r in &self.rows {
            for (_, e) in &r.keys {
                for a in e.attributes() {
                    if !out.contains(&a) {
                        out.push(a);
                    }
                }
            }
        }
        out
    }

    pub fn rename_input(&self, from: &str, to: &str) -> ExtFn {
        ExtFn {
            rows: self
                .rows
                .iter()
                .map(|r| TableauRow {
                    keys: r
                        .keys
                        .iter()
                        .map(|(n, e)| (n.clone(), e.rename_attr(from, to)))
                        .collect(),
                    vals: r
                        .vals
                        .iter()
                        .map(|(n, e)| (n.clone(), e.rename_attr(from, to)))
                        .collect(),
                })
                .collect(),
            monotone_in: self
                .monotone_in
                .iter()
                .map(|m| if m == from { to.to_string() } else { m.clone() })
                .collect(),
        }
    }

    pub fn bind(&self, input: &Schema) -> Result<BoundExt> {
        BoundExt::new(self, input)
    }
}

impl fmt::Display for ExtFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |items: &[(String, ScalarExpr)]| {
            items
                .iter()
                .map(|(n, e)| format!("{n}: {e}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        if self.is_map() {
            return write!(f, "[{}]", list(&self.rows[0].vals));
        }
        for (i, r) in self.rows.iter().enumerate() {
            if i > 0 {
                f.write_str(" ROW ")?;
            }
            write!(f, "{{KEYS [{}] VALS [{}]}}", list(&r.keys), list(&r.vals))?;
        }
        if !self.monotone_in.is_empty() {
            write!(f, " MONOTONE [{}]", self.monotone_in.join(", "))?;
        }
        Ok(())
    }
}

/// An ext function compiled against an input schema.
#[derive(Clone, Debug)]
pub struct BoundExt {
    pub input: Schema,
    pub new_keys: Vec<AttributeSchema>,
    pub values: Vec<AttributeSchema>,
    rows: Vec<(Vec<BoundExpr>, Vec<BoundExpr>)>,
}

/// One emitted tuple: the new key values and the output values.
pub type Emitted = (Vec<Value>, Vec<Value>);

impl BoundExt {
    fn new(f: &ExtFn, input: &Schema) -> Result<BoundExt> {
        let layout: Vec<(String, Option<ScalarType>)> = input
            .all_types()
            .into_iter()
            .map(|(n, t)| (n, Some(t)))
            .collect();
        let key_names = f.new_key_names();
        for k in &key_names {
            if input.has_key(k) {
                return Err(LaraError::schema(format!(
                    "ext adds key `{k}` which the input already has"
                )));
            }
        }
        let value_names = f.value_names();
        for v in &value_names {
            if input.has_key(v) {
                return Err(LaraError::schema(format!(
                    "ext value `{v}` collides with an input key"
                )));
            }
        }
        let mut rows = Vec::with_capacity(f.rows.len());
        let mut ktypes: Vec<Option<ScalarType>> = vec![None; key_names.len()];
        let mut vtypes: Vec<Option<ScalarType>> = vec![None; value_names.len()];
        for r in &f.rows {
            let mut ks = Vec::new();
            for (i, (_, e)) in r.keys.iter().enumerate() {
                let b = e.bind(&layout)?;
                ktypes[i] = unify_opt(ktypes[i], b.result_type())?;
                ks.push(b);
            }
            let mut vs = Vec::new();
            for (i, (_, e)) in r.vals.iter().enumerate() {
                let b = e.bind(&layout)?;
                vtypes[i] = unify_opt(vtypes[i], b.result_type())?;
                vs.push(b);
            }
            rows.push((ks, vs));
        }
        let mut new_keys = Vec::new();
        for (name, ty) in key_names.iter().zip(&ktypes) {
            let ty = ty.ok_or_else(|| {
                LaraError::schema(format!("new key `{name}` can only ever be null"))
            })?;
            new_keys.push(AttributeSchema::key(name.clone(), ty));
        }
        // Output defaults: what f yields for an all-default input. Keys are
        // bound to null so key-dependent branches fall to their else arm.
        let mut probe: Vec<Value> = vec![Value::Null; input.keys.len()];
        probe.extend(input.defaults());
        let mut values = Vec::new();
        for (i, name) in value_names.iter().enumerate() {
            let ty = vtypes[i]
                .or_else(|| input.value(name).map(|a| a.ty))
                .unwrap_or(ScalarType::Int64);
            let d = ty.coerce(rows[0].1[i].eval(&probe))?;
            values.push(AttributeSchema::value(name.clone(), ty, d));
        }
        Ok(BoundExt {
            input: input.clone(),
            new_keys,
            values,
            rows,
        })
    }

    pub fn output_schema(&self) -> Result<Schema> {
        let mut keys = self.input.keys.clone();
        keys.extend(self.new_keys.iter().cloned());
        Schema::new(keys, self.values.clone())
    }

    pub fn output_defaults(&self) -> Vec<Value> {
        self.values.iter().map(|a| a.default_value().clone()).collect()
    }

    /// Apply f to one input tuple. Rows whose values are all default are
    /// dropped; the rest come back sorted by their new keys.
    pub fn apply(&self, key: &[Value], vals: &[Value]) -> Result<Vec<Emitted>> {
        let mut row = Vec::with_capacity(key.len() + vals.len());
        row.extend_from_slice(key);
        row.extend_from_slice(vals);
        let mut out: Vec<Emitted> = Vec::with_capacity(self.rows.len());
        for (ks, vs) in &self.rows {
            let mut nk = Vec::with_capacity(ks.len());
            for (e, attr) in ks.iter().zip(&self.new_keys) {
                let v = e.eval(&row);
                if v.is_null() {
                    return Err(LaraError::property(format!(
                        "ext produced a null value for new key `{}`",
                        attr.name
                    )));
                }
                nk.push(attr.ty.coerce(v).map_err(|e| {
                    LaraError::schema(format!("ext key `{}`: {e}", attr.name))
                })?);
            }
            let mut nv = Vec::with_capacity(vs.len());
            for (e, attr) in vs.iter().zip(&self.values) {
                nv.push(attr.ty.coerce(e.eval(&row)).map_err(|e| {
                    LaraError::schema(format!("ext value `{}`: {e}", attr.name))
                })?);
            }
            let all_default = nv
                .iter()
                .zip(&self.values)
                .all(|(v, a)| v == a.default_value());
            if !all_default {
                out.push((nk, nv));
            }
        }
        if out.len() > 1 {
            out.sort_by(|a, b| a.0.cmp(&b.0));
            if out.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(LaraError::property(
                    "ext tableau produced the same new key twice for one input tuple",
                ));
            }
        }
        Ok(out)
    }

    /// True when f maps (key, defaults) to an empty-support table.
    pub fn empty_on_defaults(&self, key: &[Value]) -> Result<bool> {
        let d = self.input.defaults();
        Ok(self.apply(key, &d)?.is_empty())
    }
}

fn unify_opt(a: Option<ScalarType>, b: Option<ScalarType>) -> Result<Option<ScalarType>> {
    match (a, b) {
        (None, t) | (t, None) => Ok(t),
        (Some(x), Some(y)) if x == y => Ok(Some(x)),
        (Some(x), Some(y)) if x.is_numeric() && y.is_numeric() => Ok(Some(ScalarType::Float64)),
        (Some(x), Some(y)) => Err(LaraError::schema(format!(
            "ext tableau rows produce inconsistent types {x} and {y}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::udf::parse::parse_expr;

    fn sensor_schema() -> Schema {
        Schema::build(
            &[("t", ScalarType::Int64), ("c", ScalarType::Utf8)],
            &[("v", ScalarType::Float64, Value::Null)],
        )
    }

    fn line3() -> ExtFn {
        ExtFn::new(
            vec![TableauRow {
                keys: vec![("t'".into(), parse_expr("snap(t, 60, 460)").unwrap())],
                vals: vec![
                    ("v".into(), parse_expr("v").unwrap()),
                    ("cnt".into(), parse_expr("if(isNull(v), 0, 1)").unwrap()),
                ],
            }],
            vec!["t".into()],
        )
        .unwrap()
    }

    #[test]
    fn binning_ext_on_one_tuple() {
        let b = line3().bind(&sensor_schema()).unwrap();
        let out = b
            .apply(&[Value::Int(466), Value::str("temp")], &[Value::Float(55.2)])
            .unwrap();
        assert_eq!(
            out,
            vec![(vec![Value::Int(460)], vec![Value::Float(55.2), Value::Int(1)])]
        );
        assert_eq!(b.output_defaults(), vec![Value::Null, Value::Int(0)]);
    }

    #[test]
    fn inconsistent_tableau_rejected() {
        let r1 = TableauRow {
            keys: vec![],
            vals: vec![("v".into(), ScalarExpr::attr("v"))],
        };
        let r2 = TableauRow {
            keys: vec![],
            vals: vec![("w".into(), ScalarExpr::attr("v"))],
        };
        assert!(ExtFn::new(vec![r1, r2], vec![]).is_err());
    }

    #[test]
    fn minus_propagates_null_and_sum_skips_it() {
        assert!(Builtin::Minus.apply(&Value::Null, &Value::Float(1.0)).is_null());
        assert_eq!(
            Builtin::Sum.apply(&Value::Null, &Value::Float(1.0)),
            Value::Float(1.0)
        );
        assert_eq!(Builtin::Any.apply(&Value::Int(3), &Value::Int(4)), Value::Int(3));
    }

    #[test]
    fn expression_binary_fn_names_right_operand_with_prime() {
        let f = BinaryFn::expr("v", parse_expr("v / (v' - 1)").unwrap());
        let b = f.bind(ScalarType::Float64, ScalarType::Int64).unwrap();
        assert_eq!(b.apply(&Value::Float(0.64), &Value::Int(2)), Value::Float(0.64));
        assert!(b.apply(&Value::Null, &Value::Int(2)).is_null());
    }
}
