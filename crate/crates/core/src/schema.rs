//! Table schemas and named tuples.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{LaraError, Result};
use crate::value::{ScalarType, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttributeKind {
    Key,
    Value,
}

/// One attribute of a table. Keys carry no default and are never `Null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub name: String,
    pub kind: AttributeKind,
    pub ty: ScalarType,
    pub default: Option<Value>,
}

impl AttributeSchema {
    pub fn key(name: impl Into<String>, ty: ScalarType) -> Self {
        AttributeSchema {
            name: name.into(),
            kind: AttributeKind::Key,
            ty,
            default: None,
        }
    }

    pub fn value(name: impl Into<String>, ty: ScalarType, default: Value) -> Self {
        AttributeSchema {
            name: name.into(),
            kind: AttributeKind::Value,
            ty,
            default: Some(default),
        }
    }

    pub fn default_value(&self) -> &Value {
        self.default.as_ref().unwrap_or(&Value::Null)
    }
}

/// Key attributes in order, then value attributes in order.
///
/// For sorted stores and streams the key order *is* the access path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub keys: Vec<AttributeSchema>,
    pub values: Vec<AttributeSchema>,
}

impl Schema {
    pub fn new(keys: Vec<AttributeSchema>, values: Vec<AttributeSchema>) -> Result<Schema> {
        let schema = Schema { keys, values };
        schema.validate()?;
        Ok(schema)
    }

    /// Shorthand used throughout tests: `keys` are `(name, type)`, `values`
    /// are `(name, type, default)`.
    pub fn build(keys: &[(&str, ScalarType)], values: &[(&str, ScalarType, Value)]) -> Schema {
        Schema::new(
            keys.iter().map(|(n, t)| AttributeSchema::key(*n, *t)).collect(),
            values
                .iter()
                .map(|(n, t, d)| AttributeSchema::value(*n, *t, d.clone()))
                .collect(),
        )
        .expect("invalid schema literal")
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for a in self.keys.iter().chain(&self.values) {
            if !seen.insert(a.name.as_str()) {
                return Err(LaraError::schema(format!(
                    "attribute `{}` appears twice",
                    a.name
                )));
            }
        }
        for k in &self.keys {
            if k.kind != AttributeKind::Key || k.default.is_some() {
                return Err(LaraError::schema(format!(
                    "key attribute `{}` may not carry a default",
                    k.name
                )));
            }
        }
        for v in &self.values {
            if v.kind != AttributeKind::Value {
                return Err(LaraError::schema(format!(
                    "`{}` is listed as a value but marked as key",
                    v.name
                )));
            }
            let d = v.default_value();
            if v.ty.coerce(d.clone())? != *d {
                return Err(LaraError::schema(format!(
                    "default of `{}` must be written as a {} literal",
                    v.name, v.ty
                )));
            }
        }
        Ok(())
    }

    pub fn key_names(&self) -> Vec<String> {
        self.keys.iter().map(|a| a.name.clone()).collect()
    }

    pub fn value_names(&self) -> Vec<String> {
        self.values.iter().map(|a| a.name.clone()).collect()
    }

    pub fn key_index(&self, name: &str) -> Option<usize> {
        self.keys.iter().position(|a| a.name == name)
    }

    pub fn value_index(&self, name: &str) -> Option<usize> {
        self.values.iter().position(|a| a.name == name)
    }

    pub fn key(&self, name: &str) -> Option<&AttributeSchema> {
        self.keys.iter().find(|a| a.name == name)
    }

    pub fn value(&self, name: &str) -> Option<&AttributeSchema> {
        self.values.iter().find(|a| a.name == name)
    }

    pub fn has_key(&self, name: &str) -> bool {
        self.key_index(name).is_some()
    }

    pub fn has_value(&self, name: &str) -> bool {
        self.value_index(name).is_some()
    }

    pub fn defaults(&self) -> Vec<Value> {
        self.values.iter().map(|a| a.default_value().clone()).collect()
    }

    /// Names of all attributes, keys first, in the order rows are laid out.
    pub fn all_names(&self) -> Vec<String> {
        self.keys
            .iter()
            .chain(&self.values)
            .map(|a| a.name.clone())
            .collect()
    }

    pub fn all_types(&self) -> Vec<(String, ScalarType)> {
        self.keys
            .iter()
            .chain(&self.values)
            .map(|a| (a.name.clone(), a.ty))
            .collect()
    }

    /// Same attributes with the keys permuted into `path`.
    pub fn with_key_order(&self, path: &[String]) -> Result<Schema> {
        if path.len() != self.keys.len() {
            return Err(LaraError::schema(format!(
                "access path {path:?} is not a permutation of keys {:?}",
                self.key_names()
            )));
        }
        let mut keys = Vec::with_capacity(path.len());
        for p in path {
            let k = self.key(p).ok_or_else(|| {
                LaraError::schema(format!(
                    "access path {path:?} is not a permutation of keys {:?}",
                    self.key_names()
                ))
            })?;
            keys.push(k.clone());
        }
        Schema::new(keys, self.values.clone())
    }

    /// Positions of `path` attributes in this schema's key list.
    pub fn key_permutation(&self, path: &[String]) -> Result<Vec<usize>> {
        path.iter()
            .map(|p| {
                self.key_index(p)
                    .ok_or_else(|| LaraError::schema(format!("unknown key attribute `{p}`")))
            })
            .collect()
    }

    pub fn is_all_default(&self, vals: &[Value]) -> bool {
        vals.iter()
            .zip(&self.values)
            .all(|(v, a)| v == a.default_value())
    }

    pub fn rename(&self, from: &str, to: &str) -> Result<Schema> {
        if from != to && (self.has_key(to) || self.has_value(to)) {
            return Err(LaraError::schema(format!(
                "cannot rename `{from}` to existing attribute `{to}`"
            )));
        }
        let mut out = self.clone();
        let mut found = false;
        for a in out.keys.iter_mut().chain(out.values.iter_mut()) {
            if a.name == from {
                a.name = to.to_string();
                found = true;
            }
        }
        if !found {
            return Err(LaraError::schema(format!("no attribute `{from}` to rename")));
        }
        Ok(out)
    }

    /// Equality that ignores key order (but not value defaults or types).
    pub fn same_attributes(&self, other: &Schema) -> bool {
        if self.keys.len() != other.keys.len() || self.values.len() != other.values.len() {
            return false;
        }
        self.keys.iter().all(|k| other.key(&k.name) == Some(k))
            && self.values.iter().all(|v| other.value(&v.name) == Some(v))
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let keys: Vec<String> = self
            .keys
            .iter()
            .map(|k| format!("{}:{}", k.name, k.ty))
            .collect();
        let vals: Vec<String> = self
            .values
            .iter()
            .map(|v| format!("{}:{}={}", v.name, v.ty, v.default_value()))
            .collect();
        write!(f, "[{}] -> [{}]", keys.join(", "), vals.join(", "))
    }
}

/// An ordered list of named values.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct TupleRow(pub Vec<(String, Value)>);

impl TupleRow {
    pub fn new() -> TupleRow {
        TupleRow(Vec::new())
    }

    pub fn from_pairs<I, S, V>(pairs: I) -> TupleRow
    where
        I: IntoIterator<Item = (S, V)>,
        S: Into<String>,
        V: Into<Value>,
    {
        TupleRow(
            pairs
                .into_iter()
                .map(|(n, v)| (n.into(), v.into()))
                .collect(),
        )
    }

    pub fn zip(names: &[String], values: &[Value]) -> TupleRow {
        TupleRow(
            names
                .iter()
                .cloned()
                .zip(values.iter().cloned())
                .collect(),
        )
    }

    pub fn push(&mut self, name: impl Into<String>, value: impl Into<Value>) {
        self.0.push((name.into(), value.into()));
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    pub fn names(&self) -> Vec<String> {
        self.0.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn values(&self) -> Vec<Value> {
        self.0.iter().map(|(_, v)| v.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Concatenation; names must be disjoint.
    pub fn concat(&self, other: &TupleRow) -> Result<TupleRow> {
        for (n, _) in &other.0 {
            if self.get(n).is_some() {
                return Err(LaraError::usage(format!(
                    "cannot concatenate tuples that both name `{n}`"
                )));
            }
        }
        let mut out = self.clone();
        out.0.extend(other.0.iter().cloned());
        Ok(out)
    }

    /// Restriction to the named attributes, in the order given.
    pub fn project(&self, names: &[String]) -> Result<TupleRow> {
        names
            .iter()
            .map(|n| {
                self.get(n)
                    .cloned()
                    .map(|v| (n.clone(), v))
                    .ok_or_else(|| LaraError::UnboundAttribute(n.clone()))
            })
            .collect::<Result<Vec<_>>>()
            .map(TupleRow)
    }
}

impl fmt::Display for TupleRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(n, v)| format!("{n}: {v}")).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_attribute_names_rejected() {
        let err = Schema::new(
            vec![AttributeSchema::key("t", ScalarType::Int64)],
            vec![AttributeSchema::value("t", ScalarType::Float64, Value::Null)],
        );
        assert!(err.is_err());
    }

    #[test]
    fn keys_may_not_have_defaults() {
        let mut k = AttributeSchema::key("t", ScalarType::Int64);
        k.default = Some(Value::Int(0));
        assert!(Schema::new(vec![k], vec![]).is_err());
    }

    #[test]
    fn concat_and_project() {
        let a = TupleRow::from_pairs([("t", Value::Int(1))]);
        let b = TupleRow::from_pairs([("c", Value::str("temp"))]);
        let ab = a.concat(&b).unwrap();
        assert_eq!(ab.names(), vec!["t", "c"]);
        assert_eq!(ab.project(&["c".into()]).unwrap(), b);
        assert!(ab.concat(&a).is_err());
    }
}
