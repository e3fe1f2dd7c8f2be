//! Associative tables and the reference (oracle) evaluator for join, union
//! and ext plus their shorthands.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{LaraError, Result};
use crate::schema::{AttributeSchema, Schema, TupleRow};
use crate::udf::func::{BoundBinary, ExtFn, PlusFn, TimesFn};
use crate::value::Value;

pub type KeyTuple = Vec<Value>;
pub type ValueTuple = Vec<Value>;

/// Per-attribute UDF assignment, e.g. `[v: +, cnt: +]`.
pub type UdfList<F> = [(String, F)];

/// A total map from key tuples to value tuples. Keys are stored in schema
/// key order; keys outside the support map to the defaults.
#[derive(Clone, Debug, PartialEq)]
pub struct AssociativeTable {
    schema: Schema,
    support: BTreeMap<KeyTuple, ValueTuple>,
}

impl AssociativeTable {
    /// E_k: the table with empty support.
    pub fn empty(schema: Schema) -> AssociativeTable {
        AssociativeTable {
            schema,
            support: BTreeMap::new(),
        }
    }

    /// Named rows. Every row must bind all key and value attributes.
    pub fn from_rows(schema: Schema, rows: Vec<TupleRow>) -> Result<AssociativeTable> {
        let key_names = schema.key_names();
        let value_names = schema.value_names();
        let mut entries = Vec::with_capacity(rows.len());
        for r in rows {
            if r.len() != key_names.len() + value_names.len() {
                return Err(LaraError::usage(format!(
                    "row {r} does not match schema {schema}"
                )));
            }
            let k = r
                .project(&key_names)
                .map_err(|e| LaraError::usage(format!("row {r}: {e}")))?;
            let v = r
                .project(&value_names)
                .map_err(|e| LaraError::usage(format!("row {r}: {e}")))?;
            entries.push((k.values(), v.values()));
        }
        AssociativeTable::from_entries(schema, entries)
    }

    /// Positional entries; values equal to the defaults are dropped.
    pub fn from_entries(
        schema: Schema,
        entries: Vec<(KeyTuple, ValueTuple)>,
    ) -> Result<AssociativeTable> {
        let mut t = AssociativeTable::with_stored_defaults(schema, entries)?;
        t.canonicalize();
        Ok(t)
    }

    /// Like `from_entries` but keeps all-default entries in the support.
    /// Only useful for testing that operators do not depend on them.
    pub fn with_stored_defaults(
        schema: Schema,
        entries: Vec<(KeyTuple, ValueTuple)>,
    ) -> Result<AssociativeTable> {
        let mut support = BTreeMap::new();
        for (k, v) in entries {
            let (k, v) = conform(&schema, k, v)?;
            if support.contains_key(&k) {
                return Err(LaraError::DuplicateKey(format_key(&schema, &k)));
            }
            support.insert(k, v);
        }
        Ok(AssociativeTable { schema, support })
    }

    pub fn canonicalize(&mut self) {
        let defaults = self.schema.defaults();
        self.support.retain(|_, v| *v != defaults);
    }

    pub fn is_canonical(&self) -> bool {
        let defaults = self.schema.defaults();
        self.support.values().all(|v| *v != defaults)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&KeyTuple, &ValueTuple)> {
        self.support.iter()
    }

    pub fn entries(&self) -> Vec<(KeyTuple, ValueTuple)> {
        self.support
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }

    /// Value tuple for a positional key, or the defaults.
    pub fn get(&self, key: &[Value]) -> ValueTuple {
        self.support
            .get(key)
            .cloned()
            .unwrap_or_else(|| self.schema.defaults())
    }

    pub fn lookup(&self, key: &TupleRow) -> Result<TupleRow> {
        if key.names() != self.schema.key_names() {
            return Err(LaraError::usage(format!(
                "lookup key {key} does not match key attributes {:?}",
                self.schema.key_names()
            )));
        }
        for ((_, v), a) in key.0.iter().zip(&self.schema.keys) {
            if v.scalar_type() != Some(a.ty) {
                return Err(LaraError::usage(format!(
                    "lookup key `{}` must be {}, got {v}",
                    a.name, a.ty
                )));
            }
        }
        Ok(TupleRow::zip(&self.schema.value_names(), &self.get(&key.values())))
    }

    pub fn rows(&self) -> Vec<TupleRow> {
        let names = self.schema.all_names();
        self.support
            .iter()
            .map(|(k, v)| {
                let all: Vec<Value> = k.iter().chain(v).cloned().collect();
                TupleRow::zip(&names, &all)
            })
            .collect()
    }

    /// Same table with keys permuted into `path`.
    pub fn with_key_order(&self, path: &[String]) -> Result<AssociativeTable> {
        let schema = self.schema.with_key_order(path)?;
        let perm = self.schema.key_permutation(path)?;
        let support = self
            .support
            .iter()
            .map(|(k, v)| (perm.iter().map(|&i| k[i].clone()).collect(), v.clone()))
            .collect();
        Ok(AssociativeTable { schema, support })
    }

    /// Extensional equality up to key order, with absolute float tolerance.
    pub fn approx_eq(&self, other: &AssociativeTable, tol: f64) -> bool {
        self.diff(other, tol).is_none()
    }

    /// First difference found, described for test output.
    pub fn diff(&self, other: &AssociativeTable, tol: f64) -> Option<String> {
        if !self.schema.same_attributes(&other.schema) {
            return Some(format!("schemas differ: {} vs {}", self.schema, other.schema));
        }
        let other = match other.with_key_order(&self.schema.key_names()) {
            Ok(o) => o,
            Err(e) => return Some(e.to_string()),
        };
        let perm: Vec<usize> = self
            .schema
            .values
            .iter()
            .map(|a| other.schema.value_index(&a.name).unwrap())
            .collect();
        let keys: std::collections::BTreeSet<&KeyTuple> =
            self.support.keys().chain(other.support.keys()).collect();
        for k in keys {
            let a = self.get(k);
            let b = other.get(k);
            for (i, av) in a.iter().enumerate() {
                if !av.approx_eq(&b[perm[i]], tol) {
                    return Some(format!(
                        "at key {}: `{}` is {av} vs {}",
                        format_key(&self.schema, k),
                        self.schema.values[i].name,
                        b[perm[i]]
                    ));
                }
            }
        }
        None
    }
}

impl fmt::Display for AssociativeTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.schema)?;
        for (k, v) in &self.support {
            let ks: Vec<String> = k.iter().map(|x| x.to_string()).collect();
            let vs: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            writeln!(f, "  ({}) -> ({})", ks.join(", "), vs.join(", "))?;
        }
        Ok(())
    }
}

pub(crate) fn format_key(schema: &Schema, k: &[Value]) -> String {
    let parts: Vec<String> = schema
        .keys
        .iter()
        .zip(k)
        .map(|(a, v)| format!("{}: {v}", a.name))
        .collect();
    format!("({})", parts.join(", "))
}

fn conform(schema: &Schema, k: KeyTuple, v: ValueTuple) -> Result<(KeyTuple, ValueTuple)> {
    if k.len() != schema.keys.len() || v.len() != schema.values.len() {
        return Err(LaraError::usage(format!(
            "entry arity ({}, {}) does not match schema {schema}",
            k.len(),
            v.len()
        )));
    }
    let mut keys = Vec::with_capacity(k.len());
    for (x, a) in k.into_iter().zip(&schema.keys) {
        if x.is_null() {
            return Err(LaraError::usage(format!("key `{}` may not be null", a.name)));
        }
        keys.push(
            a.ty.coerce(x)
                .map_err(|e| LaraError::usage(format!("key `{}`: {e}", a.name)))?,
        );
    }
    let mut vals = Vec::with_capacity(v.len());
    for (x, a) in v.into_iter().zip(&schema.values) {
        vals.push(
            a.ty.coerce(x)
                .map_err(|e| LaraError::usage(format!("value `{}`: {e}", a.name)))?,
        );
    }
    Ok((keys, vals))
}

fn lookup_fn<'a, F>(fns: &'a UdfList<F>, name: &str, what: &str) -> Result<&'a F> {
    fns.iter()
        .find(|(n, _)| n == name)
        .map(|(_, f)| f)
        .ok_or_else(|| LaraError::schema(format!("no {what} function given for value `{name}`")))
}

fn check_fn_coverage<F>(fns: &UdfList<F>, expected: &[String], what: &str) -> Result<()> {
    for (n, _) in fns {
        if !expected.contains(n) {
            return Err(LaraError::schema(format!(
                "{what} function given for `{n}`, which is not an output value attribute {expected:?}"
            )));
        }
    }
    Ok(())
}

/// Output schema of a join: keys of a then b's extra keys; values are the
/// attributes both sides carry.
pub fn join_schema(a: &Schema, b: &Schema, times: &UdfList<TimesFn>) -> Result<(Schema, Vec<BoundBinary>)> {
    let mut keys = a.keys.clone();
    for k in &b.keys {
        match a.key(&k.name) {
            Some(ak) if ak.ty != k.ty => {
                return Err(LaraError::schema(format!(
                    "join key `{}` is {} on the left and {} on the right",
                    k.name, ak.ty, k.ty
                )))
            }
            Some(_) => {}
            None => keys.push(k.clone()),
        }
    }
    let common: Vec<String> = a
        .values
        .iter()
        .filter(|v| b.has_value(&v.name))
        .map(|v| v.name.clone())
        .collect();
    if common.is_empty() {
        return Err(LaraError::schema(format!(
            "join inputs share no value attribute ({:?} vs {:?})",
            a.value_names(),
            b.value_names()
        )));
    }
    for k in &keys {
        if common.contains(&k.name) {
            return Err(LaraError::schema(format!(
                "`{}` is a key on one side of the join and a value on the other",
                k.name
            )));
        }
    }
    check_fn_coverage(times, &common, "times")?;
    let mut values = Vec::new();
    let mut bound = Vec::new();
    for name in &common {
        let f = lookup_fn(times, name, "times")?;
        let (av, bv) = (a.value(name).unwrap(), b.value(name).unwrap());
        let op = f.op.bind(av.ty, bv.ty)?;
        let d = op.apply(av.default_value(), bv.default_value());
        values.push(AttributeSchema::value(name.clone(), op.output_type(), d));
        bound.push(op);
    }
    Ok((Schema::new(keys, values)?, bound))
}

/// Nested-loop join over both supports, matching on common keys.
pub fn oracle_join(
    a: &AssociativeTable,
    b: &AssociativeTable,
    times: &UdfList<TimesFn>,
) -> Result<AssociativeTable> {
    let (out, ops) = join_schema(&a.schema, &b.schema, times)?;
    let names: Vec<String> = out.value_names();
    let ai: Vec<usize> = names.iter().map(|n| a.schema.value_index(n).unwrap()).collect();
    let bi: Vec<usize> = names.iter().map(|n| b.schema.value_index(n).unwrap()).collect();
    let out_defaults = out.defaults();
    let (ad, bd) = (a.schema.defaults(), b.schema.defaults());

    // annihilator law on the actual data
    for (ka, va) in &a.support {
        for (j, op) in ops.iter().enumerate() {
            if op.apply(&va[ai[j]], &bd[bi[j]]) != out_defaults[j] {
                return Err(LaraError::property(format!(
                    "`{}`: {} ⊗ default {} is not the default {} (left key {})",
                    names[j],
                    va[ai[j]],
                    bd[bi[j]],
                    out_defaults[j],
                    format_key(&a.schema, ka)
                )));
            }
        }
    }
    for (kb, vb) in &b.support {
        for (j, op) in ops.iter().enumerate() {
            if op.apply(&ad[ai[j]], &vb[bi[j]]) != out_defaults[j] {
                return Err(LaraError::property(format!(
                    "`{}`: default {} ⊗ {} is not the default {} (right key {})",
                    names[j],
                    ad[ai[j]],
                    vb[bi[j]],
                    out_defaults[j],
                    format_key(&b.schema, kb)
                )));
            }
        }
    }

    // position of each output key in a or b
    let src: Vec<(bool, usize)> = out
        .keys
        .iter()
        .map(|k| match a.schema.key_index(&k.name) {
            Some(i) => (true, i),
            None => (false, b.schema.key_index(&k.name).unwrap()),
        })
        .collect();
    let shared: Vec<(usize, usize)> = a
        .schema
        .keys
        .iter()
        .enumerate()
        .filter_map(|(i, k)| b.schema.key_index(&k.name).map(|j| (i, j)))
        .collect();
    let mut support = BTreeMap::new();
    for (ka, va) in &a.support {
        for (kb, vb) in &b.support {
            if !shared.iter().all(|&(i, j)| ka[i] == kb[j]) {
                continue;
            }
            let vals: Vec<Value> = ops
                .iter()
                .enumerate()
                .map(|(j, op)| op.apply(&va[ai[j]], &vb[bi[j]]))
                .collect();
            if vals == out_defaults {
                continue;
            }
            let key: Vec<Value> = src
                .iter()
                .map(|&(left, i)| if left { ka[i].clone() } else { kb[i].clone() })
                .collect();
            support.insert(key, vals);
        }
    }
    Ok(AssociativeTable {
        schema: out,
        support,
    })
}

/// Output schema of a union: a's keys that b also has; a's values then b's
/// extra values. Shared attributes must agree on type and default.
pub fn union_schema(a: &Schema, b: &Schema, plus: &UdfList<PlusFn>) -> Result<(Schema, Vec<BoundBinary>)> {
    let mut keys = Vec::new();
    for k in &a.keys {
        if let Some(bk) = b.key(&k.name) {
            if bk.ty != k.ty {
                return Err(LaraError::schema(format!(
                    "union key `{}` is {} on the left and {} on the right",
                    k.name, k.ty, bk.ty
                )));
            }
            keys.push(k.clone());
        }
    }
    let mut values = a.values.clone();
    for v in &b.values {
        match a.value(&v.name) {
            Some(av) => {
                if av.ty != v.ty {
                    return Err(LaraError::schema(format!(
                        "union value `{}` is {} on the left and {} on the right",
                        v.name, av.ty, v.ty
                    )));
                }
                if av.default_value() != v.default_value() {
                    return Err(LaraError::schema(format!(
                        "union inputs disagree on the default of `{}` ({} vs {}); no ⊕ identity can serve both",
                        v.name,
                        av.default_value(),
                        v.default_value()
                    )));
                }
            }
            None => values.push(v.clone()),
        }
    }
    for v in &values {
        if keys.iter().any(|k| k.name == v.name) {
            return Err(LaraError::schema(format!(
                "`{}` is a key on one side of the union and a value on the other",
                v.name
            )));
        }
    }
    let names: Vec<String> = values.iter().map(|v| v.name.clone()).collect();
    check_fn_coverage(plus, &names, "plus")?;
    let mut bound = Vec::new();
    for v in &values {
        let f = lookup_fn(plus, &v.name, "plus")?;
        let op = f.op.bind(v.ty, v.ty)?;
        bound.push(op);
    }
    Ok((Schema::new(keys, values)?, bound))
}

/// Folds values that collide on the output keys with ⊕, left to right in key
/// order, a's entries before b's.
pub fn oracle_union(
    a: &AssociativeTable,
    b: &AssociativeTable,
    plus: &UdfList<PlusFn>,
) -> Result<AssociativeTable> {
    let (out, ops) = union_schema(&a.schema, &b.schema, plus)?;
    let defaults = out.defaults();
    let mut acc: BTreeMap<KeyTuple, Vec<Option<Value>>> = BTreeMap::new();
    for t in [a, b] {
        let kpos: Vec<usize> = out
            .keys
            .iter()
            .map(|k| t.schema.key_index(&k.name).unwrap())
            .collect();
        let vpos: Vec<Option<usize>> = out
            .values
            .iter()
            .map(|v| t.schema.value_index(&v.name))
            .collect();
        for (k, v) in &t.support {
            let key: Vec<Value> = kpos.iter().map(|&i| k[i].clone()).collect();
            let slot = acc.entry(key).or_insert_with(|| vec![None; ops.len()]);
            for (j, p) in vpos.iter().enumerate() {
                let Some(p) = p else { continue };
                let x = &v[*p];
                if ops[j].apply(x, &defaults[j]) != *x {
                    return Err(LaraError::property(format!(
                        "`{}`: {x} ⊕ default {} is not {x}",
                        out.values[j].name, defaults[j]
                    )));
                }
                slot[j] = Some(match slot[j].take() {
                    None => x.clone(),
                    Some(prev) => ops[j].apply(&prev, x),
                });
            }
        }
    }
    let mut support = BTreeMap::new();
    for (k, vals) in acc {
        let vals: Vec<Value> = vals
            .into_iter()
            .zip(&defaults)
            .map(|(v, d)| v.unwrap_or_else(|| d.clone()))
            .collect();
        if vals != defaults {
            support.insert(k, vals);
        }
    }
    Ok(AssociativeTable {
        schema: out,
        support,
    })
}

/// Agg a on `on` by ⊕: union with the empty table keyed by `on`.
pub fn oracle_agg(
    a: &AssociativeTable,
    on: &[String],
    plus: &UdfList<PlusFn>,
) -> Result<AssociativeTable> {
    let keys = on
        .iter()
        .map(|n| {
            a.schema
                .key(n)
                .cloned()
                .ok_or_else(|| LaraError::schema(format!("cannot aggregate on unknown key `{n}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let e = AssociativeTable::empty(Schema::new(keys, vec![])?);
    oracle_union(a, &e, plus)
}

/// ext_f a: applies f to every support tuple and flattens the result.
pub fn oracle_ext(a: &AssociativeTable, f: &ExtFn) -> Result<AssociativeTable> {
    let b = f.bind(&a.schema)?;
    let out = b.output_schema()?;
    let mut support = BTreeMap::new();
    for (k, v) in &a.support {
        if !b.empty_on_defaults(k)? {
            return Err(LaraError::property(format!(
                "ext function yields non-default output for default values at key {}",
                format_key(&a.schema, k)
            )));
        }
        for (nk, nv) in b.apply(k, v)? {
            let key: Vec<Value> = k.iter().cloned().chain(nk).collect();
            support.insert(key, nv);
        }
    }
    Ok(AssociativeTable {
        schema: out,
        support,
    })
}

pub fn oracle_map(a: &AssociativeTable, f: &ExtFn) -> Result<AssociativeTable> {
    if !f.is_map() {
        return Err(LaraError::usage("map function may not add keys"));
    }
    oracle_ext(a, f)
}

pub fn oracle_rename(a: &AssociativeTable, from: &str, to: &str) -> Result<AssociativeTable> {
    Ok(AssociativeTable {
        schema: a.schema.rename(from, to)?,
        support: a.support.clone(),
    })
}
