//! Scalar values and their type tags.
//!
//! `Null` is the "not measured" value and is a legal default for any value
//! attribute. Values are only meaningfully ordered within a variant; the
//! `Ord` impl ranks variants so homogeneous collections (one type per key
//! attribute, enforced by the schema) can live in ordered maps, while
//! [`Value::try_cmp`] reports cross-variant comparison as a usage error.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{LaraError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum ScalarType {
    Int64,
    Float64,
    Bool,
    Utf8,
}

impl ScalarType {
    pub fn parse(s: &str) -> Option<ScalarType> {
        match s.to_ascii_lowercase().as_str() {
            "int" | "int64" | "i64" | "integer" => Some(ScalarType::Int64),
            "float" | "float64" | "f64" | "double" => Some(ScalarType::Float64),
            "bool" | "boolean" => Some(ScalarType::Bool),
            "utf8" | "string" | "str" | "text" => Some(ScalarType::Utf8),
            _ => None,
        }
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, ScalarType::Int64 | ScalarType::Float64)
    }

    /// The additive zero of a numeric type; `ntz` maps `Null` to this.
    pub fn zero(self) -> Value {
        match self {
            ScalarType::Float64 => Value::Float(0.0),
            ScalarType::Bool => Value::Bool(false),
            ScalarType::Utf8 => Value::Str(String::new()),
            ScalarType::Int64 => Value::Int(0),
        }
    }

    /// Coerce `v` into a column of this type. `Null` is accepted everywhere,
    /// integers widen into float columns, everything else must match exactly.
    pub fn coerce(self, v: Value) -> Result<Value> {
        match (self, v) {
            (_, Value::Null) => Ok(Value::Null),
            (ScalarType::Int64, v @ Value::Int(_)) => Ok(v),
            (ScalarType::Float64, Value::Int(i)) => Ok(Value::Float(i as f64)),
            (ScalarType::Float64, v @ Value::Float(_)) => Ok(v),
            (ScalarType::Bool, v @ Value::Bool(_)) => Ok(v),
            (ScalarType::Utf8, v @ Value::Str(_)) => Ok(v),
            (ty, v) => Err(LaraError::schema(format!(
                "value {v} does not fit a {ty} attribute"
            ))),
        }
    }
}

impl fmt::Display for ScalarType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ScalarType::Int64 => "int64",
            ScalarType::Float64 => "float64",
            ScalarType::Bool => "bool",
            ScalarType::Utf8 => "utf8",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Value {
    Null,
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
}

impl Value {
    pub fn str(s: impl Into<String>) -> Value {
        Value::Str(s.into())
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn scalar_type(&self) -> Option<ScalarType> {
        match self {
            Value::Null => None,
            Value::Int(_) => Some(ScalarType::Int64),
            Value::Float(_) => Some(ScalarType::Float64),
            Value::Bool(_) => Some(ScalarType::Bool),
            Value::Str(_) => Some(ScalarType::Utf8),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Float(f) => Some(*f),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Null => 0,
            Value::Bool(_) => 1,
            Value::Int(_) => 2,
            Value::Float(_) => 3,
            Value::Str(_) => 4,
        }
    }

    /// Ordering within one variant. Comparing different variants (including
    /// against `Null`) is a usage error rather than an ordering.
    pub fn try_cmp(&self, other: &Value) -> Result<Ordering> {
        if self.rank() != other.rank() || self.is_null() {
            return Err(LaraError::usage(format!(
                "cannot order {self} against {other}"
            )));
        }
        Ok(self.cmp(other))
    }

    /// Equality with an absolute tolerance on floats; other variants compare exactly.
    pub fn approx_eq(&self, other: &Value, tol: f64) -> bool {
        match (self, other) {
            (Value::Float(a), Value::Float(b)) => {
                a == b || (a.is_nan() && b.is_nan()) || (a - b).abs() <= tol
            }
            (Value::Float(a), Value::Int(b)) | (Value::Int(b), Value::Float(a)) => {
                (a - *b as f64).abs() <= tol
            }
            _ => self == other,
        }
    }
}

fn float_cmp(a: f64, b: f64) -> Ordering {
    if a == b {
        Ordering::Equal
    } else {
        a.total_cmp(&b)
    }
}

impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Value {}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Value) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Value) -> Ordering {
        match (self, other) {
            (Value::Null, Value::Null) => Ordering::Equal,
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Float(a), Value::Float(b)) => float_cmp(*a, *b),
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            (Value::Str(a), Value::Str(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            Value::Null => {}
            Value::Int(i) => i.hash(state),
            // +0.0 and -0.0 compare equal, so they must hash equal.
            Value::Float(f) => {
                let f = if *f == 0.0 { 0.0 } else { *f };
                f.to_bits().hash(state)
            }
            Value::Bool(b) => b.hash(state),
            Value::Str(s) => s.hash(state),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("null"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => {
                if x.is_finite() && x.fract() == 0.0 && x.abs() < 1e15 {
                    write!(f, "{x:.1}")
                } else {
                    write!(f, "{x}")
                }
            }
            Value::Bool(b) => write!(f, "{b}"),
            Value::Str(s) => write!(f, "{s:?}"),
        }
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Value {
        Value::Int(v)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Value {
        Value::Float(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Value {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Value {
        Value::Str(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Value {
        Value::Str(v)
    }
}
