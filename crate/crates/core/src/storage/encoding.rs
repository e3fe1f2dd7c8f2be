//! Byte encodings for keys and value tuples.
//!
//! Keys use an order-preserving encoding so that comparing encoded bytes
//! lexicographically gives the same answer as comparing the tuples
//! attribute by attribute. Every component is self-delimiting, so the
//! encoding of a key prefix is a byte prefix of the full key.

use serde::{Deserialize, Serialize};

use crate::error::{LaraError, Result};
use crate::schema::{Schema, TupleRow};
use crate::value::{ScalarType, Value};

const SIGN: u64 = 1 << 63;

fn corrupt(message: impl Into<String>) -> LaraError {
    LaraError::Corrupt {
        file: "<key>".into(),
        message: message.into(),
    }
}

pub fn encode_key_component(v: &Value, ty: ScalarType, out: &mut Vec<u8>) -> Result<()> {
    match (ty, v) {
        (_, Value::Null) => return Err(LaraError::usage("key components may not be null")),
        (ScalarType::Int64, Value::Int(i)) => {
            out.extend_from_slice(&((*i as u64) ^ SIGN).to_be_bytes());
        }
        (ScalarType::Float64, v) => {
            let f = v
                .as_f64()
                .ok_or_else(|| LaraError::usage(format!("{v} is not a float key")))?;
            // -0.0 and 0.0 are equal keys
            let f = if f == 0.0 { 0.0 } else { f };
            let bits = f.to_bits();
            let bits = if bits & SIGN != 0 { !bits } else { bits ^ SIGN };
            out.extend_from_slice(&bits.to_be_bytes());
        }
        (ScalarType::Bool, Value::Bool(b)) => out.push(*b as u8),
        (ScalarType::Utf8, Value::Str(s)) => {
            for &b in s.as_bytes() {
                out.push(b);
                if b == 0 {
                    out.push(0xFF);
                }
            }
            out.extend_from_slice(&[0, 0]);
        }
        (ty, v) => {
            return Err(LaraError::usage(format!(
                "key value {v} does not fit a {ty} attribute"
            )))
        }
    }
    Ok(())
}

/// Encode a positional key (already in access-path order).
pub fn encode_key(key: &[Value], types: &[ScalarType]) -> Result<Vec<u8>> {
    if key.len() > types.len() {
        return Err(LaraError::usage(format!(
            "key has {} components but the path has {}",
            key.len(),
            types.len()
        )));
    }
    let mut out = Vec::with_capacity(key.len() * 9);
    for (v, ty) in key.iter().zip(types) {
        encode_key_component(v, *ty, &mut out)?;
    }
    Ok(out)
}

/// Encode the named key `key` under access path `path` of `schema`.
pub fn encode_key_tuple(key: &TupleRow, schema: &Schema, path: &[String]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for p in path {
        let a = schema
            .key(p)
            .ok_or_else(|| LaraError::usage(format!("`{p}` is not a key attribute")))?;
        let v = key
            .get(p)
            .ok_or_else(|| LaraError::UnboundAttribute(p.clone()))?;
        encode_key_component(v, a.ty, &mut out)?;
    }
    if key.len() != path.len() {
        return Err(LaraError::usage(format!(
            "key {key} has attributes outside the access path {path:?}"
        )));
    }
    Ok(out)
}

fn take<'a>(bytes: &mut &'a [u8], n: usize) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(corrupt("truncated key"));
    }
    let (head, rest) = bytes.split_at(n);
    *bytes = rest;
    Ok(head)
}

pub fn decode_key(mut bytes: &[u8], types: &[ScalarType]) -> Result<Vec<Value>> {
    let mut out = Vec::with_capacity(types.len());
    for ty in types {
        let v = match ty {
            ScalarType::Int64 => {
                let b: [u8; 8] = take(&mut bytes, 8)?.try_into().unwrap();
                Value::Int((u64::from_be_bytes(b) ^ SIGN) as i64)
            }
            ScalarType::Float64 => {
                let b: [u8; 8] = take(&mut bytes, 8)?.try_into().unwrap();
                let bits = u64::from_be_bytes(b);
                let bits = if bits & SIGN != 0 { bits ^ SIGN } else { !bits };
                Value::Float(f64::from_bits(bits))
            }
            ScalarType::Bool => Value::Bool(take(&mut bytes, 1)?[0] != 0),
            ScalarType::Utf8 => {
                let mut s = Vec::new();
                loop {
                    let b = take(&mut bytes, 1)?[0];
                    if b != 0 {
                        s.push(b);
                        continue;
                    }
                    match take(&mut bytes, 1)?[0] {
                        0 => break,
                        0xFF => s.push(0),
                        other => return Err(corrupt(format!("bad string escape 0x00{other:02X}"))),
                    }
                }
                Value::Str(String::from_utf8(s).map_err(|_| corrupt("key string is not utf-8"))?)
            }
        };
        out.push(v);
    }
    if !bytes.is_empty() {
        return Err(corrupt("trailing bytes after key"));
    }
    Ok(out)
}

/// How value tuples are laid out inside run files.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueEncoding {
    /// Per value: a tag byte, a u32 LE length, then the value as text.
    #[default]
    Text,
    /// A null bitmap, then fixed-width little-endian binary per non-null
    /// value (strings: u32 LE length + bytes).
    Packed,
}

pub fn encode_values(vals: &[Value], enc: ValueEncoding) -> Vec<u8> {
    let mut out = Vec::new();
    match enc {
        ValueEncoding::Text => {
            for v in vals {
                let (tag, text) = match v {
                    Value::Null => (b'N', String::new()),
                    Value::Int(i) => (b'I', i.to_string()),
                    Value::Float(f) => (b'F', format!("{f:?}")),
                    Value::Bool(b) => (b'B', b.to_string()),
                    Value::Str(s) => (b'S', s.clone()),
                };
                out.push(tag);
                out.extend_from_slice(&(text.len() as u32).to_le_bytes());
                out.extend_from_slice(text.as_bytes());
            }
        }
        ValueEncoding::Packed => {
            let mut bitmap = vec![0u8; vals.len().div_ceil(8)];
            for (i, v) in vals.iter().enumerate() {
                if v.is_null() {
                    bitmap[i / 8] |= 1 << (i % 8);
                }
            }
            out.extend_from_slice(&bitmap);
            for v in vals {
                match v {
                    Value::Null => {}
                    Value::Int(i) => out.extend_from_slice(&i.to_le_bytes()),
                    Value::Float(f) => out.extend_from_slice(&f.to_bits().to_le_bytes()),
                    Value::Bool(b) => out.push(*b as u8),
                    Value::Str(s) => {
                        out.extend_from_slice(&(s.len() as u32).to_le_bytes());
                        out.extend_from_slice(s.as_bytes());
                    }
                }
            }
        }
    }
    out
}

pub fn decode_values(mut bytes: &[u8], types: &[ScalarType], enc: ValueEncoding) -> Result<Vec<Value>> {
    let bad = |m: &str| corrupt(format!("value tuple: {m}"));
    let mut out = Vec::with_capacity(types.len());
    match enc {
        ValueEncoding::Text => {
            for ty in types {
                let tag = take(&mut bytes, 1)?[0];
                let len = u32::from_le_bytes(take(&mut bytes, 4)?.try_into().unwrap()) as usize;
                let text = std::str::from_utf8(take(&mut bytes, len)?).map_err(|_| bad("not utf-8"))?;
                let v = match tag {
                    b'N' => Value::Null,
                    b'I' => Value::Int(text.parse().map_err(|_| bad("bad int"))?),
                    b'F' => Value::Float(text.parse().map_err(|_| bad("bad float"))?),
                    b'B' => Value::Bool(text == "true"),
                    b'S' => Value::Str(text.to_string()),
                    _ => return Err(bad("unknown tag")),
                };
                out.push(ty.coerce(v).map_err(|_| bad("type mismatch"))?);
            }
        }
        ValueEncoding::Packed => {
            let bitmap = take(&mut bytes, types.len().div_ceil(8))?.to_vec();
            for (i, ty) in types.iter().enumerate() {
                if bitmap[i / 8] & (1 << (i % 8)) != 0 {
                    out.push(Value::Null);
                    continue;
                }
                out.push(match ty {
                    ScalarType::Int64 => {
                        Value::Int(i64::from_le_bytes(take(&mut bytes, 8)?.try_into().unwrap()))
                    }
                    ScalarType::Float64 => Value::Float(f64::from_bits(u64::from_le_bytes(
                        take(&mut bytes, 8)?.try_into().unwrap(),
                    ))),
                    ScalarType::Bool => Value::Bool(take(&mut bytes, 1)?[0] != 0),
                    ScalarType::Utf8 => {
                        let len =
                            u32::from_le_bytes(take(&mut bytes, 4)?.try_into().unwrap()) as usize;
                        Value::Str(
                            String::from_utf8(take(&mut bytes, len)?.to_vec())
                                .map_err(|_| bad("not utf-8"))?,
                        )
                    }
                });
            }
        }
    }
    if !bytes.is_empty() {
        return Err(bad("trailing bytes"));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signed_ints_order() {
        let t = [ScalarType::Int64];
        let m1 = encode_key(&[Value::Int(-1)], &t).unwrap();
        let z = encode_key(&[Value::Int(0)], &t).unwrap();
        let p1 = encode_key(&[Value::Int(1)], &t).unwrap();
        assert!(m1 < z && z < p1);
    }

    #[test]
    fn composite_prefix_order() {
        let t = [ScalarType::Utf8, ScalarType::Utf8];
        let b = encode_key(&[Value::str("b"), Value::str("")], &t).unwrap();
        let az = encode_key(&[Value::str("a"), Value::str("z")], &t).unwrap();
        assert!(b > az);
        let a0 = encode_key(&[Value::str("a\0"), Value::str("")], &t).unwrap();
        let a = encode_key(&[Value::str("a"), Value::str("zzz")], &t).unwrap();
        assert!(a < a0);
    }

    #[test]
    fn roundtrip_sensor_key() {
        let t = [ScalarType::Int64, ScalarType::Utf8];
        let k = vec![Value::Int(466), Value::str("temp")];
        assert_eq!(decode_key(&encode_key(&k, &t).unwrap(), &t).unwrap(), k);
    }

    #[test]
    fn null_key_rejected() {
        assert!(encode_key(&[Value::Null], &[ScalarType::Int64]).is_err());
    }

    #[test]
    fn float_order_and_roundtrip() {
        let t = [ScalarType::Float64];
        let xs = [f64::NEG_INFINITY, -2.5, -0.0, 0.0, 1e-300, 3.0, f64::INFINITY];
        let enc: Vec<Vec<u8>> = xs.iter().map(|x| encode_key(&[Value::Float(*x)], &t).unwrap()).collect();
        for w in enc.windows(2) {
            assert!(w[0] <= w[1]);
        }
        assert_eq!(enc[2], enc[3]);
        assert_eq!(decode_key(&enc[1], &t).unwrap(), vec![Value::Float(-2.5)]);
    }

    #[test]
    fn value_encodings_roundtrip() {
        let types = [ScalarType::Float64, ScalarType::Int64, ScalarType::Utf8, ScalarType::Bool];
        let vals = vec![Value::Float(0.1), Value::Null, Value::str("x y"), Value::Bool(true)];
        for enc in [ValueEncoding::Text, ValueEncoding::Packed] {
            let b = encode_values(&vals, enc);
            assert_eq!(decode_values(&b, &types, enc).unwrap(), vals);
        }
        assert!(encode_values(&[Value::Float(56.4333333333)], ValueEncoding::Packed).len()
            < encode_values(&[Value::Float(56.4333333333)], ValueEncoding::Text).len());
    }
}
