//! Helpers shared by the hand-written JSON documents.

use serde_json::Value;

use crate::error::{CoreError, Result};

/// Float with 17 significant digits, which round-trips every `f64` exactly.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn point(x: f64, y: f64) -> String {
    format!("[{}, {}]", num(x), num(y))
}

pub fn string(s: &str) -> String {
    Value::String(s.to_string()).to_string()
}

pub fn field<'a>(obj: &'a Value, key: &str, path: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| CoreError::parse(join(path, key), "missing field"))
}

pub fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

pub fn as_f64(v: &Value, path: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| CoreError::parse(path, format!("expected a number, found {v}")))
}

pub fn as_u32(v: &Value, path: &str) -> Result<u32> {
    v.as_u64()
        .and_then(|n| u32::try_from(n).ok())
        .ok_or_else(|| CoreError::parse(path, format!("expected a non-negative integer, found {v}")))
}

pub fn as_usize(v: &Value, path: &str) -> Result<usize> {
    v.as_u64()
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| CoreError::parse(path, format!("expected a non-negative integer, found {v}")))
}

pub fn as_str<'a>(v: &'a Value, path: &str) -> Result<&'a str> {
    v.as_str()
        .ok_or_else(|| CoreError::parse(path, format!("expected a string, found {v}")))
}

pub fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array()
        .ok_or_else(|| CoreError::parse(path, format!("expected an array, found {v}")))
}

pub fn as_bool(v: &Value, path: &str) -> Result<bool> {
    v.as_bool()
        .ok_or_else(|| CoreError::parse(path, format!("expected a boolean, found {v}")))
}

pub fn as_point(v: &Value, path: &str) -> Result<(f64, f64)> {
    let arr = as_array(v, path)?;
    if arr.len() != 2 {
        return Err(CoreError::parse(path, format!("expected [x, y], found {} entries", arr.len())));
    }
    Ok((as_f64(&arr[0], &format!("{path}[0]"))?, as_f64(&arr[1], &format!("{path}[1]"))?))
}

pub fn parse_document(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| CoreError::parse("document", e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(0.0), "0.0000000000000000e0");
        let x = 0.123_456_789_012_345_67_f64;
        let back: f64 = serde_json::from_str(&num(x)).unwrap();
        assert_eq!(back.to_bits(), x.to_bits());
    }
}
