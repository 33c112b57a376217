//! Dotted `key=value` overrides applied through the serde representation.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Number, Value};

use ptmsa::netlist::parse_number;

/// Splits `key=value`.
pub fn split(arg: &str) -> Result<(String, String), String> {
    match arg.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(format!("--set expects key=value, got '{arg}'")),
    }
}

/// Integers stay integers; then engineering-notation numbers, booleans,
/// JSON arrays/objects, and finally bare strings.
fn leaf(text: &str) -> Value {
    if let Ok(i) = text.parse::<i64>() {
        return Value::Number(i.into());
    }
    if let Some(v) = parse_number(text) {
        if let Some(n) = Number::from_f64(v) {
            return Value::Number(n);
        }
    }
    match text {
        "true" => return Value::Bool(true),
        "false" => return Value::Bool(false),
        _ => {}
    }
    if text.starts_with('[') || text.starts_with('{') {
        if let Ok(v) = serde_json::from_str(text) {
            return v;
        }
    }
    Value::String(text.to_string())
}

/// Applies `sets` to `base` in order (last one wins). A missing key is
/// created only at the leaf, so typos in struct fields are rejected when the
/// result is deserialized.
pub fn apply<T: Serialize + DeserializeOwned>(base: &T, sets: &[(String, String)]) -> Result<T, String> {
    if sets.is_empty() {
        return serde_json::from_value(serde_json::to_value(base).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string());
    }
    let mut root = serde_json::to_value(base).map_err(|e| e.to_string())?;
    for (key, value) in sets {
        let parts: Vec<&str> = key.split('.').collect();
        let mut node = &mut root;
        for (depth, part) in parts.iter().enumerate() {
            let Value::Object(map) = node else {
                return Err(format!("unknown parameter '{key}'"));
            };
            let last = depth + 1 == parts.len();
            if !map.contains_key(*part) {
                if !last {
                    return Err(format!("unknown parameter '{key}'"));
                }
                map.insert(part.to_string(), Value::Null);
            }
            node = map.get_mut(*part).expect("present");
        }
        *node = leaf(value);
    }
    serde_json::from_value(root).map_err(|e| format!("invalid --set value: {e}"))
}
