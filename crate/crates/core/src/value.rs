//! Paths into concrete JSON values and canonical serialization.

use std::fmt;

use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PathStep {
    Key(String),
    Index(usize),
}

impl PathStep {
    pub fn to_value(&self) -> Value {
        match self {
            PathStep::Key(k) => Value::String(k.clone()),
            PathStep::Index(i) => Value::from(*i),
        }
    }

    pub fn from_value(v: &Value) -> Option<Self> {
        match v {
            Value::String(s) => Some(PathStep::Key(s.clone())),
            Value::Number(n) => n.as_u64().map(|i| PathStep::Index(i as usize)),
            _ => None,
        }
    }
}

impl fmt::Display for PathStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathStep::Key(k) => write!(f, "{k:?}"),
            PathStep::Index(i) => write!(f, "{i}"),
        }
    }
}

pub fn format_path(path: &[PathStep]) -> String {
    let parts: Vec<String> = path.iter().map(|p| p.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

pub fn lookup<'a>(value: &'a Value, path: &[PathStep]) -> Option<&'a Value> {
    path.iter().try_fold(value, |v, step| match (step, v) {
        (PathStep::Key(k), Value::Object(m)) => m.get(k),
        (PathStep::Index(i), Value::Array(a)) => a.get(*i),
        _ => None,
    })
}

/// Every sub-value of `value`, itself first, in depth-first order.
pub fn sub_values(value: &Value) -> Vec<(Vec<PathStep>, &Value)> {
    let mut out = Vec::new();
    let mut path = Vec::new();
    walk(value, &mut path, &mut out);
    out
}

fn walk<'a>(value: &'a Value, path: &mut Vec<PathStep>, out: &mut Vec<(Vec<PathStep>, &'a Value)>) {
    out.push((path.clone(), value));
    match value {
        Value::Object(m) => {
            for (k, v) in m {
                path.push(PathStep::Key(k.clone()));
                walk(v, path, out);
                path.pop();
            }
        }
        Value::Array(a) => {
            for (i, v) in a.iter().enumerate() {
                path.push(PathStep::Index(i));
                walk(v, path, out);
                path.pop();
            }
        }
        _ => {}
    }
}

/// Canonical text of a value: object keys sorted, no insignificant space.
pub fn canonical_json(value: &Value) -> String {
    // serde_json's default map is ordered by key, so plain serialization
    // is already canonical.
    serde_json::to_string(value).expect("json values always serialize")
}

/// Canonical bytes of a response body: JSON bodies are re-serialized with
/// sorted keys, anything else is kept as is.
pub fn canonical_body(raw: &[u8]) -> Vec<u8> {
    if raw.is_empty() {
        return Vec::new();
    }
    match serde_json::from_slice::<Value>(raw) {
        Ok(v) => canonical_json(&v).into_bytes(),
        Err(_) => raw.to_vec(),
    }
}

/// Rough size of a concrete value, used to order shrink candidates.
pub fn value_size(value: &Value) -> u64 {
    match value {
        Value::Null => 0,
        Value::Bool(b) => u64::from(*b),
        Value::Number(n) => n
            .as_i64()
            .map(|i| i.unsigned_abs())
            .or_else(|| n.as_u64())
            .unwrap_or(0),
        Value::String(s) => s.chars().map(|c| 1 + u64::from(c != 'a')).fold(0, u64::saturating_add),
        Value::Array(a) => a.iter().map(|v| value_size(v).saturating_add(1)).fold(0, u64::saturating_add),
        Value::Object(m) => m.values().map(|v| value_size(v).saturating_add(1)).fold(0, u64::saturating_add),
    }
}
