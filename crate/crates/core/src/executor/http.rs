use std::collections::BTreeSet;
use std::fmt;
use std::time::Duration;

use serde_json::{Map, Value};
use thiserror::Error;

use super::{Adapter, Observation, TransportError};
use crate::amos::{OperationSpec, Placement};
use crate::value::canonical_json;

pub const DEFAULT_TIMEOUT_MS: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranslateError {
    #[error("operation `{0}` has no http translation")]
    NoHttpTranslation(String),
    #[error("placement names parameter `{0}`, which is missing")]
    MissingParameter(String),
    #[error("path template variable `{{{0}}}` was not substituted")]
    UnsubstitutedVariable(String),
}

/// A fully rendered HTTP request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireRequest {
    pub method: String,
    pub url: String,
    pub content_type: Option<&'static str>,
    pub body: Option<String>,
}

impl fmt::Display for WireRequest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.method, self.url)?;
        if let Some(ct) = self.content_type {
            writeln!(f, "content-type: {ct}")?;
        }
        if let Some(body) = &self.body {
            write!(f, "\n{body}")?;
        }
        Ok(())
    }
}

fn is_unreserved(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'-' | b'.' | b'_' | b'~')
}

pub(crate) fn percent_encode(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        if is_unreserved(b) {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

pub(crate) fn percent_decode(s: &str) -> String {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' && i + 2 < bytes.len() {
            if let Some(b) = std::str::from_utf8(&bytes[i + 1..i + 3])
                .ok()
                .and_then(|h| u8::from_str_radix(h, 16).ok())
            {
                out.push(b);
                i += 3;
                continue;
            }
        }
        out.push(if bytes[i] == b'+' { b' ' } else { bytes[i] });
        i += 1;
    }
    String::from_utf8_lossy(&out).into_owned()
}

/// Text form of a value in a path segment or query string.
fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => canonical_json(other),
    }
}

fn lookup_dotted<'a>(params: &'a Map<String, Value>, path: &str) -> Option<&'a Value> {
    let mut parts = path.split('.');
    let mut cur = params.get(parts.next()?)?;
    for p in parts {
        cur = cur.as_object()?.get(p)?;
    }
    Some(cur)
}

fn insert_dotted(target: &mut Map<String, Value>, path: &str, value: Value) {
    let mut parts: Vec<&str> = path.split('.').collect();
    let last = parts.pop().expect("split yields at least one part");
    let mut cur = target;
    for p in parts {
        cur = cur
            .entry(p.to_string())
            .or_insert_with(|| Value::Object(Map::new()))
            .as_object_mut()
            .expect("intermediate nodes are objects");
    }
    cur.insert(last.to_string(), value);
}

/// Renders an abstract invocation as an HTTP request. Placed parameters go
/// where the translation says; unplaced top-level parameters go to the
/// query string for GET, HEAD and DELETE and to the body otherwise.
pub fn translate_http(op: &OperationSpec, params: Option<&Value>, base: &str) -> Result<WireRequest, TranslateError> {
    let t = op
        .translation
        .http
        .as_ref()
        .ok_or_else(|| TranslateError::NoHttpTranslation(op.key.clone()))?;
    let empty = Map::new();
    let params = match params {
        Some(Value::Object(m)) => m,
        _ => &empty,
    };
    let method = t.method.to_ascii_uppercase();
    let query_default = matches!(method.as_str(), "GET" | "HEAD" | "DELETE");

    let mut path = t.path.clone();
    let mut query: Vec<(String, String)> = Vec::new();
    let mut body = Map::new();
    let mut placed_roots = BTreeSet::new();

    for (name, placement) in &t.placement {
        placed_roots.insert(name.split('.').next().unwrap_or(name).to_string());
        let value = match lookup_dotted(params, name) {
            Some(v) => v,
            None if *placement == Placement::Path => return Err(TranslateError::MissingParameter(name.clone())),
            None => continue,
        };
        match placement {
            Placement::Path => {
                let var = format!("{{{name}}}");
                if !path.contains(&var) {
                    return Err(TranslateError::MissingParameter(name.clone()));
                }
                path = path.replace(&var, &percent_encode(&scalar_text(value)));
            }
            Placement::Query => query.push((name.clone(), scalar_text(value))),
            Placement::Body => insert_dotted(&mut body, name, value.clone()),
        }
    }
    for (name, value) in params {
        if placed_roots.contains(name) {
            continue;
        }
        let var = format!("{{{name}}}");
        if path.contains(&var) {
            path = path.replace(&var, &percent_encode(&scalar_text(value)));
        } else if query_default {
            query.push((name.clone(), scalar_text(value)));
        } else {
            body.insert(name.clone(), value.clone());
        }
    }
    if let Some(start) = path.find('{') {
        let end = path[start..].find('}').map_or(path.len(), |e| start + e);
        return Err(TranslateError::UnsubstitutedVariable(path[start + 1..end].to_string()));
    }

    let mut url = format!("{}{}", base.trim_end_matches('/'), path);
    if !query.is_empty() {
        let q: Vec<String> = query
            .iter()
            .map(|(k, v)| format!("{}={}", percent_encode(k), percent_encode(v)))
            .collect();
        url.push('?');
        url.push_str(&q.join("&"));
    }
    let sends_body = !body.is_empty() || !query_default;
    Ok(WireRequest {
        method,
        url,
        content_type: sends_body.then_some("application/json"),
        body: sends_body.then(|| canonical_json(&Value::Object(body))),
    })
}

/// Talks to a system over HTTP/1.1. Resets that are not catalogue
/// operations are sent as `POST <base>/__<key>`.
pub struct HttpAdapter {
    base: String,
    agent: ureq::Agent,
}

impl HttpAdapter {
    pub fn new(base: impl Into<String>, timeout_ms: u64) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_millis(timeout_ms)))
            .build();
        HttpAdapter {
            base: base.into(),
            agent: config.into(),
        }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    fn send(&self, req: &WireRequest) -> Result<Observation, TransportError> {
        let builder = ureq::http::Request::builder()
            .method(req.method.as_str())
            .uri(req.url.as_str())
            .header("accept", "application/json");
        let result = match &req.body {
            Some(body) => {
                let r = builder
                    .header("content-type", req.content_type.unwrap_or("application/json"))
                    .body(body.clone().into_bytes())
                    .map_err(|e| TransportError::Io(e.to_string()))?;
                self.agent.run(r)
            }
            None => {
                let r = builder.body(()).map_err(|e| TransportError::Io(e.to_string()))?;
                self.agent.run(r)
            }
        };
        let mut resp = result.map_err(|e| classify(e, &req.url))?;
        let status = resp.status().as_u16();
        let raw = resp
            .body_mut()
            .read_to_vec()
            .map_err(|e| classify(e, &req.url))?;
        Ok(Observation::from_raw(status, &raw))
    }
}

fn classify(e: ureq::Error, url: &str) -> TransportError {
    match e {
        ureq::Error::Timeout(_) => TransportError::Timeout(url.to_string()),
        ureq::Error::ConnectionFailed | ureq::Error::HostNotFound => TransportError::Unreachable(url.to_string()),
        ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::ConnectionRefused => {
            TransportError::Unreachable(url.to_string())
        }
        other => TransportError::Io(other.to_string()),
    }
}

impl Adapter for HttpAdapter {
    fn invoke(&mut self, op: &OperationSpec, params: Option<&Value>) -> Result<Observation, TransportError> {
        let req = translate_http(op, params, &self.base)?;
        self.send(&req)
    }

    fn reset(&mut self, key: &str) -> Result<(), TransportError> {
        let req = WireRequest {
            method: "POST".into(),
            url: format!("{}/__{}", self.base.trim_end_matches('/'), percent_encode(key)),
            content_type: Some("application/json"),
            body: Some("{}".into()),
        };
        let obs = self.send(&req)?;
        if obs.is_success() {
            Ok(())
        } else {
            Err(TransportError::UnknownReset(key.to_string()))
        }
    }

    fn sleep(&mut self, ms: u64) {
        std::thread::sleep(Duration::from_millis(ms));
    }
}
