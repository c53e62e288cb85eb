//! The operation catalogue: parameter schemas, operations, translation
//! records and reset strategy, plus the JSON document format they are read
//! from and written to.
//!
//! An AMOS deliberately carries no behavioural information. Everything the
//! explorer learns about how operations relate comes from running them.

use std::collections::BTreeMap;
use std::fmt;

use serde_json::{json, Map, Value};
use thiserror::Error;

/// Adapter kinds the executor knows how to drive.
pub const REGISTERED_ADAPTERS: &[&str] = &["in-process", "http"];

pub const DOCUMENT_VERSION: i64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum ParamSchema {
    String {
        min_len: Option<u64>,
        max_len: Option<u64>,
    },
    Int {
        min: Option<i64>,
        max: Option<i64>,
    },
    Bool,
    Enum {
        values: Vec<Value>,
    },
    Map {
        fields: BTreeMap<String, Field>,
    },
    Vector {
        of: Box<ParamSchema>,
        min_len: Option<u64>,
        max_len: Option<u64>,
    },
    /// Named reference into the enclosing schema table.
    Ref {
        name: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub schema: ParamSchema,
    pub required: bool,
}

impl ParamSchema {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ParamSchema::String { .. } => "string",
            ParamSchema::Int { .. } => "int",
            ParamSchema::Bool => "bool",
            ParamSchema::Enum { .. } => "enum",
            ParamSchema::Map { .. } => "map",
            ParamSchema::Vector { .. } => "vector",
            ParamSchema::Ref { .. } => "ref",
        }
    }

    pub fn string() -> Self {
        ParamSchema::String {
            min_len: None,
            max_len: None,
        }
    }

    pub fn int(min: Option<i64>, max: Option<i64>) -> Self {
        ParamSchema::Int { min, max }
    }

    pub fn named(name: impl Into<String>) -> Self {
        ParamSchema::Ref { name: name.into() }
    }

    /// Builds a map schema from `(name, schema, required)` triples.
    pub fn map<I, S>(fields: I) -> Self
    where
        I: IntoIterator<Item = (S, ParamSchema, bool)>,
        S: Into<String>,
    {
        ParamSchema::Map {
            fields: fields
                .into_iter()
                .map(|(name, schema, required)| (name.into(), Field { schema, required }))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Annotations {
    pub query_candidate: bool,
    pub ranged: bool,
    pub state_changing_hint: bool,
    pub paging: Option<Paging>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Paging {
    pub page_param: String,
    pub page_size: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Placement {
    Path,
    Query,
    Body,
}

impl Placement {
    fn as_str(self) -> &'static str {
        match self {
            Placement::Path => "path",
            Placement::Query => "query",
            Placement::Body => "body",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpTranslation {
    pub method: String,
    pub path: String,
    /// Dotted parameter path (`"name"`, `"owner.id"`) to its placement.
    pub placement: BTreeMap<String, Placement>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InProcessTranslation {
    pub handler: String,
}

/// Per-adapter translation records. An operation may carry several so the
/// same catalogue can be driven in-process or over HTTP.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Translation {
    pub http: Option<HttpTranslation>,
    pub in_process: Option<InProcessTranslation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperationSpec {
    pub key: String,
    pub parameters: Option<ParamSchema>,
    pub response_schema: Option<ParamSchema>,
    pub annotations: Annotations,
    pub translation: Translation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub method: String,
    pub config: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResetStrategy {
    pub key: String,
    pub sleep_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Amos {
    pub version: i64,
    pub invocation: Invocation,
    pub schemas: BTreeMap<String, ParamSchema>,
    pub operations: Vec<OperationSpec>,
    pub reset: Option<ResetStrategy>,
}

impl Amos {
    pub fn operation(&self, key: &str) -> Option<&OperationSpec> {
        self.operations.iter().find(|op| op.key == key)
    }

    /// Follows named references until a structural schema is reached.
    pub fn resolve<'a>(&'a self, schema: &'a ParamSchema) -> Result<&'a ParamSchema, SchemaError> {
        resolve(schema, &self.schemas)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("unresolved schema reference `{0}`")]
    UnresolvedRef(String),
    #[error("schema reference cycle through `{0}`")]
    RefCycle(String),
}

pub fn resolve<'a>(
    mut schema: &'a ParamSchema,
    table: &'a BTreeMap<String, ParamSchema>,
) -> Result<&'a ParamSchema, SchemaError> {
    let mut hops = 0;
    while let ParamSchema::Ref { name } = schema {
        schema = table
            .get(name)
            .ok_or_else(|| SchemaError::UnresolvedRef(name.clone()))?;
        hops += 1;
        if hops > table.len() {
            return Err(SchemaError::RefCycle(name.clone()));
        }
    }
    Ok(schema)
}

/// True iff `value` structurally satisfies `schema`. Maps are open-world:
/// fields not named by the schema are ignored.
pub fn conforms(
    value: &Value,
    schema: &ParamSchema,
    schemas: &BTreeMap<String, ParamSchema>,
) -> Result<bool, SchemaError> {
    let schema = resolve(schema, schemas)?;
    Ok(match (schema, value) {
        (ParamSchema::String { min_len, max_len }, Value::String(s)) => {
            let len = s.chars().count() as u64;
            min_len.is_none_or(|m| len >= m) && max_len.is_none_or(|m| len <= m)
        }
        (ParamSchema::Int { min, max }, Value::Number(n)) => match n.as_i64() {
            Some(i) => min.is_none_or(|m| i >= m) && max.is_none_or(|m| i <= m),
            None => false,
        },
        (ParamSchema::Bool, Value::Bool(_)) => true,
        (ParamSchema::Enum { values }, v) => values.contains(v),
        (ParamSchema::Map { fields }, Value::Object(obj)) => {
            for (name, field) in fields {
                match obj.get(name) {
                    Some(v) => {
                        if !conforms(v, &field.schema, schemas)? {
                            return Ok(false);
                        }
                    }
                    None if field.required => return Ok(false),
                    None => {}
                }
            }
            true
        }
        (ParamSchema::Vector { of, min_len, max_len }, Value::Array(items)) => {
            let len = items.len() as u64;
            if min_len.is_some_and(|m| len < m) || max_len.is_some_and(|m| len > m) {
                return Ok(false);
            }
            for item in items {
                if !conforms(item, of, schemas)? {
                    return Ok(false);
                }
            }
            true
        }
        _ => false,
    })
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ViolationKind {
    DuplicateKey,
    UnresolvedRef,
    InvalidBounds,
    RangedWithoutPaging,
    UnknownAdapter,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::DuplicateKey => "duplicate-key",
            ViolationKind::UnresolvedRef => "unresolved-ref",
            ViolationKind::InvalidBounds => "invalid-bounds",
            ViolationKind::RangedWithoutPaging => "ranged-without-paging",
            ViolationKind::UnknownAdapter => "unknown-adapter",
        })
    }
}

/// A validation finding. `location` is the operation key, or
/// `schemas/<name>` / `invocation` for findings outside operations.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    pub location: String,
    pub kind: ViolationKind,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.location, self.kind, self.detail)
    }
}

pub fn validate_amos(amos: &Amos) -> Vec<Violation> {
    let mut out = Vec::new();

    if !REGISTERED_ADAPTERS.contains(&amos.invocation.method.as_str()) {
        out.push(Violation {
            location: "invocation".into(),
            kind: ViolationKind::UnknownAdapter,
            detail: format!("adapter kind `{}` is not registered", amos.invocation.method),
        });
    }

    for (name, schema) in &amos.schemas {
        check_schema(schema, &amos.schemas, &format!("schemas/{name}"), &mut out);
    }

    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for op in &amos.operations {
        *seen.entry(op.key.as_str()).or_default() += 1;
    }
    for (key, count) in &seen {
        if *count > 1 {
            out.push(Violation {
                location: (*key).to_string(),
                kind: ViolationKind::DuplicateKey,
                detail: format!("operation key declared {count} times"),
            });
        }
    }

    for op in &amos.operations {
        if let Some(p) = &op.parameters {
            check_schema(p, &amos.schemas, &op.key, &mut out);
        }
        if let Some(r) = &op.response_schema {
            check_schema(r, &amos.schemas, &op.key, &mut out);
        }
        if op.annotations.ranged && op.annotations.paging.is_none() {
            out.push(Violation {
                location: op.key.clone(),
                kind: ViolationKind::RangedWithoutPaging,
                detail: "ranged operation lacks page-param/page-size".into(),
            });
        }
    }

    out.sort();
    out.dedup();
    out
}

fn check_schema(
    schema: &ParamSchema,
    table: &BTreeMap<String, ParamSchema>,
    location: &str,
    out: &mut Vec<Violation>,
) {
    let bad_bounds = |out: &mut Vec<Violation>, what: &str| {
        out.push(Violation {
            location: location.to_string(),
            kind: ViolationKind::InvalidBounds,
            detail: format!("{what}: min exceeds max"),
        })
    };
    match schema {
        ParamSchema::String { min_len, max_len } => {
            if let (Some(lo), Some(hi)) = (min_len, max_len) {
                if lo > hi {
                    bad_bounds(out, "string length");
                }
            }
        }
        ParamSchema::Int { min, max } => {
            if let (Some(lo), Some(hi)) = (min, max) {
                if lo > hi {
                    bad_bounds(out, "int");
                }
            }
        }
        ParamSchema::Bool => {}
        ParamSchema::Enum { values } => {
            if values.is_empty() {
                out.push(Violation {
                    location: location.to_string(),
                    kind: ViolationKind::InvalidBounds,
                    detail: "enum with no values".into(),
                });
            }
        }
        ParamSchema::Map { fields } => {
            for field in fields.values() {
                check_schema(&field.schema, table, location, out);
            }
        }
        ParamSchema::Vector { of, min_len, max_len } => {
            if let (Some(lo), Some(hi)) = (min_len, max_len) {
                if lo > hi {
                    bad_bounds(out, "vector length");
                }
            }
            check_schema(of, table, location, out);
        }
        ParamSchema::Ref { name } => {
            if !table.contains_key(name) {
                out.push(Violation {
                    location: location.to_string(),
                    kind: ViolationKind::UnresolvedRef,
                    detail: format!("schema `{name}` is not defined"),
                });
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Document format
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("missing required field `{field}` in {context}")]
    MissingField { field: String, context: String },
    #[error("unknown field `{field}` in {context}")]
    UnknownField { field: String, context: String },
    #[error("unknown schema kind `{0}`")]
    UnknownSchemaKind(String),
    #[error("invalid value for `{field}` in {context}: expected {expected}")]
    InvalidValue {
        field: String,
        context: String,
        expected: &'static str,
    },
}

pub fn parse_amos(text: &str) -> Result<Amos, ParseError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| ParseError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    amos_from_value(&doc)
}

pub fn amos_from_value(doc: &Value) -> Result<Amos, ParseError> {
    let top = Obj::new(doc, "document")?;
    top.deny_unknown(&["amos-version", "invocation", "schemas", "operations", "reset"])?;

    let version = top.required("amos-version")?;
    let version = version.as_i64().ok_or_else(|| top.invalid("amos-version", "integer"))?;

    let inv = Obj::new(top.required("invocation")?, "invocation")?;
    inv.deny_unknown(&["method", "config"])?;
    let invocation = Invocation {
        method: inv.required_str("method")?.to_string(),
        config: match inv.optional("config") {
            None | Some(Value::Null) => Map::new(),
            Some(Value::Object(m)) => m.clone(),
            Some(_) => return Err(inv.invalid("config", "object")),
        },
    };

    let mut schemas = BTreeMap::new();
    match top.optional("schemas") {
        None | Some(Value::Null) => {}
        Some(Value::Object(m)) => {
            for (name, node) in m {
                schemas.insert(name.clone(), schema_from_value(node, &format!("schemas/{name}"))?);
            }
        }
        Some(_) => return Err(top.invalid("schemas", "object")),
    }

    let ops = top
        .required("operations")?
        .as_array()
        .ok_or_else(|| top.invalid("operations", "array"))?;
    let operations = ops
        .iter()
        .enumerate()
        .map(|(i, node)| operation_from_value(node, i))
        .collect::<Result<Vec<_>, _>>()?;

    let reset = match top.optional("reset") {
        None | Some(Value::Null) => None,
        Some(node) => {
            let r = Obj::new(node, "reset")?;
            r.deny_unknown(&["strategy", "key", "sleep-ms"])?;
            let strategy = r.required_str("strategy")?;
            if strategy != "operation" {
                return Err(r.invalid("strategy", "\"operation\""));
            }
            let sleep_ms = match r.optional("sleep-ms") {
                None => 0,
                Some(v) => v.as_u64().ok_or_else(|| r.invalid("sleep-ms", "non-negative integer"))?,
            };
            Some(ResetStrategy {
                key: r.required_str("key")?.to_string(),
                sleep_ms,
            })
        }
    };

    Ok(Amos {
        version,
        invocation,
        schemas,
        operations,
        reset,
    })
}

fn operation_from_value(node: &Value, index: usize) -> Result<OperationSpec, ParseError> {
    let ctx = format!("operations[{index}]");
    let o = Obj::new(node, &ctx)?;
    o.deny_unknown(&["key", "parameters", "response-schema", "annotations", "translation"])?;
    let key = o.required_str("key")?.to_string();
    let ctx = format!("operation `{key}`");
    let parameters = match o.optional("parameters") {
        None | Some(Value::Null) => None,
        Some(n) => Some(schema_from_value(n, &format!("{ctx} parameters"))?),
    };
    let response_schema = match o.optional("response-schema") {
        None | Some(Value::Null) => None,
        Some(n) => Some(schema_from_value(n, &format!("{ctx} response-schema"))?),
    };

    let mut annotations = Annotations::default();
    if let Some(node) = o.optional("annotations") {
        let a = Obj::new(node, &format!("{ctx} annotations"))?;
        a.deny_unknown(&["query-candidate", "ranged", "state-changing-hint", "page-param", "page-size"])?;
        annotations.query_candidate = a.optional_bool("query-candidate")?;
        annotations.ranged = a.optional_bool("ranged")?;
        annotations.state_changing_hint = a.optional_bool("state-changing-hint")?;
        match (a.optional("page-param"), a.optional("page-size")) {
            (Some(p), Some(s)) => {
                annotations.paging = Some(Paging {
                    page_param: p
                        .as_str()
                        .ok_or_else(|| a.invalid("page-param", "string"))?
                        .to_string(),
                    page_size: s.as_u64().filter(|s| *s > 0).ok_or_else(|| a.invalid("page-size", "positive integer"))?,
                });
            }
            (None, None) => {}
            (Some(_), None) => return Err(a.missing("page-size")),
            (None, Some(_)) => return Err(a.missing("page-param")),
        }
    }

    let t = Obj::new(o.required("translation")?, &format!("{ctx} translation"))?;
    t.deny_unknown(&["http", "in-process"])?;
    let mut translation = Translation::default();
    if let Some(node) = t.optional("http") {
        let h = Obj::new(node, &format!("{ctx} http translation"))?;
        h.deny_unknown(&["method", "path", "placement"])?;
        let mut placement = BTreeMap::new();
        match h.optional("placement") {
            None | Some(Value::Null) => {}
            Some(Value::Object(m)) => {
                for (param, where_) in m {
                    let p = match where_.as_str() {
                        Some("path") => Placement::Path,
                        Some("query") => Placement::Query,
                        Some("body") => Placement::Body,
                        _ => return Err(h.invalid("placement", "\"path\", \"query\" or \"body\"")),
                    };
                    placement.insert(param.clone(), p);
                }
            }
            Some(_) => return Err(h.invalid("placement", "object")),
        }
        translation.http = Some(HttpTranslation {
            method: h.required_str("method")?.to_ascii_uppercase(),
            path: h.required_str("path")?.to_string(),
            placement,
        });
    }
    if let Some(node) = t.optional("in-process") {
        let p = Obj::new(node, &format!("{ctx} in-process translation"))?;
        p.deny_unknown(&["handler"])?;
        translation.in_process = Some(InProcessTranslation {
            handler: p.required_str("handler")?.to_string(),
        });
    }

    Ok(OperationSpec {
        key,
        parameters,
        response_schema,
        annotations,
        translation,
    })
}

pub fn schema_from_value(node: &Value, ctx: &str) -> Result<ParamSchema, ParseError> {
    let o = Obj::new(node, ctx)?;
    let kind = o.required_str("type")?;
    let opt_u64 = |name: &str| -> Result<Option<u64>, ParseError> {
        match o.optional(name) {
            None => Ok(None),
            Some(v) => v.as_u64().map(Some).ok_or_else(|| o.invalid(name, "non-negative integer")),
        }
    };
    let opt_i64 = |name: &str| -> Result<Option<i64>, ParseError> {
        match o.optional(name) {
            None => Ok(None),
            Some(v) => v.as_i64().map(Some).ok_or_else(|| o.invalid(name, "integer")),
        }
    };
    Ok(match kind {
        "string" => {
            o.deny_unknown(&["type", "min-len", "max-len"])?;
            ParamSchema::String {
                min_len: opt_u64("min-len")?,
                max_len: opt_u64("max-len")?,
            }
        }
        "int" => {
            o.deny_unknown(&["type", "min", "max"])?;
            ParamSchema::Int {
                min: opt_i64("min")?,
                max: opt_i64("max")?,
            }
        }
        "bool" => {
            o.deny_unknown(&["type"])?;
            ParamSchema::Bool
        }
        "enum" => {
            o.deny_unknown(&["type", "values"])?;
            let values = o
                .required("values")?
                .as_array()
                .ok_or_else(|| o.invalid("values", "array"))?
                .clone();
            ParamSchema::Enum { values }
        }
        "map" => {
            o.deny_unknown(&["type", "fields"])?;
            let mut fields = BTreeMap::new();
            match o.optional("fields") {
                None => {}
                Some(Value::Object(m)) => {
                    for (name, fnode) in m {
                        let fctx = format!("{ctx}.{name}");
                        let f = Obj::new(fnode, &fctx)?;
                        f.deny_unknown(&["schema", "required"])?;
                        let schema = schema_from_value(f.required("schema")?, &fctx)?;
                        let required = match f.optional("required") {
                            None => true,
                            Some(Value::Bool(b)) => *b,
                            Some(_) => return Err(f.invalid("required", "boolean")),
                        };
                        fields.insert(name.clone(), Field { schema, required });
                    }
                }
                Some(_) => return Err(o.invalid("fields", "object")),
            }
            ParamSchema::Map { fields }
        }
        "vector" => {
            o.deny_unknown(&["type", "of", "min-len", "max-len"])?;
            ParamSchema::Vector {
                of: Box::new(schema_from_value(o.required("of")?, &format!("{ctx}[]"))?),
                min_len: opt_u64("min-len")?,
                max_len: opt_u64("max-len")?,
            }
        }
        "ref" => {
            o.deny_unknown(&["type", "name"])?;
            ParamSchema::Ref {
                name: o.required_str("name")?.to_string(),
            }
        }
        other => return Err(ParseError::UnknownSchemaKind(other.to_string())),
    })
}

struct Obj<'a> {
    map: &'a Map<String, Value>,
    ctx: String,
}

impl<'a> Obj<'a> {
    fn new(v: &'a Value, ctx: &str) -> Result<Self, ParseError> {
        match v {
            Value::Object(map) => Ok(Obj {
                map,
                ctx: ctx.to_string(),
            }),
            _ => Err(ParseError::InvalidValue {
                field: ctx.to_string(),
                context: ctx.to_string(),
                expected: "object",
            }),
        }
    }

    fn deny_unknown(&self, allowed: &[&str]) -> Result<(), ParseError> {
        match self.map.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(ParseError::UnknownField {
                field: k.clone(),
                context: self.ctx.clone(),
            }),
            None => Ok(()),
        }
    }

    fn optional(&self, name: &str) -> Option<&'a Value> {
        self.map.get(name)
    }

    fn required(&self, name: &str) -> Result<&'a Value, ParseError> {
        self.map.get(name).ok_or_else(|| self.missing(name))
    }

    fn required_str(&self, name: &str) -> Result<&'a str, ParseError> {
        self.required(name)?.as_str().ok_or_else(|| self.invalid(name, "string"))
    }

    fn optional_bool(&self, name: &str) -> Result<bool, ParseError> {
        match self.map.get(name) {
            None => Ok(false),
            Some(Value::Bool(b)) => Ok(*b),
            Some(_) => Err(self.invalid(name, "boolean")),
        }
    }

    fn missing(&self, name: &str) -> ParseError {
        ParseError::MissingField {
            field: name.to_string(),
            context: self.ctx.clone(),
        }
    }

    fn invalid(&self, name: &str, expected: &'static str) -> ParseError {
        ParseError::InvalidValue {
            field: name.to_string(),
            context: self.ctx.clone(),
            expected,
        }
    }
}

/// Renders an AMOS back to its canonical document form.
pub fn amos_to_value(amos: &Amos) -> Value {
    let mut top = Map::new();
    top.insert("amos-version".into(), json!(amos.version));
    top.insert(
        "invocation".into(),
        json!({ "method": amos.invocation.method, "config": Value::Object(amos.invocation.config.clone()) }),
    );
    top.insert(
        "schemas".into(),
        Value::Object(
            amos.schemas
                .iter()
                .map(|(k, s)| (k.clone(), schema_to_value(s)))
                .collect(),
        ),
    );
    top.insert(
        "operations".into(),
        Value::Array(amos.operations.iter().map(operation_to_value).collect()),
    );
    if let Some(r) = &amos.reset {
        top.insert(
            "reset".into(),
            json!({ "strategy": "operation", "key": r.key, "sleep-ms": r.sleep_ms }),
        );
    }
    Value::Object(top)
}

pub fn render_amos(amos: &Amos) -> String {
    let mut s = serde_json::to_string_pretty(&amos_to_value(amos)).expect("values always serialize");
    s.push('\n');
    s
}

fn operation_to_value(op: &OperationSpec) -> Value {
    let mut o = Map::new();
    o.insert("key".into(), json!(op.key));
    o.insert(
        "parameters".into(),
        op.parameters.as_ref().map_or(Value::Null, schema_to_value),
    );
    if let Some(r) = &op.response_schema {
        o.insert("response-schema".into(), schema_to_value(r));
    }
    let a = &op.annotations;
    if *a != Annotations::default() {
        let mut m = Map::new();
        if a.query_candidate {
            m.insert("query-candidate".into(), json!(true));
        }
        if a.ranged {
            m.insert("ranged".into(), json!(true));
        }
        if a.state_changing_hint {
            m.insert("state-changing-hint".into(), json!(true));
        }
        if let Some(p) = &a.paging {
            m.insert("page-param".into(), json!(p.page_param));
            m.insert("page-size".into(), json!(p.page_size));
        }
        o.insert("annotations".into(), Value::Object(m));
    }
    let mut t = Map::new();
    if let Some(h) = &op.translation.http {
        let placement: Map<String, Value> = h
            .placement
            .iter()
            .map(|(k, p)| (k.clone(), json!(p.as_str())))
            .collect();
        t.insert(
            "http".into(),
            json!({ "method": h.method, "path": h.path, "placement": placement }),
        );
    }
    if let Some(p) = &op.translation.in_process {
        t.insert("in-process".into(), json!({ "handler": p.handler }));
    }
    o.insert("translation".into(), Value::Object(t));
    Value::Object(o)
}

pub fn schema_to_value(schema: &ParamSchema) -> Value {
    let mut o = Map::new();
    o.insert("type".into(), json!(schema.kind_name()));
    let mut put = |k: &str, v: Option<Value>| {
        if let Some(v) = v {
            o.insert(k.into(), v);
        }
    };
    match schema {
        ParamSchema::String { min_len, max_len } => {
            put("min-len", min_len.map(|v| json!(v)));
            put("max-len", max_len.map(|v| json!(v)));
        }
        ParamSchema::Int { min, max } => {
            put("min", min.map(|v| json!(v)));
            put("max", max.map(|v| json!(v)));
        }
        ParamSchema::Bool => {}
        ParamSchema::Enum { values } => put("values", Some(Value::Array(values.clone()))),
        ParamSchema::Map { fields } => {
            let f: Map<String, Value> = fields
                .iter()
                .map(|(k, f)| {
                    (
                        k.clone(),
                        json!({ "schema": schema_to_value(&f.schema), "required": f.required }),
                    )
                })
                .collect();
            put("fields", Some(Value::Object(f)));
        }
        ParamSchema::Vector { of, min_len, max_len } => {
            put("of", Some(schema_to_value(of)));
            put("min-len", min_len.map(|v| json!(v)));
            put("max-len", max_len.map(|v| json!(v)));
        }
        ParamSchema::Ref { name } => put("name", Some(json!(name))),
    }
    Value::Object(o)
}
