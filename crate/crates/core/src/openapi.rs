//! Maps an OpenAPI 3.x document (JSON form) to an AMOS catalogue.
//!
//! Constructs with no AMOS counterpart are replaced by the closest
//! supported node and reported as warnings; nothing is dropped silently.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{Map, Value};
use thiserror::Error;

use crate::amos::{
    Amos, Annotations, Field, HttpTranslation, Invocation, OperationSpec, ParamSchema, Placement, Translation,
    DOCUMENT_VERSION,
};

const METHODS: [&str; 8] = ["get", "put", "post", "delete", "options", "head", "patch", "trace"];

/// Keys that narrow a schema in ways the catalogue cannot express.
const DROPPED_KEYWORDS: [&str; 4] = ["not", "pattern", "nullable", "discriminator"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapError {
    #[error("document is not valid JSON at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("not an OpenAPI 3.x document: {0}")]
    NotOpenApi(String),
    #[error("document has no paths")]
    NoPaths,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapWarning {
    /// JSON pointer into the source document.
    pub location: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappingReport {
    pub amos: Amos,
    pub warnings: Vec<MapWarning>,
}

fn escape(token: &str) -> String {
    token.replace('~', "~0").replace('/', "~1")
}

struct Mapper<'a> {
    doc: &'a Value,
    components: &'a Map<String, Value>,
    warnings: Vec<MapWarning>,
}

impl<'a> Mapper<'a> {
    fn warn(&mut self, location: &str, reason: impl Into<String>) {
        self.warnings.push(MapWarning {
            location: location.to_string(),
            reason: reason.into(),
        });
    }

    /// Follows a local `$ref` chain; `None` for external or dangling refs.
    fn deref(&mut self, node: &'a Value, loc: &str) -> Option<(&'a Value, String)> {
        let mut node = node;
        let mut loc = loc.to_string();
        let mut seen = BTreeSet::new();
        while let Some(r) = node.get("$ref").and_then(Value::as_str) {
            if !seen.insert(r.to_string()) {
                self.warn(&loc, format!("reference cycle through {r}"));
                return None;
            }
            match r.strip_prefix('#').and_then(|p| self.doc.pointer(p)) {
                Some(target) => {
                    node = target;
                    loc = r.to_string();
                }
                None => {
                    self.warn(&loc, format!("unresolvable reference {r}"));
                    return None;
                }
            }
        }
        Some((node, loc))
    }

    fn schema(&mut self, node: &'a Value, loc: &str) -> ParamSchema {
        if let Some(r) = node.get("$ref").and_then(Value::as_str) {
            if let Some(name) = r.strip_prefix("#/components/schemas/") {
                if self.components.contains_key(name) {
                    return ParamSchema::named(name);
                }
            }
            return match self.deref(node, loc) {
                Some((target, tloc)) => self.schema(target, &tloc),
                None => ParamSchema::string(),
            };
        }
        let Some(obj) = node.as_object() else {
            self.warn(loc, "schema is not an object; mapped to string");
            return ParamSchema::string();
        };
        for key in DROPPED_KEYWORDS {
            if obj.contains_key(key) {
                self.warn(&format!("{loc}/{key}"), format!("`{key}` is not supported and was ignored"));
            }
        }
        for key in ["oneOf", "anyOf"] {
            if let Some(alts) = obj.get(key).and_then(Value::as_array) {
                let here = format!("{loc}/{key}");
                return match alts.first() {
                    Some(first) => {
                        self.warn(&here, format!("`{key}` mapped to its first alternative"));
                        self.schema(first, &format!("{here}/0"))
                    }
                    None => {
                        self.warn(&here, format!("empty `{key}` mapped to string"));
                        ParamSchema::string()
                    }
                };
            }
        }
        if let Some(parts) = obj.get("allOf").and_then(Value::as_array) {
            let here = format!("{loc}/allOf");
            return self.all_of(parts, &here);
        }
        if let Some(values) = obj.get("enum").and_then(Value::as_array) {
            return ParamSchema::Enum { values: values.clone() };
        }
        let ty = obj.get("type").and_then(Value::as_str);
        match ty {
            Some("string") => ParamSchema::String {
                min_len: obj.get("minLength").and_then(Value::as_u64),
                max_len: obj.get("maxLength").and_then(Value::as_u64),
            },
            Some("integer") => self.integer(obj),
            Some("number") => {
                self.warn(loc, "number mapped to integer");
                self.integer(obj)
            }
            Some("boolean") => ParamSchema::Bool,
            Some("array") => {
                let of = match obj.get("items") {
                    Some(items) => self.schema(items, &format!("{loc}/items")),
                    None => {
                        self.warn(loc, "array without items; elements mapped to string");
                        ParamSchema::string()
                    }
                };
                ParamSchema::Vector {
                    of: Box::new(of),
                    min_len: obj.get("minItems").and_then(Value::as_u64),
                    max_len: obj.get("maxItems").and_then(Value::as_u64),
                }
            }
            Some("object") | None if obj.contains_key("properties") || ty.is_some() => self.object(obj, loc),
            Some(other) => {
                self.warn(loc, format!("type `{other}` mapped to string"));
                ParamSchema::string()
            }
            None => {
                self.warn(loc, "schema without type mapped to string");
                ParamSchema::string()
            }
        }
    }

    fn integer(&mut self, obj: &Map<String, Value>) -> ParamSchema {
        let bound = |key: &str, exclusive: &str, step: i64| {
            obj.get(key).and_then(Value::as_f64).map(|v| {
                let v = if step > 0 { v.ceil() } else { v.floor() } as i64;
                if obj.get(exclusive).and_then(Value::as_bool) == Some(true) {
                    v + step
                } else {
                    v
                }
            })
        };
        ParamSchema::Int {
            min: bound("minimum", "exclusiveMinimum", 1),
            max: bound("maximum", "exclusiveMaximum", -1),
        }
    }

    fn object(&mut self, obj: &'a Map<String, Value>, loc: &str) -> ParamSchema {
        if obj.get("additionalProperties").is_some_and(Value::is_object) {
            self.warn(
                &format!("{loc}/additionalProperties"),
                "additionalProperties schema ignored; only declared properties are generated",
            );
        }
        let required: BTreeSet<&str> = obj
            .get("required")
            .and_then(Value::as_array)
            .map(|r| r.iter().filter_map(Value::as_str).collect())
            .unwrap_or_default();
        let mut fields = BTreeMap::new();
        if let Some(props) = obj.get("properties").and_then(Value::as_object) {
            for (name, sub) in props {
                let schema = self.schema(sub, &format!("{loc}/properties/{}", escape(name)));
                fields.insert(
                    name.clone(),
                    Field {
                        schema,
                        required: required.contains(name.as_str()),
                    },
                );
            }
        }
        ParamSchema::Map { fields }
    }

    fn all_of(&mut self, parts: &'a [Value], loc: &str) -> ParamSchema {
        let mut fields = BTreeMap::new();
        let mut first_other = None;
        for (i, part) in parts.iter().enumerate() {
            let ploc = format!("{loc}/{i}");
            let mapped = match self.deref(part, &ploc) {
                Some((target, tloc)) => self.schema(target, &tloc),
                None => ParamSchema::string(),
            };
            match mapped {
                ParamSchema::Map { fields: f } => fields.extend(f),
                other => {
                    first_other.get_or_insert(other);
                }
            }
        }
        if fields.is_empty() {
            self.warn(loc, "`allOf` mapped to its first alternative");
            first_other.unwrap_or_else(ParamSchema::string)
        } else {
            self.warn(loc, "`allOf` mapped to the union of its object properties");
            ParamSchema::Map { fields }
        }
    }
}

struct RawOperation {
    method: String,
    path: String,
    path_vars: Vec<String>,
    spec: OperationSpec,
}

fn base_key(method: &str, path: &str) -> String {
    let mut key = method.to_string();
    for seg in path.split('/').filter(|s| !s.is_empty() && !s.starts_with('{')) {
        key.push('-');
        key.extend(seg.chars().map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '-' }));
    }
    key
}

fn path_vars(path: &str) -> Vec<String> {
    path.split('/')
        .filter_map(|s| s.strip_prefix('{').and_then(|s| s.strip_suffix('}')))
        .map(str::to_string)
        .collect()
}

/// Keys are `<method>-<literal segments>`; operations that collide get
/// `-by-<path variables>`, then a numeric suffix if still ambiguous.
fn assign_keys(ops: &mut [RawOperation]) {
    let base: Vec<String> = ops.iter().map(|o| base_key(&o.method, &o.path)).collect();
    let mut count: BTreeMap<&str, usize> = BTreeMap::new();
    for k in &base {
        *count.entry(k).or_default() += 1;
    }
    let mut keys: Vec<String> = base
        .iter()
        .zip(ops.iter())
        .map(|(k, o)| {
            if count[k.as_str()] > 1 && !o.path_vars.is_empty() {
                format!("{k}-by-{}", o.path_vars.join("-"))
            } else {
                k.clone()
            }
        })
        .collect();
    let mut used: BTreeMap<String, usize> = BTreeMap::new();
    for k in &mut keys {
        let n = used.entry(k.clone()).or_default();
        *n += 1;
        if *n > 1 {
            k.push_str(&format!("-{n}"));
        }
    }
    for (op, key) in ops.iter_mut().zip(keys) {
        op.spec.key = key;
    }
}

fn json_schema(holder: &Value) -> Option<&Value> {
    holder.get("content")?.get("application/json")?.get("schema")
}

/// Maps an OpenAPI 3.x JSON document to a catalogue.
pub fn map_openapi(text: &str) -> Result<MappingReport, MapError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| MapError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    match doc.get("openapi").and_then(Value::as_str) {
        Some(v) if v.starts_with("3.") => {}
        Some(v) => return Err(MapError::NotOpenApi(format!("unsupported version {v}"))),
        None => return Err(MapError::NotOpenApi("missing `openapi` version field".into())),
    }
    let paths = match doc.get("paths").and_then(Value::as_object) {
        Some(p) if !p.is_empty() => p,
        _ => return Err(MapError::NoPaths),
    };
    let empty = Map::new();
    let components = doc
        .pointer("/components/schemas")
        .and_then(Value::as_object)
        .unwrap_or(&empty);
    let mut m = Mapper {
        doc: &doc,
        components,
        warnings: Vec::new(),
    };

    let mut schemas = BTreeMap::new();
    for (name, node) in components {
        let schema = m.schema(node, &format!("#/components/schemas/{}", escape(name)));
        schemas.insert(name.clone(), schema);
    }

    let mut raw = Vec::new();
    for (path, item) in paths {
        let item_loc = format!("#/paths/{}", escape(path));
        let shared = item.get("parameters").and_then(Value::as_array);
        for method in METHODS {
            let Some(op) = item.get(method) else { continue };
            let loc = format!("{item_loc}/{method}");
            raw.push(map_operation(&mut m, method, path, op, shared, &loc));
        }
        if let Some(obj) = item.as_object() {
            for key in obj.keys() {
                if !METHODS.contains(&key.as_str()) && !["parameters", "summary", "description", "servers"].contains(&key.as_str())
                {
                    m.warn(&format!("{item_loc}/{}", escape(key)), format!("path item field `{key}` ignored"));
                }
            }
        }
    }
    assign_keys(&mut raw);

    let mut config = Map::new();
    if let Some(url) = doc.pointer("/servers/0/url").and_then(Value::as_str) {
        config.insert("base-url".into(), Value::String(url.to_string()));
    }
    let amos = Amos {
        version: DOCUMENT_VERSION,
        invocation: Invocation {
            method: "http".into(),
            config,
        },
        schemas,
        operations: raw.into_iter().map(|r| r.spec).collect(),
        reset: None,
    };
    Ok(MappingReport {
        amos,
        warnings: m.warnings,
    })
}

fn map_operation<'a>(
    m: &mut Mapper<'a>,
    method: &str,
    path: &str,
    op: &'a Value,
    shared: Option<&'a Vec<Value>>,
    loc: &str,
) -> RawOperation {
    let mut fields = BTreeMap::new();
    let mut placement = BTreeMap::new();

    // Operation-level parameters override path-level ones with the same name and location.
    let mut params: BTreeMap<(String, String), (&'a Value, String)> = BTreeMap::new();
    let lists = [
        (shared, loc.rsplit_once('/').map_or(loc, |(l, _)| l).to_string()),
        (op.get("parameters").and_then(Value::as_array), loc.to_string()),
    ];
    for (list, base) in lists {
        for (i, p) in list.into_iter().flatten().enumerate() {
            let ploc = format!("{base}/parameters/{i}");
            let Some((p, ploc)) = m.deref(p, &ploc) else { continue };
            let name = p.get("name").and_then(Value::as_str).unwrap_or_default().to_string();
            let place = p.get("in").and_then(Value::as_str).unwrap_or_default().to_string();
            params.insert((name, place), (p, ploc));
        }
    }
    for ((name, place), (p, ploc)) in params {
        let placed = match place.as_str() {
            "path" => Placement::Path,
            "query" => Placement::Query,
            other => {
                m.warn(&ploc, format!("{other} parameter `{name}` skipped"));
                continue;
            }
        };
        let schema = match p.get("schema") {
            Some(s) => m.schema(s, &format!("{ploc}/schema")),
            None => {
                m.warn(&ploc, "parameter without schema mapped to string");
                ParamSchema::string()
            }
        };
        let required = placed == Placement::Path || p.get("required").and_then(Value::as_bool) == Some(true);
        fields.insert(name.clone(), Field { schema, required });
        placement.insert(name, placed);
    }

    if let Some(body) = op.get("requestBody") {
        let bloc = format!("{loc}/requestBody");
        if let Some((body, bloc)) = m.deref(body, &bloc) {
            match json_schema(body) {
                None => m.warn(&bloc, "request body without an application/json schema skipped"),
                Some(schema) => {
                    let sloc = format!("{bloc}/content/application~1json/schema");
                    let mapped = match m.deref(schema, &sloc) {
                        Some((target, tloc)) => {
                            // Body properties are spread into the operation's parameter map,
                            // so named component schemas are inlined here.
                            if target.get("properties").is_some() || target.get("type").and_then(Value::as_str) == Some("object") {
                                let obj = target.as_object().expect("has properties");
                                m.object(obj, &tloc)
                            } else {
                                m.schema(target, &tloc)
                            }
                        }
                        None => ParamSchema::string(),
                    };
                    match mapped {
                        ParamSchema::Map { fields: f } => {
                            for (name, field) in f {
                                if fields.contains_key(&name) {
                                    m.warn(&sloc, format!("body property `{name}` shadows a parameter and was skipped"));
                                    continue;
                                }
                                placement.insert(name.clone(), Placement::Body);
                                fields.insert(name, field);
                            }
                        }
                        other => m.warn(
                            &sloc,
                            format!("non-object request body ({}) skipped", other.kind_name()),
                        ),
                    }
                }
            }
        }
    }

    let mut response_schema = None;
    for status in ["200", "201"] {
        if let Some(resp) = op.get("responses").and_then(|r| r.get(status)) {
            let rloc = format!("{loc}/responses/{status}");
            if let Some((resp, rloc)) = m.deref(resp, &rloc) {
                if let Some(schema) = json_schema(resp) {
                    response_schema = Some(m.schema(schema, &format!("{rloc}/content/application~1json/schema")));
                }
            }
            break;
        }
    }

    let is_get = method == "get";
    RawOperation {
        method: method.to_string(),
        path: path.to_string(),
        path_vars: path_vars(path),
        spec: OperationSpec {
            key: String::new(),
            parameters: if fields.is_empty() {
                None
            } else {
                Some(ParamSchema::Map { fields })
            },
            response_schema,
            annotations: Annotations {
                query_candidate: is_get,
                state_changing_hint: !is_get,
                ..Annotations::default()
            },
            translation: Translation {
                http: Some(HttpTranslation {
                    method: method.to_ascii_uppercase(),
                    path: path.to_string(),
                    placement,
                }),
                in_process: None,
            },
        },
    }
}
