//! Report forms for exploration results: a canonical data document, fixed
//! template text for readers, and replayable test cases.

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::amos::Amos;
use crate::executor::{Adapter, ExecutionTrace, TransportError};
use crate::explorer::{run_trial, ExplorationResult, GeneratedExample, PropResult, SymbolBinding};
use crate::genseq::{CandidateSequence, Param, Source, Step, SymbolicRef};
use crate::metaprops::{evaluate, shape_constraints, MetaPropertyId, QueryContext};
use crate::value::{canonical_json, format_path, lookup, PathStep};

pub const REPORT_FORMAT: &str = "apixplore-report";
pub const CASE_FORMAT: &str = "apixplore-case";
pub const FORMAT_VERSION: i64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("not valid JSON: {0}")]
    Syntax(String),
    #[error("{context}: {problem}")]
    Invalid { context: String, problem: String },
}

fn invalid(context: &str, problem: impl Into<String>) -> ReportError {
    ReportError::Invalid {
        context: context.to_string(),
        problem: problem.into(),
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values always serialize");
    s.push('\n');
    s
}

fn source_from_str(s: &str) -> Option<Source> {
    match s {
        "param" => Some(Source::Param),
        "response" => Some(Source::Response),
        _ => None,
    }
}

pub fn param_to_value(p: &Param) -> Value {
    match p {
        Param::Lit(v) => json!({ "lit": v }),
        Param::Ref(r) => json!({ "ref": {
            "step": r.step,
            "source": r.source.as_str(),
            "path": r.path.iter().map(PathStep::to_value).collect::<Vec<_>>(),
        }}),
        Param::Map(m) => json!({ "map": m.iter().map(|(k, v)| (k.clone(), param_to_value(v))).collect::<Map<_, _>>() }),
        Param::List(l) => json!({ "list": l.iter().map(param_to_value).collect::<Vec<_>>() }),
    }
}

pub fn param_from_value(v: &Value, ctx: &str) -> Result<Param, ReportError> {
    let obj = v.as_object().filter(|o| o.len() == 1).ok_or_else(|| invalid(ctx, "expected a one-key tagged node"))?;
    let (tag, body) = obj.iter().next().expect("one entry");
    match tag.as_str() {
        "lit" => Ok(Param::Lit(body.clone())),
        "ref" => {
            let step = body
                .get("step")
                .and_then(Value::as_u64)
                .ok_or_else(|| invalid(ctx, "reference without step"))? as usize;
            let source = body
                .get("source")
                .and_then(Value::as_str)
                .and_then(source_from_str)
                .ok_or_else(|| invalid(ctx, "reference source must be param or response"))?;
            let path = body
                .get("path")
                .and_then(Value::as_array)
                .ok_or_else(|| invalid(ctx, "reference without path"))?
                .iter()
                .map(|s| PathStep::from_value(s).ok_or_else(|| invalid(ctx, "path steps are keys or indices")))
                .collect::<Result<_, _>>()?;
            Ok(Param::Ref(SymbolicRef { step, source, path }))
        }
        "map" => body
            .as_object()
            .ok_or_else(|| invalid(ctx, "map node must hold an object"))?
            .iter()
            .map(|(k, v)| Ok((k.clone(), param_from_value(v, &format!("{ctx}.{k}"))?)))
            .collect::<Result<_, _>>()
            .map(Param::Map),
        "list" => body
            .as_array()
            .ok_or_else(|| invalid(ctx, "list node must hold an array"))?
            .iter()
            .enumerate()
            .map(|(i, v)| param_from_value(v, &format!("{ctx}[{i}]")))
            .collect::<Result<_, _>>()
            .map(Param::List),
        other => Err(invalid(ctx, format!("unknown node tag `{other}`"))),
    }
}

fn steps_to_value(steps: &[Step]) -> Value {
    Value::Array(
        steps
            .iter()
            .map(|s| json!({ "op": s.op, "params": s.params.as_ref().map_or(Value::Null, param_to_value) }))
            .collect(),
    )
}

fn steps_from_value(v: Option<&Value>, ctx: &str) -> Result<Vec<Step>, ReportError> {
    v.and_then(Value::as_array)
        .ok_or_else(|| invalid(ctx, "missing steps"))?
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let sctx = format!("{ctx}.steps[{i}]");
            let op = s
                .get("op")
                .and_then(Value::as_str)
                .ok_or_else(|| invalid(&sctx, "missing op"))?
                .to_string();
            let params = match s.get("params") {
                None | Some(Value::Null) => None,
                Some(p) => Some(param_from_value(p, &sctx)?),
            };
            Ok(Step { op, params })
        })
        .collect()
}

fn query_to_value(q: Option<&QueryContext>) -> Value {
    q.map_or(Value::Null, |q| json!({ "op": q.query_op, "params": q.query_params }))
}

fn query_from_value(v: Option<&Value>, ctx: &str) -> Result<Option<QueryContext>, ReportError> {
    match v {
        None | Some(Value::Null) => Ok(None),
        Some(q) => Ok(Some(QueryContext {
            query_op: q
                .get("op")
                .and_then(Value::as_str)
                .ok_or_else(|| invalid(ctx, "query without op"))?
                .to_string(),
            query_params: q.get("params").filter(|p| !p.is_null()).cloned(),
        })),
    }
}

fn prop_from_value(v: Option<&Value>, ctx: &str) -> Result<MetaPropertyId, ReportError> {
    v.and_then(Value::as_str)
        .ok_or_else(|| invalid(ctx, "missing property id"))?
        .parse()
        .map_err(|e: crate::metaprops::UnknownMetaProperty| invalid(ctx, e.to_string()))
}

fn usize_field(v: &Value, key: &str, ctx: &str) -> Result<usize, ReportError> {
    v.get(key)
        .and_then(Value::as_u64)
        .map(|n| n as usize)
        .ok_or_else(|| invalid(ctx, format!("missing integer `{key}`")))
}

fn example_to_value(ex: &GeneratedExample) -> Value {
    json!({
        "property": ex.prop.as_str(),
        "key": ex.key,
        "truncated": ex.truncated,
        "setup-len": ex.setup_len,
        "query": query_to_value(ex.query.as_ref()),
        "steps": steps_to_value(&ex.steps),
        "symbols": ex.symbols.iter().map(|s| json!({
            "symbol": s.symbol,
            "step": s.step,
            "source": s.source.as_str(),
            "op": s.op,
            "sample": s.sample,
        })).collect::<Vec<_>>(),
    })
}

fn example_from_value(v: &Value, ctx: &str) -> Result<GeneratedExample, ReportError> {
    let symbols = v
        .get("symbols")
        .and_then(Value::as_array)
        .ok_or_else(|| invalid(ctx, "missing symbols"))?
        .iter()
        .map(|s| {
            Ok(SymbolBinding {
                symbol: s
                    .get("symbol")
                    .and_then(Value::as_str)
                    .ok_or_else(|| invalid(ctx, "symbol without name"))?
                    .to_string(),
                step: usize_field(s, "step", ctx)?,
                source: s
                    .get("source")
                    .and_then(Value::as_str)
                    .and_then(source_from_str)
                    .ok_or_else(|| invalid(ctx, "symbol without source"))?,
                op: s.get("op").and_then(Value::as_str).unwrap_or_default().to_string(),
                sample: s.get("sample").cloned().unwrap_or(Value::Null),
            })
        })
        .collect::<Result<_, ReportError>>()?;
    Ok(GeneratedExample {
        prop: prop_from_value(v.get("property"), ctx)?,
        steps: steps_from_value(v.get("steps"), ctx)?,
        setup_len: usize_field(v, "setup-len", ctx)?,
        query: query_from_value(v.get("query"), ctx)?,
        symbols,
        key: v
            .get("key")
            .and_then(Value::as_str)
            .ok_or_else(|| invalid(ctx, "missing key"))?
            .to_string(),
        truncated: v.get("truncated").and_then(Value::as_bool).unwrap_or(false),
    })
}

pub fn result_to_value(result: &ExplorationResult) -> Value {
    json!({
        "format": REPORT_FORMAT,
        "version": FORMAT_VERSION,
        "warnings": result.warnings,
        "properties": result.props.iter().map(|p| json!({
            "id": p.prop.as_str(),
            "trials": p.trials,
            "examples": p.examples.iter().map(example_to_value).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    })
}

/// Canonical JSON document for a result (keys sorted, props in id order,
/// examples in discovery order).
pub fn render_data(result: &ExplorationResult) -> String {
    pretty(&result_to_value(result))
}

pub fn parse_data(text: &str) -> Result<ExplorationResult, ReportError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| ReportError::Syntax(e.to_string()))?;
    if doc.get("format").and_then(Value::as_str) != Some(REPORT_FORMAT) {
        return Err(invalid("document", format!("format must be `{REPORT_FORMAT}`")));
    }
    let warnings = doc
        .get("warnings")
        .and_then(Value::as_array)
        .ok_or_else(|| invalid("document", "missing warnings"))?
        .iter()
        .map(|w| w.as_str().map(str::to_string).ok_or_else(|| invalid("warnings", "expected strings")))
        .collect::<Result<_, _>>()?;
    let props = doc
        .get("properties")
        .and_then(Value::as_array)
        .ok_or_else(|| invalid("document", "missing properties"))?
        .iter()
        .map(|p| {
            let prop = prop_from_value(p.get("id"), "properties")?;
            let ctx = prop.as_str();
            let examples = p
                .get("examples")
                .and_then(Value::as_array)
                .ok_or_else(|| invalid(ctx, "missing examples"))?
                .iter()
                .enumerate()
                .map(|(i, e)| example_from_value(e, &format!("{ctx} example {i}")))
                .collect::<Result<_, _>>()?;
            Ok(PropResult {
                prop,
                examples,
                trials: usize_field(p, "trials", ctx)?,
            })
        })
        .collect::<Result<_, ReportError>>()?;
    Ok(ExplorationResult { props, warnings })
}

fn describe_ref(ex: &GeneratedExample, r: &SymbolicRef) -> String {
    let Some(binding) = ex.symbol_for(r.step, r.source) else {
        return format!("step {} {} at {}", r.step + 1, r.source.as_str(), format_path(&r.path));
    };
    let sample = lookup(&binding.sample, &r.path).map_or_else(|| "?".to_string(), canonical_json);
    let origin = match r.source {
        Source::Response => "response",
        Source::Param => "parameters",
    };
    format!(
        "{} (= {sample}, from {} {origin} at {})",
        binding.symbol,
        binding.op,
        format_path(&r.path)
    )
}

fn describe_param(ex: &GeneratedExample, p: &Param) -> String {
    match p {
        Param::Lit(v) => canonical_json(v),
        Param::Ref(r) => describe_ref(ex, r),
        Param::Map(m) => {
            let parts: Vec<String> = m
                .iter()
                .map(|(k, v)| format!("{}: {}", canonical_json(&Value::String(k.clone())), describe_param(ex, v)))
                .collect();
            format!("{{{}}}", parts.join(", "))
        }
        Param::List(l) => {
            let parts: Vec<String> = l.iter().map(|v| describe_param(ex, v)).collect();
            format!("[{}]", parts.join(", "))
        }
    }
}

/// Lines describing one example.
pub fn render_example(ex: &GeneratedExample) -> Vec<String> {
    let mut lines = vec![format!("{} {}", ex.prop.as_str(), ex.subject())];
    for (i, step) in ex.steps.iter().enumerate() {
        let mut line = match &step.params {
            Some(p) => format!("{}. call {} with {}", i + 1, step.op, describe_param(ex, p)),
            None => format!("{}. call {} with no parameters", i + 1, step.op),
        };
        if ex.prop == MetaPropertyId::MpS5 && i < ex.setup_len {
            line.push_str(" (setup)");
        }
        lines.push(line);
    }
    if let Some(q) = &ex.query {
        lines.push(format!("   state observed with {} before the first call and after each call", q.query_op));
    }
    lines
}

/// Fixed-template text for a whole result, examples separated by blank lines.
pub fn render_human(result: &ExplorationResult) -> Vec<String> {
    let mut lines = Vec::new();
    for p in &result.props {
        if !lines.is_empty() {
            lines.push(String::new());
        }
        if p.examples.is_empty() {
            lines.push(format!("{}: No example found", p.prop.as_str()));
            continue;
        }
        for (i, ex) in p.examples.iter().enumerate() {
            if i > 0 {
                lines.push(String::new());
            }
            lines.extend(render_example(ex));
        }
    }
    for w in &result.warnings {
        lines.push(format!("warning: {w}"));
    }
    lines
}

/// A replayable example: steps with symbolic references, the property to
/// assert and the query used to observe state.
#[derive(Debug, Clone, PartialEq)]
pub struct TestCase {
    pub prop: MetaPropertyId,
    pub query: Option<QueryContext>,
    pub setup_len: usize,
    pub steps: Vec<Step>,
}

impl TestCase {
    pub fn from_example(ex: &GeneratedExample) -> Self {
        TestCase {
            prop: ex.prop,
            query: ex.query.clone(),
            setup_len: ex.setup_len,
            steps: ex.steps.clone(),
        }
    }

    pub fn candidate(&self) -> CandidateSequence {
        CandidateSequence {
            steps: self.steps.clone(),
            shape: shape_constraints(self.prop),
            setup_len: self.setup_len,
        }
    }
}

pub fn test_case_to_value(case: &TestCase) -> Value {
    json!({
        "format": CASE_FORMAT,
        "version": FORMAT_VERSION,
        "property": case.prop.as_str(),
        "query": query_to_value(case.query.as_ref()),
        "setup-len": case.setup_len,
        "reset-before-replay": true,
        "steps": steps_to_value(&case.steps),
    })
}

/// Test-case document for an example. Values the discovering run bound
/// from responses stay symbolic.
pub fn emit_test_case(ex: &GeneratedExample) -> String {
    pretty(&test_case_to_value(&TestCase::from_example(ex)))
}

pub fn parse_test_case(text: &str) -> Result<TestCase, ReportError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| ReportError::Syntax(e.to_string()))?;
    if doc.get("format").and_then(Value::as_str) != Some(CASE_FORMAT) {
        return Err(invalid("document", format!("format must be `{CASE_FORMAT}`")));
    }
    let prop = prop_from_value(doc.get("property"), "document")?;
    let query = query_from_value(doc.get("query"), "document")?;
    if prop.is_state_based() && query.is_none() {
        return Err(invalid("document", format!("{} needs a query", prop.as_str())));
    }
    Ok(TestCase {
        prop,
        query,
        setup_len: usize_field(&doc, "setup-len", "document")?,
        steps: steps_from_value(doc.get("steps"), "document")?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutcome {
    pub holds: bool,
    pub trace: ExecutionTrace,
}

/// Resets the system, executes the case (re-resolving symbols from fresh
/// responses) and checks the asserted property.
pub fn replay(case: &TestCase, adapter: &mut dyn Adapter, amos: &Amos) -> Result<ReplayOutcome, TransportError> {
    let trace = run_trial(&case.candidate(), adapter, amos, case.query.as_ref())?;
    let holds = evaluate(case.prop, &trace, case.query.as_ref()).unwrap_or(false);
    Ok(ReplayOutcome { holds, trace })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn groups_example() -> GeneratedExample {
        let r = SymbolicRef {
            step: 1,
            source: Source::Response,
            path: vec![PathStep::Index(0), PathStep::Key("id".into())],
        };
        GeneratedExample {
            prop: MetaPropertyId::MpS3,
            steps: vec![
                Step {
                    op: "post-groups".into(),
                    params: Some(Param::from_value(&json!({"name": "a", "path": "a"}))),
                },
                Step {
                    op: "get-groups".into(),
                    params: None,
                },
                Step {
                    op: "delete-groups".into(),
                    params: Some(Param::Map([("id".to_string(), Param::Ref(r))].into())),
                },
            ],
            setup_len: 0,
            query: Some(QueryContext::new("get-groups")),
            symbols: vec![SymbolBinding {
                symbol: "a".into(),
                step: 1,
                source: Source::Response,
                op: "get-groups".into(),
                sample: json!([{"id": 1, "name": "a", "path": "a"}]),
            }],
            key: "k".into(),
            truncated: false,
        }
    }

    #[test]
    fn reference_line() {
        let lines = render_example(&groups_example());
        assert_eq!(lines[0], "MP-S-3 get-groups");
        assert_eq!(lines[1], r#"1. call post-groups with {"name": "a", "path": "a"}"#);
        assert_eq!(lines[2], "2. call get-groups with no parameters");
        assert_eq!(
            lines[3],
            r#"3. call delete-groups with {"id": a (= 1, from get-groups response at [0, "id"])}"#
        );
    }

    #[test]
    fn empty_prop_line() {
        let result = ExplorationResult {
            props: vec![PropResult {
                prop: MetaPropertyId::MpS4,
                examples: vec![],
                trials: 500,
            }],
            warnings: vec![],
        };
        assert_eq!(render_human(&result), ["MP-S-4: No example found"]);
    }

    #[test]
    fn data_round_trip() {
        let result = ExplorationResult {
            props: vec![PropResult {
                prop: MetaPropertyId::MpS3,
                examples: vec![groups_example()],
                trials: 7,
            }],
            warnings: vec!["w".into()],
        };
        assert_eq!(parse_data(&render_data(&result)).unwrap(), result);
        assert_eq!(parse_data(&render_data(&ExplorationResult::default())).unwrap(), ExplorationResult::default());
    }

    #[test]
    fn case_keeps_symbol_not_sample() {
        let text = emit_test_case(&groups_example());
        let doc: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(doc["steps"][2]["params"]["map"]["id"]["ref"]["step"], json!(1));
        assert!(!text.contains("sample"));
        let case = parse_test_case(&text).unwrap();
        assert_eq!(case.steps, groups_example().steps);
    }
}
