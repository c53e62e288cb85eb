//! Candidate sequence generation: shapes, parameter modes and symbolic
//! references.
//!
//! Generation is pure. Responses are not known until execution, so a
//! response with a declared schema is represented in the reference pool by a
//! minimal witness value of that schema; a response without one can only be
//! referenced as a whole.

use std::collections::BTreeMap;
use std::fmt;

use serde_json::{Map, Value};
use thiserror::Error;

use crate::amos::{conforms, resolve, Amos, ParamSchema, SchemaError};
use crate::metaprops::Shape;
use crate::rng::Rng;
use crate::value::{lookup, sub_values, PathStep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Source {
    Param,
    Response,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Param => "param",
            Source::Response => "response",
        }
    }
}

/// Backward reference to the parameter tree or response of an earlier step.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymbolicRef {
    pub step: usize,
    pub source: Source,
    pub path: Vec<PathStep>,
}

/// Parameter tree whose leaves are literals or symbolic references.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Param {
    Lit(Value),
    Ref(SymbolicRef),
    Map(BTreeMap<String, Param>),
    List(Vec<Param>),
}

impl Param {
    /// Structures a concrete value so that maps and arrays become nodes.
    pub fn from_value(v: &Value) -> Param {
        match v {
            Value::Object(m) => Param::Map(m.iter().map(|(k, v)| (k.clone(), Param::from_value(v))).collect()),
            Value::Array(a) => Param::List(a.iter().map(Param::from_value).collect()),
            other => Param::Lit(other.clone()),
        }
    }

    pub fn refs(&self) -> Vec<&SymbolicRef> {
        let mut out = Vec::new();
        self.collect_refs(&mut out);
        out
    }

    fn collect_refs<'a>(&'a self, out: &mut Vec<&'a SymbolicRef>) {
        match self {
            Param::Lit(_) => {}
            Param::Ref(r) => out.push(r),
            Param::Map(m) => m.values().for_each(|p| p.collect_refs(out)),
            Param::List(l) => l.iter().for_each(|p| p.collect_refs(out)),
        }
    }

    pub fn refs_mut(&mut self) -> Vec<&mut SymbolicRef> {
        let mut out = Vec::new();
        self.collect_refs_mut(&mut out);
        out
    }

    fn collect_refs_mut<'a>(&'a mut self, out: &mut Vec<&'a mut SymbolicRef>) {
        match self {
            Param::Lit(_) => {}
            Param::Ref(r) => out.push(r),
            Param::Map(m) => m.values_mut().for_each(|p| p.collect_refs_mut(out)),
            Param::List(l) => l.iter_mut().for_each(|p| p.collect_refs_mut(out)),
        }
    }

    /// True when the tree carries at least one value.
    pub fn is_non_empty(&self) -> bool {
        match self {
            Param::Map(m) => !m.is_empty(),
            Param::List(l) => !l.is_empty(),
            _ => true,
        }
    }

    /// The concrete value, when the tree holds no references.
    pub fn as_concrete(&self) -> Option<Value> {
        match self {
            Param::Lit(v) => Some(v.clone()),
            Param::Ref(_) => None,
            Param::Map(m) => m
                .iter()
                .map(|(k, p)| p.as_concrete().map(|v| (k.clone(), v)))
                .collect::<Option<Map<String, Value>>>()
                .map(Value::Object),
            Param::List(l) => l.iter().map(Param::as_concrete).collect::<Option<Vec<_>>>().map(Value::Array),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub op: String,
    pub params: Option<Param>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSequence {
    pub steps: Vec<Step>,
    pub shape: Shape,
    pub setup_len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ParamMode {
    RandomValue,
    ParamReference,
    ResponseReference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModePolicy {
    RandomOnly,
    ReferencesAllowed,
}

impl ModePolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            ModePolicy::RandomOnly => "random",
            ModePolicy::ReferencesAllowed => "refs",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("schema cannot be satisfied: {0}")]
    Unsatisfiable(String),
    #[error("the catalogue has no operations")]
    NoOperations,
    #[error(transparent)]
    Schema(#[from] SchemaError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("symbol from step {step} {} is not bound", .origin.as_str())]
    Unbound { step: usize, origin: Source },
    #[error("path {path} does not exist in the value bound by step {step}")]
    BadPath { step: usize, path: String },
    #[error("referenced values do not fit the parameters of `{op}`")]
    Mismatch { op: String },
}

/// Letter names for symbols: a..z, then aa, ab, ...
pub fn symbol_name(mut n: usize) -> String {
    let mut out = Vec::new();
    loop {
        out.push(b'a' + (n % 26) as u8);
        if n < 26 {
            break;
        }
        n = n / 26 - 1;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

const ALPHANUMERIC: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

/// Values reachable within a window of `2^size` around a base point.
fn int_window(size: usize) -> i64 {
    if size >= 62 {
        i64::MAX / 2
    } else {
        (1i64 << size) - 1
    }
}

pub fn minimal_int(min: Option<i64>, max: Option<i64>) -> i64 {
    let base = min.unwrap_or(0);
    match max {
        Some(m) if base > m => m,
        _ => base,
    }
}

/// Generates a conforming value whose magnitude grows with `size`. Size 0
/// gives the schema's minimal value.
pub fn generate_value(
    schema: &ParamSchema,
    rng: &mut Rng,
    size: usize,
    schemas: &BTreeMap<String, ParamSchema>,
) -> Result<Value, GenError> {
    let schema = resolve(schema, schemas)?;
    Ok(match schema {
        ParamSchema::String { min_len, max_len } => {
            let lo = min_len.unwrap_or(0);
            let hi = lo.saturating_add(size as u64).min(max_len.unwrap_or(u64::MAX));
            if lo > hi {
                return Err(GenError::Unsatisfiable(format!("string length {lo} > {hi}")));
            }
            if size == 0 {
                "a".repeat(lo as usize).into()
            } else {
                let len = rng.range_u64(lo, hi);
                (0..len)
                    .map(|_| ALPHANUMERIC[rng.below(ALPHANUMERIC.len())] as char)
                    .collect::<String>()
                    .into()
            }
        }
        ParamSchema::Int { min, max } => {
            if let (Some(lo), Some(hi)) = (min, max) {
                if lo > hi {
                    return Err(GenError::Unsatisfiable(format!("int {lo} > {hi}")));
                }
            }
            let base = minimal_int(*min, *max);
            if size == 0 {
                base.into()
            } else {
                let w = int_window(size);
                let lo = match min {
                    Some(m) => *m,
                    None => base.saturating_sub(w),
                };
                let hi = base.saturating_add(w).min(max.unwrap_or(i64::MAX));
                rng.range_i64(lo, hi).into()
            }
        }
        ParamSchema::Bool => Value::Bool(size > 0 && rng.coin()),
        ParamSchema::Enum { values } => {
            if values.is_empty() {
                return Err(GenError::Unsatisfiable("enum with no values".into()));
            }
            if size == 0 {
                values[0].clone()
            } else {
                rng.pick(values).cloned().expect("non-empty")
            }
        }
        ParamSchema::Map { fields } => {
            let mut out = Map::new();
            for (name, field) in fields {
                if field.required || (size > 0 && rng.coin()) {
                    out.insert(name.clone(), generate_value(&field.schema, rng, size, schemas)?);
                }
            }
            Value::Object(out)
        }
        ParamSchema::Vector { of, min_len, max_len } => {
            let len = vector_len(*min_len, *max_len, rng, size)?;
            (0..len)
                .map(|_| generate_value(of, rng, size, schemas))
                .collect::<Result<Vec<_>, _>>()?
                .into()
        }
        ParamSchema::Ref { .. } => unreachable!("resolved above"),
    })
}

fn vector_len(min_len: Option<u64>, max_len: Option<u64>, rng: &mut Rng, size: usize) -> Result<u64, GenError> {
    let lo = min_len.unwrap_or(0);
    let hi = lo.saturating_add(size as u64).min(max_len.unwrap_or(u64::MAX));
    if lo > hi {
        return Err(GenError::Unsatisfiable(format!("vector length {lo} > {hi}")));
    }
    Ok(if size == 0 { lo } else { rng.range_u64(lo, hi) })
}

/// Smallest conforming value with every declared field present and one
/// element per vector. Stands in for a response whose schema is declared.
pub fn witness(schema: &ParamSchema, schemas: &BTreeMap<String, ParamSchema>) -> Result<Value, GenError> {
    let schema = resolve(schema, schemas)?;
    Ok(match schema {
        ParamSchema::String { min_len, .. } => "a".repeat(min_len.unwrap_or(0) as usize).into(),
        ParamSchema::Int { min, max } => minimal_int(*min, *max).into(),
        ParamSchema::Bool => false.into(),
        ParamSchema::Enum { values } => values
            .first()
            .cloned()
            .ok_or_else(|| GenError::Unsatisfiable("enum with no values".into()))?,
        ParamSchema::Map { fields } => Value::Object(
            fields
                .iter()
                .map(|(k, f)| witness(&f.schema, schemas).map(|v| (k.clone(), v)))
                .collect::<Result<_, _>>()?,
        ),
        ParamSchema::Vector { of, min_len, max_len } => {
            let n = min_len.unwrap_or(0).max(1).min(max_len.unwrap_or(u64::MAX));
            (0..n).map(|_| witness(of, schemas)).collect::<Result<Vec<_>, _>>()?.into()
        }
        ParamSchema::Ref { .. } => unreachable!("resolved above"),
    })
}

/// A bound value available for reference during generation. `value` is
/// `None` when the value's shape is unknown until execution.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolEntry {
    pub step: usize,
    pub source: Source,
    pub value: Option<Value>,
}

pub fn eligible_modes(prefix: &[Step]) -> Vec<ParamMode> {
    let mut modes = vec![ParamMode::RandomValue];
    if prefix.iter().any(|s| s.params.as_ref().is_some_and(Param::is_non_empty)) {
        modes.push(ParamMode::ParamReference);
    }
    if !prefix.is_empty() {
        modes.push(ParamMode::ResponseReference);
    }
    modes
}

/// Picks a reference into `pool` uniformly among all sub-values that conform
/// to `target`. Entries of unknown shape cannot be shown to conform, so they
/// offer their root only when there is no target.
pub fn select_reference(
    pool: &[PoolEntry],
    target: Option<&ParamSchema>,
    rng: &mut Rng,
    schemas: &BTreeMap<String, ParamSchema>,
) -> Option<SymbolicRef> {
    let mut candidates = Vec::new();
    for entry in pool {
        match &entry.value {
            None if target.is_some() => {}
            None => candidates.push(SymbolicRef {
                step: entry.step,
                source: entry.source,
                path: Vec::new(),
            }),
            Some(v) => {
                for (path, sub) in sub_values(v) {
                    let ok = match target {
                        None => true,
                        Some(t) => conforms(sub, t, schemas).unwrap_or(false),
                    };
                    if ok {
                        candidates.push(SymbolicRef {
                            step: entry.step,
                            source: entry.source,
                            path,
                        });
                    }
                }
            }
        }
    }
    rng.pick(&candidates).cloned()
}

struct Generator<'a> {
    amos: &'a Amos,
    policy: ModePolicy,
    size: usize,
    pool: Vec<PoolEntry>,
    prefix: Vec<Step>,
}

impl Generator<'_> {
    fn gen_param(&self, schema: &ParamSchema, rng: &mut Rng) -> Result<Param, GenError> {
        let schemas = &self.amos.schemas;
        let resolved = resolve(schema, schemas)?;
        if self.policy == ModePolicy::ReferencesAllowed {
            let modes = eligible_modes(&self.prefix);
            let mode = *rng.pick(&modes).expect("random is always eligible");
            let wanted = match mode {
                ParamMode::RandomValue => None,
                ParamMode::ParamReference => Some(Source::Param),
                ParamMode::ResponseReference => Some(Source::Response),
            };
            if let Some(source) = wanted {
                let pool: Vec<PoolEntry> = self.pool.iter().filter(|e| e.source == source).cloned().collect();
                if let Some(r) = select_reference(&pool, Some(resolved), rng, schemas) {
                    return Ok(Param::Ref(r));
                }
            }
        }
        match resolved {
            ParamSchema::Map { fields } => {
                let mut out = BTreeMap::new();
                for (name, field) in fields {
                    if field.required || (self.size > 0 && rng.coin()) {
                        out.insert(name.clone(), self.gen_param(&field.schema, rng)?);
                    }
                }
                Ok(Param::Map(out))
            }
            ParamSchema::Vector { of, min_len, max_len } => {
                let len = vector_len(*min_len, *max_len, rng, self.size)?;
                Ok(Param::List(
                    (0..len).map(|_| self.gen_param(of, rng)).collect::<Result<_, _>>()?,
                ))
            }
            other => Ok(Param::Lit(generate_value(other, rng, self.size, schemas)?)),
        }
    }

    fn gen_step(&mut self, rng: &mut Rng) -> Result<Step, GenError> {
        let ops = &self.amos.operations;
        let op = &ops[rng.below(ops.len())];
        let params = match &op.parameters {
            Some(schema) => Some(self.gen_param(schema, rng)?),
            None => None,
        };
        Ok(Step {
            op: op.key.clone(),
            params,
        })
    }

    fn push(&mut self, step: Step) -> Result<(), GenError> {
        let index = self.prefix.len();
        if let Some(p) = &step.params {
            if p.is_non_empty() {
                self.pool.push(PoolEntry {
                    step: index,
                    source: Source::Param,
                    value: approximate(p, &self.pool),
                });
            }
        }
        let op = self.amos.operation(&step.op).expect("drawn from the catalogue");
        let value = match &op.response_schema {
            Some(s) => Some(witness(s, &self.amos.schemas)?),
            None => None,
        };
        self.pool.push(PoolEntry {
            step: index,
            source: Source::Response,
            value,
        });
        self.prefix.push(step);
        Ok(())
    }
}

/// Generation-time value of a parameter tree, substituting the pool's
/// stand-ins for references. `None` if any reference has unknown shape.
fn approximate(p: &Param, pool: &[PoolEntry]) -> Option<Value> {
    match p {
        Param::Lit(v) => Some(v.clone()),
        Param::Ref(r) => pool
            .iter()
            .find(|e| e.step == r.step && e.source == r.source)
            .and_then(|e| e.value.as_ref())
            .and_then(|v| lookup(v, &r.path))
            .cloned(),
        Param::Map(m) => m
            .iter()
            .map(|(k, p)| approximate(p, pool).map(|v| (k.clone(), v)))
            .collect::<Option<Map<String, Value>>>()
            .map(Value::Object),
        Param::List(l) => l.iter().map(|p| approximate(p, pool)).collect::<Option<Vec<_>>>().map(Value::Array),
    }
}

pub fn generate_candidate(
    amos: &Amos,
    shape: Shape,
    rng: &mut Rng,
    size: usize,
    policy: ModePolicy,
) -> Result<CandidateSequence, GenError> {
    if amos.operations.is_empty() {
        return Err(GenError::NoOperations);
    }
    let mut g = Generator {
        amos,
        policy,
        size,
        pool: Vec::new(),
        prefix: Vec::new(),
    };
    let extra = rng.range_u64(0, size as u64) as usize;
    let mut setup_len = 0;
    match shape {
        Shape::Repeated => {
            let step = g.gen_step(rng)?;
            g.push(step.clone())?;
            g.push(step)?;
        }
        Shape::Bracketed => {
            let first = g.gen_step(rng)?;
            g.push(first.clone())?;
            for _ in 0..extra {
                let s = g.gen_step(rng)?;
                g.push(s)?;
            }
            g.push(first)?;
        }
        Shape::Free { setup } => {
            let len = shape.min_len() + extra;
            if setup {
                setup_len = rng.range_u64(1, len as u64 - 1) as usize;
            }
            for _ in 0..len {
                let s = g.gen_step(rng)?;
                g.push(s)?;
            }
        }
    }
    Ok(CandidateSequence {
        steps: g.prefix,
        shape,
        setup_len,
    })
}

/// Concrete values bound so far, keyed by (step, source).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bindings {
    values: BTreeMap<(usize, Source), Value>,
}

impl Bindings {
    pub fn bind(&mut self, step: usize, source: Source, value: Value) {
        let previous = self.values.insert((step, source), value);
        debug_assert!(previous.is_none(), "symbols are never rebound");
    }

    pub fn get(&self, step: usize, source: Source) -> Option<&Value> {
        self.values.get(&(step, source))
    }

    pub fn resolve_ref(&self, r: &SymbolicRef) -> Result<&Value, ResolveError> {
        let bound = self.get(r.step, r.source).ok_or(ResolveError::Unbound {
            step: r.step,
            origin: r.source,
        })?;
        lookup(bound, &r.path).ok_or_else(|| ResolveError::BadPath {
            step: r.step,
            path: crate::value::format_path(&r.path),
        })
    }
}

/// Replaces every reference in `tree` by the value it points at.
pub fn resolve_params(tree: &Param, env: &Bindings) -> Result<Value, ResolveError> {
    Ok(match tree {
        Param::Lit(v) => v.clone(),
        Param::Ref(r) => env.resolve_ref(r)?.clone(),
        Param::Map(m) => Value::Object(
            m.iter()
                .map(|(k, p)| resolve_params(p, env).map(|v| (k.clone(), v)))
                .collect::<Result<_, _>>()?,
        ),
        Param::List(l) => Value::Array(l.iter().map(|p| resolve_params(p, env)).collect::<Result<_, _>>()?),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShapeViolation {
    #[error("sequence has {len} steps, shape needs at least {min}")]
    TooShort { len: usize, min: usize },
    #[error("repeated shape requires identical steps")]
    NotRepeated,
    #[error("bracketed shape requires identical first and last steps")]
    NotBracketed,
    #[error("setup prefix of {setup_len} steps does not fit the shape")]
    BadSetup { setup_len: usize },
    #[error("step {step} refers to step {target}, which is not earlier")]
    ForwardReference { step: usize, target: usize },
    #[error("step {step} names unknown operation `{op}`")]
    UnknownOperation { step: usize, op: String },
}

/// Structural check of a candidate against its shape and the catalogue.
pub fn check_shape(cand: &CandidateSequence, amos: &Amos) -> Result<(), ShapeViolation> {
    let steps = &cand.steps;
    let min = cand.shape.min_len();
    if steps.len() < min {
        return Err(ShapeViolation::TooShort { len: steps.len(), min });
    }
    for (i, s) in steps.iter().enumerate() {
        if amos.operation(&s.op).is_none() {
            return Err(ShapeViolation::UnknownOperation {
                step: i,
                op: s.op.clone(),
            });
        }
        if let Some(p) = &s.params {
            if let Some(r) = p.refs().into_iter().find(|r| r.step >= i) {
                return Err(ShapeViolation::ForwardReference { step: i, target: r.step });
            }
        }
    }
    match cand.shape {
        Shape::Repeated if steps.windows(2).any(|w| w[0] != w[1]) => Err(ShapeViolation::NotRepeated),
        Shape::Bracketed if steps[0] != steps[steps.len() - 1] => Err(ShapeViolation::NotBracketed),
        Shape::Free { setup: true } if cand.setup_len == 0 || cand.setup_len >= steps.len() => {
            Err(ShapeViolation::BadSetup {
                setup_len: cand.setup_len,
            })
        }
        Shape::Free { setup: false } if cand.setup_len != 0 => Err(ShapeViolation::BadSetup {
            setup_len: cand.setup_len,
        }),
        _ => Ok(()),
    }
}

impl fmt::Display for SymbolicRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "step {} {} {}",
            self.step,
            self.source.as_str(),
            crate::value::format_path(&self.path)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amos::parse_amos;
    use crate::fixtures;
    use serde_json::json;

    fn persons() -> Amos {
        parse_amos(fixtures::PERSONS_AMOS).unwrap()
    }

    #[test]
    fn int_stays_in_range() {
        let table = BTreeMap::new();
        let s = ParamSchema::int(Some(0), Some(130));
        let mut rng = Rng::new(3);
        for size in 0..200 {
            let v = generate_value(&s, &mut rng, size, &table).unwrap().as_i64().unwrap();
            assert!((0..=130).contains(&v));
        }
    }

    #[test]
    fn size_zero_string_is_empty() {
        let v = generate_value(&ParamSchema::string(), &mut Rng::new(1), 0, &BTreeMap::new()).unwrap();
        assert_eq!(v, json!(""));
    }

    #[test]
    fn size_zero_minimal_forms() {
        let t = BTreeMap::new();
        let mut r = Rng::new(0);
        let s = ParamSchema::String {
            min_len: Some(2),
            max_len: None,
        };
        assert_eq!(generate_value(&s, &mut r, 0, &t).unwrap(), json!("aa"));
        assert_eq!(generate_value(&ParamSchema::int(None, None), &mut r, 0, &t).unwrap(), json!(0));
        assert_eq!(generate_value(&ParamSchema::int(Some(5), None), &mut r, 0, &t).unwrap(), json!(5));
    }

    #[test]
    fn person_has_required_fields() {
        let amos = persons();
        let schema = ParamSchema::named("person");
        let mut rng = Rng::new(11);
        for size in 0..50 {
            let v = generate_value(&schema, &mut rng, size, &amos.schemas).unwrap();
            assert!(v.get("name").is_some() && v.get("age").is_some());
            assert!(conforms(&v, &schema, &amos.schemas).unwrap());
        }
    }

    #[test]
    fn unsatisfiable_reported() {
        let s = ParamSchema::int(Some(5), Some(1));
        assert!(matches!(
            generate_value(&s, &mut Rng::new(0), 3, &BTreeMap::new()),
            Err(GenError::Unsatisfiable(_))
        ));
    }

    #[test]
    fn modes_by_prefix() {
        assert_eq!(eligible_modes(&[]), vec![ParamMode::RandomValue]);
        let post = Step {
            op: "post-person".into(),
            params: Some(Param::from_value(&json!({"name": "", "age": 0}))),
        };
        assert_eq!(eligible_modes(std::slice::from_ref(&post)).len(), 3);
        let get = Step {
            op: "get-persons".into(),
            params: None,
        };
        assert_eq!(
            eligible_modes(&[get]),
            vec![ParamMode::RandomValue, ParamMode::ResponseReference]
        );
    }

    #[test]
    fn reference_into_vector_element() {
        let target = ParamSchema::map([("id", ParamSchema::int(None, None), true)]);
        let pool = [PoolEntry {
            step: 0,
            source: Source::Response,
            value: Some(json!([{"id": 7, "name": "x"}])),
        }];
        let r = select_reference(&pool, Some(&target), &mut Rng::new(2), &BTreeMap::new()).unwrap();
        assert_eq!(r.path, vec![PathStep::Index(0)]);
        assert!(select_reference(&[], Some(&target), &mut Rng::new(2), &BTreeMap::new()).is_none());
        assert!(select_reference(&pool, None, &mut Rng::new(2), &BTreeMap::new()).is_some());
    }

    #[test]
    fn resolve_examples() {
        let mut env = Bindings::default();
        env.bind(0, Source::Response, json!([{"id": 3}]));
        let r = Param::Ref(SymbolicRef {
            step: 0,
            source: Source::Response,
            path: vec![PathStep::Index(0), PathStep::Key("id".into())],
        });
        assert_eq!(resolve_params(&r, &env).unwrap(), json!(3));
        let plain = Param::from_value(&json!({"name": "q"}));
        assert_eq!(resolve_params(&plain, &env).unwrap(), json!({"name": "q"}));
        let dangling = Param::Ref(SymbolicRef {
            step: 25,
            source: Source::Response,
            path: vec![],
        });
        assert!(matches!(resolve_params(&dangling, &env), Err(ResolveError::Unbound { .. })));
    }

    #[test]
    fn shapes_hold() {
        let amos = persons();
        for seed in 0..50 {
            let mut rng = Rng::new(seed);
            let c = generate_candidate(&amos, Shape::Repeated, &mut rng, 10, ModePolicy::ReferencesAllowed).unwrap();
            assert_eq!(c.steps.len(), 2);
            assert_eq!(c.steps[0], c.steps[1]);
            let c = generate_candidate(&amos, Shape::Bracketed, &mut rng, 10, ModePolicy::ReferencesAllowed).unwrap();
            assert_eq!(c.steps.first(), c.steps.last());
            let c = generate_candidate(&amos, Shape::Free { setup: true }, &mut rng, 10, ModePolicy::ReferencesAllowed)
                .unwrap();
            assert!(c.setup_len >= 1 && c.setup_len < c.steps.len());
            check_shape(&c, &amos).unwrap();
        }
    }

    #[test]
    fn symbol_names() {
        assert_eq!(symbol_name(0), "a");
        assert_eq!(symbol_name(25), "z");
        assert_eq!(symbol_name(26), "aa");
        assert_eq!(symbol_name(27), "ab");
    }
}
